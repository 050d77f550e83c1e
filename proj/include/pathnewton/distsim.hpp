#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pathnewton/newton.hpp"

namespace pathnewton {

// One logical processor of the simulated network: a coordinator, one
// processor per path, one per (block, arc). Ordering is
// Leader < paths (by id) < arcs (by block, then id); inbox sorting, tree
// child lists, and reduction folds all rely on it.
struct ProcessorId {
  enum class Kind { Leader = 0, Path = 1, Arc = 2 };
  Kind kind = Kind::Leader;
  int block = 0; // arcs only
  int index = 0; // path id or arc id

  static ProcessorId leader() { return {}; }
  static ProcessorId path(int p) { return {Kind::Path, 0, p}; }
  static ProcessorId arc(int block, int arc) { return {Kind::Arc, block, arc}; }

  auto operator<=>(const ProcessorId&) const = default;
  std::string str() const;
};

struct SimMessage {
  enum class Kind { PathContribution, ArcFeedback, ReduceUp, Broadcast };

  int round = 0;
  ProcessorId src;
  ProcessorId dst;
  Kind kind = Kind::Broadcast;
  // Protocol phase discriminator (which sweep a contribution belongs to,
  // which reduction a partial feeds, which command a broadcast carries).
  int tag = 0;
  std::vector<double> values;
};

// Reduction/broadcast overlay: every path hangs off the Leader, every arc
// off one of its member paths (arcs no path touches hang off the Leader).
struct SpanningTree {
  std::map<ProcessorId, ProcessorId> parent; // Leader maps to itself
  std::map<ProcessorId, std::vector<ProcessorId>> children; // ascending

  std::uint64_t hash() const;
};

// Deterministic for a given (instance, seed). Seed 0 parents each arc
// under its lowest-id member path; other seeds pick a pseudo-random member.
SpanningTree build_topology(const NetworkInstance& instance, std::uint64_t seed);

struct SimStats {
  int rounds = 0;
  std::int64_t total_messages = 0;
  std::int64_t path_contributions = 0;
  std::int64_t arc_feedbacks = 0;
  std::int64_t reduce_ups = 0;
  std::int64_t broadcasts = 0;
  // PathContribution + ArcFeedback traffic of Hessian-product sweeps;
  // exactly 2T per conjugate-gradient iteration.
  std::int64_t cg_sweep_messages = 0;
  int cg_iterations = 0;
  // Messages attributed to each outer iteration (index 0 covers the
  // initial refresh).
  std::vector<std::int64_t> messages_per_outer;
};

struct DistributedRun {
  NewtonReport report;
  SimStats stats;
};

// Runs the same outer algorithm as `minimize`, but every quantity moves as
// an explicit message: flows and Hessian products as two-phase
// path/arc sweeps, every scalar as a tree reduction folded in fixed child
// order, stepsize and termination decisions broadcast from the Leader.
// config.sum_order and config.cg.verify_residual are centralized-only
// concerns and are ignored here. When message_log is non-null it receives
// one line per delivered message, in delivery order.
DistributedRun run_distributed_newton(const NetworkInstance& instance,
                                      const std::vector<double>& x0,
                                      const NewtonConfig& config,
                                      const SpanningTree& tree,
                                      std::string* message_log = nullptr);

// The grouped summation the tree's reduction performs: one group per path
// (its own cost plus child-arc values), then arc-only groups for arcs
// parented at the Leader. Feeding this to the centralized solver as
// config.sum_order makes the two runs agree bitwise on objective values.
SumOrder tree_sum_order(const NetworkInstance& instance, const SpanningTree& tree);

} // namespace pathnewton
