#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pathnewton/costs.hpp"

namespace pathnewton {

// One nonzero of the weighted arc-path incidence matrix of a block:
// path `path` contributes `weight` units of its flow to arc `arc`.
struct CouplingEntry {
  int arc = 0;
  int path = 0;
  double weight = 1.0;

  bool operator==(const CouplingEntry&) const = default;
};

// A group of arcs sharing one incidence matrix. Several blocks let an
// instance stack independent coupling structures (e.g. a physical network
// plus a synthetic penalty block) over the same path variables.
struct CouplingBlock {
  std::string name;
  std::vector<std::string> arc_names;   // may be empty (auto-named)
  std::vector<ScalarCostFn> arc_costs;  // size = number of arcs
  std::vector<CouplingEntry> entries;

  int num_arcs() const { return static_cast<int>(arc_costs.size()); }
};

// Optional linear equality constraints B x = b in sparse row form.
struct EqualityConstraints {
  // rows[i] lists (path, coefficient) pairs of row i of B.
  std::vector<std::vector<std::pair<int, double>>> rows;
  std::vector<double> rhs;

  int num_rows() const { return static_cast<int>(rhs.size()); }
};

struct NetworkInstance {
  int num_paths = 0;
  std::vector<std::string> path_names;  // may be empty (auto-named)
  std::vector<ScalarCostFn> path_costs; // size = num_paths
  std::vector<CouplingBlock> blocks;
  std::optional<EqualityConstraints> equalities;
  // Paths with a zero lower bound; empty means unconstrained signs.
  std::vector<int> nonneg_paths;

  int total_arcs() const;
  int total_entries() const;
};

struct ValidationReport {
  std::vector<std::string> violations;
  int num_paths = 0;
  int total_arcs = 0;
  int total_entries = 0;

  bool ok() const { return violations.empty(); }
};

// Structural and parameter checks; collects every problem instead of
// stopping at the first one. Never throws.
ValidationReport validate(const NetworkInstance& instance);

// The (path, weight) pairs of one arc's incidence row, sorted by path id.
// Throws ContractViolation for out-of-range block or arc ids.
std::vector<std::pair<int, double>> incidence_row(const NetworkInstance& instance,
                                                  int block, int arc);

// Canonical entry order used by the serializer and by the distributed
// equivalence argument: ascending (arc, path) within each block.
void sort_entries(NetworkInstance& instance);

// Human-readable labels used in error messages; fall back to numeric ids
// when the instance carries no names.
std::string path_display_name(const NetworkInstance& instance, int path);
std::string arc_display_name(const NetworkInstance& instance, int block, int arc);

} // namespace pathnewton
