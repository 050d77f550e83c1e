#pragma once

#include <cstdint>
#include <vector>

#include "pathnewton/instance.hpp"

namespace pathnewton {

// Running totals of the sweep work performed through a FlowState, in units
// of coupling-entry touches plus scalar cost evaluations. A full refresh of
// a state with T entries, P paths, A arcs costs T + P + A; a gradient or a
// Hessian diagonal reuses cached derivatives and costs T; one
// Hessian-vector product costs 2T (a forward and a backward sweep);
// reading the objective off a refreshed state is free.
struct OpCounter {
  std::int64_t refresh = 0;
  std::int64_t gradient = 0;
  std::int64_t hessian_diagonal = 0;
  std::int64_t hvp = 0;

  std::int64_t total() const { return refresh + gradient + hessian_diagonal + hvp; }
};

// Point-local cache of everything the solvers read: arc flows f = E x per
// block, scalar cost values and first two derivatives at every arc and
// path. Derivative arrays are indexed like the instance (per-block arc
// arrays, flat path arrays).
struct FlowState {
  const NetworkInstance* instance = nullptr;
  std::vector<double> x;

  std::vector<std::vector<double>> arc_flow;   // [block][arc]
  std::vector<std::vector<double>> arc_value;  // D_a(f_a)
  std::vector<std::vector<double>> arc_d1;     // D_a'(f_a)
  std::vector<std::vector<double>> arc_d2;     // D_a''(f_a)
  std::vector<double> path_value;              // R_p(x_p)
  std::vector<double> path_d1;
  std::vector<double> path_d2;

  std::int64_t revision = 0;
  mutable OpCounter ops;
};

// Grouped summation recipe mirroring how a tree reduction folds partial
// sums: each group is one subtotal (a path's own cost plus the arc values
// folded at that path, left to right), and the grand total adds group
// subtotals left to right. Floating-point addition is not associative, so
// reproducing a reduction bitwise requires the grouping, not just an order.
struct SumGroup {
  int path = -1;                         // -1 for arc-only groups
  std::vector<std::pair<int, int>> arcs; // (block, arc) in addition order
};
using SumOrder = std::vector<SumGroup>;

// Builds a fresh state at x. Throws DomainViolation if any arc flow or
// path variable leaves its cost's domain, ContractViolation on bad sizes.
FlowState refresh(const NetworkInstance& instance, const std::vector<double>& x);

// Re-evaluates an existing state at a new point, keeping op counters.
void refresh_in_place(FlowState& state, const std::vector<double>& x);

// Sum of all arc and path cost values, accumulated in declaration order
// (paths first, then blocks, ascending ids).
double objective(const FlowState& state);

// Same sum accumulated with the caller's grouping. Throws
// ContractViolation if the order does not name every term exactly once.
double objective_ordered(const FlowState& state, const SumOrder& order);

// g_p = R_p'(x_p) + sum over entries (a,p) of c_ap D_a'(f_a).
std::vector<double> gradient(const FlowState& state);

// H_pp = R_p''(x_p) + sum over entries (a,p) of c_ap^2 D_a''(f_a).
std::vector<double> hessian_diagonal(const FlowState& state);

// w = H v without forming H: one forward sweep builds per-arc inner
// products f_av = sum_p c_ap v_p, one backward sweep accumulates
// w_p = R_p'' v_p + sum_a c_ap D_a'' f_av.
std::vector<double> hessian_vector_product(const FlowState& state,
                                           const std::vector<double>& v);

// Largest t >= 0 keeping x + s y inside every cost domain for all
// s in [0, t); +inf when no domain bound is approached.
double max_feasible_step(const FlowState& state, const std::vector<double>& y);

struct DenseMatrix {
  int n = 0;
  std::vector<double> a; // row-major, n*n

  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

// Explicitly assembled Hessian for cross-checking the matrix-free product;
// refuses instances above max_paths to keep it an oracle, not a solver.
DenseMatrix dense_hessian_oracle(const NetworkInstance& instance,
                                 const std::vector<double>& x,
                                 int max_paths = 200);

// Singleton groups in declaration order (paths ascending, then each
// block's arcs); summing it reproduces `objective` exactly.
SumOrder natural_sum_order(const NetworkInstance& instance);

} // namespace pathnewton
