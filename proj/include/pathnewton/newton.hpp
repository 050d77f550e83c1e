#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pathnewton/calculus.hpp"
#include "pathnewton/cg.hpp"

namespace pathnewton {

enum class Method { NewtonCG, DiagScaledGradient, SteepestDescent };

// How the per-iteration CG tolerance is chosen. SqrtGradient tightens the
// inner solves as the gradient shrinks: tol = min(0.5, sqrt(|g|_2)),
// floored at the configured CG tolerance. Fixed uses the CG tolerance as is.
enum class ForcingRule { SqrtGradient, Fixed };

struct ArmijoRule {
  double sigma = 1e-4;      // sufficient-decrease slope fraction
  double backtrack = 0.5;   // stepsize multiplier per rejection
  double initial = 1.0;
  int max_backtracks = 60;
};

struct StepsizeRule {
  enum class Kind { Armijo, Constant };
  Kind kind = Kind::Armijo;
  ArmijoRule armijo;
  double constant = 1.0; // used by Kind::Constant

  static StepsizeRule constant_step(double alpha);
};

struct NewtonConfig {
  Method method = Method::NewtonCG;
  Preconditioner::Kind precond = Preconditioner::Kind::None;
  CgConfig cg;
  ForcingRule forcing = ForcingRule::SqrtGradient;
  StepsizeRule stepsize;
  double grad_tol = 1e-8;            // on the gradient's max norm
  int max_outer = 100;
  // Trial steps stop at this fraction of the distance to the nearest
  // cost-domain boundary, keeping every evaluation strictly inside.
  double feasibility_fraction = 0.99;
  const SumOrder* sum_order = nullptr; // optional fixed objective summation order
  bool collect_timing = false;         // fill elapsed_seconds in trace rows
};

enum class SolveStatus { Converged, MaxIters, LineSearchFailure };

const char* solve_status_name(SolveStatus status);

struct TraceRow {
  int outer_iter = 0;
  double objective_value = 0.0;
  double grad_inf_norm = 0.0;
  std::string direction_source = "-"; // cg | cg-escape | gradient | scaled-gradient
  int cg_iters = 0;
  std::string cg_termination = "-"; // "-" when no CG ran this iteration
  double stepsize = 0.0;
  std::int64_t op_count = 0; // cumulative sweep work, see OpCounter
  std::int64_t op_delta = 0; // work done by this iteration alone
  double elapsed_seconds = 0.0;
};

struct NewtonReport {
  SolveStatus status = SolveStatus::MaxIters;
  std::vector<TraceRow> trace; // row 0 describes the initial point
  std::vector<double> x;
  double objective_value = 0.0;
  double grad_inf_norm = 0.0;
  OpCounter ops;
  int total_cg_iters = 0;
};

// Outer minimization loop over a feasible starting point. Throws
// DomainViolation if x0 itself is outside a cost domain.
NewtonReport minimize(const NetworkInstance& instance, const std::vector<double>& x0,
                      const NewtonConfig& config = {});

struct LineSearchResult {
  double stepsize = 0.0;
  double objective_value = 0.0;
  int backtracks = 0;
  bool success = false;
};

// Backtracking search along `direction` from the point `state` currently
// holds. On success the state is left refreshed at the accepted point; on
// failure it is restored to the starting point. `initial_step` must already
// respect domain feasibility.
LineSearchResult armijo_search(FlowState& state, const std::vector<double>& g,
                               const std::vector<double>& direction,
                               double initial_step, const ArmijoRule& rule,
                               const SumOrder* order = nullptr);

} // namespace pathnewton
