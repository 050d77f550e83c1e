#pragma once

#include <functional>
#include <vector>

#include "pathnewton/newton.hpp"

namespace pathnewton {

// Inner minimizer used for each penalized subproblem; defaults to the
// centralized `minimize`, and the CLI swaps in the simulated-network solver
// so constrained runs work in either mode.
using InnerSolver = std::function<NewtonReport(
    const NetworkInstance&, const std::vector<double>&, const NewtonConfig&)>;

struct ConstrainedConfig {
  NewtonConfig inner;
  double feas_tol = 1e-8;        // on the max-norm of all constraint residuals
  int max_rounds = 30;
  double penalty_growth = 10.0;  // multiplier on c when progress stalls
  double required_decay = 0.25;  // residual must shrink below this fraction
  double initial_penalty = 0.0;  // 0 picks a gradient-scaled default
};

struct ConstrainedReport {
  std::vector<double> x;
  std::vector<double> multipliers; // one per equality row
  double penalty = 0.0;            // final c
  int rounds = 0;
  bool feasible = false;
  std::vector<double> violation_history; // max-norm residual after each round
  NewtonReport last_inner;
  SolveStatus status = SolveStatus::MaxIters;
};

// Copy of `base` with the constraints folded into the objective: each
// equality row becomes one arc of a synthetic block with cost
// c/2 (z - b_i)^2 + lambda_i z (off by the constant lambda'b from the
// textbook multiplier term, which moves no minimizer), and each
// nonnegative path gets a one-entry arc charging c/2 max(0, -x_p)^2.
// The copy carries no equalities or sign marks of its own.
NetworkInstance augmented_instance(const NetworkInstance& base,
                                   const std::vector<double>& multipliers,
                                   double penalty);

// Equality residuals B x - b; empty when the instance has none.
std::vector<double> equality_residuals(const NetworkInstance& instance,
                                       const std::vector<double>& x);

// Largest shortfall max(0, -x_p) over the sign-constrained paths.
double bound_violation_inf(const NetworkInstance& instance,
                           const std::vector<double>& x);

// Method-of-multipliers loop: minimize the augmented objective, step the
// multipliers by c times the residual, grow c when the residual max-norm
// fails to shrink by required_decay, repeat until feasible or out of
// rounds. Instances without constraints collapse to one inner solve.
ConstrainedReport solve_constrained(const NetworkInstance& instance,
                                    const std::vector<double>& x0,
                                    const ConstrainedConfig& config = {},
                                    const InnerSolver& inner = {});

} // namespace pathnewton
