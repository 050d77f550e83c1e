#include "pathnewton/constraints.hpp"

#include <algorithm>
#include <cmath>

namespace pathnewton {

NetworkInstance augmented_instance(const NetworkInstance& base,
                                   const std::vector<double>& multipliers,
                                   double penalty) {
  if (!(penalty > 0.0))
    throw ContractViolation("augmented_instance: penalty must be positive");
  NetworkInstance out = base;
  out.equalities.reset();
  out.nonneg_paths.clear();

  if (base.equalities) {
    const EqualityConstraints& eq = *base.equalities;
    if (static_cast<int>(multipliers.size()) != eq.num_rows())
      throw ContractViolation("augmented_instance: one multiplier per equality row");
    CouplingBlock block;
    block.name = "eq-penalty";
    for (int i = 0; i < eq.num_rows(); ++i) {
      block.arc_costs.push_back(
          ScalarCostFn::quadratic(penalty, eq.rhs[i], multipliers[i]));
      for (const auto& [path, coeff] : eq.rows[i])
        block.entries.push_back({i, path, coeff});
    }
    out.blocks.push_back(std::move(block));
  } else if (!multipliers.empty()) {
    throw ContractViolation("augmented_instance: multipliers given without equalities");
  }

  if (!base.nonneg_paths.empty()) {
    CouplingBlock block;
    block.name = "bound-penalty";
    int arc = 0;
    for (int p : base.nonneg_paths) {
      block.arc_costs.push_back(ScalarCostFn::neg_part_penalty(penalty));
      block.entries.push_back({arc++, p, 1.0});
    }
    out.blocks.push_back(std::move(block));
  }
  return out;
}

std::vector<double> equality_residuals(const NetworkInstance& instance,
                                       const std::vector<double>& x) {
  std::vector<double> res;
  if (!instance.equalities) return res;
  const EqualityConstraints& eq = *instance.equalities;
  res.resize(eq.num_rows(), 0.0);
  for (int i = 0; i < eq.num_rows(); ++i) {
    for (const auto& [path, coeff] : eq.rows[i]) res[i] += coeff * x[path];
    res[i] -= eq.rhs[i];
  }
  return res;
}

double bound_violation_inf(const NetworkInstance& instance,
                           const std::vector<double>& x) {
  double worst = 0.0;
  for (int p : instance.nonneg_paths) worst = std::max(worst, -x[p]);
  return std::max(worst, 0.0);
}

namespace {

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double value : v) m = std::max(m, std::abs(value));
  return m;
}

} // namespace

ConstrainedReport solve_constrained(const NetworkInstance& instance,
                                    const std::vector<double>& x0,
                                    const ConstrainedConfig& config,
                                    const InnerSolver& inner) {
  const InnerSolver solve =
      inner ? inner
            : InnerSolver([](const NetworkInstance& inst, const std::vector<double>& start,
                             const NewtonConfig& cfg) { return minimize(inst, start, cfg); });

  ConstrainedReport report;
  report.x = x0;

  const bool has_eq = instance.equalities.has_value();
  const bool has_bounds = !instance.nonneg_paths.empty();
  if (!has_eq && !has_bounds) {
    report.last_inner = solve(instance, x0, config.inner);
    report.x = report.last_inner.x;
    report.status = report.last_inner.status;
    report.feasible = true;
    report.rounds = 1;
    return report;
  }

  const int num_rows = has_eq ? instance.equalities->num_rows() : 0;
  report.multipliers.assign(num_rows, 0.0);

  double penalty = config.initial_penalty;
  if (penalty <= 0.0) {
    // Balance the penalty against the shape of the objective at the start:
    // steep objectives need a stiffer penalty before the residual moves.
    const FlowState s0 = refresh(instance, x0);
    const double g_inf = inf_norm(gradient(s0));
    std::vector<double> res0 = equality_residuals(instance, x0);
    const double v0 = std::max(inf_norm(res0), bound_violation_inf(instance, x0));
    penalty = 10.0 * std::max(1.0, g_inf) / std::max(1.0, v0);
  }

  double prev_violation = kInf;
  for (int round = 1; round <= config.max_rounds; ++round) {
    const NetworkInstance sub =
        augmented_instance(instance, report.multipliers, penalty);
    report.last_inner = solve(sub, report.x, config.inner);
    report.x = report.last_inner.x;
    report.status = report.last_inner.status;
    report.rounds = round;

    const std::vector<double> res = equality_residuals(instance, report.x);
    const double violation =
        std::max(inf_norm(res), bound_violation_inf(instance, report.x));
    report.violation_history.push_back(violation);

    for (int i = 0; i < num_rows; ++i)
      report.multipliers[i] += penalty * res[i];

    if (violation <= config.feas_tol) {
      report.feasible = true;
      break;
    }
    if (violation > config.required_decay * prev_violation)
      penalty *= config.penalty_growth;
    prev_violation = violation;
  }

  report.penalty = penalty;
  return report;
}

} // namespace pathnewton
