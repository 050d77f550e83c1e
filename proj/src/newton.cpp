#include "pathnewton/newton.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace pathnewton {

StepsizeRule StepsizeRule::constant_step(double alpha) {
  if (!(alpha > 0.0))
    throw ContractViolation("constant stepsize must be positive");
  StepsizeRule rule;
  rule.kind = Kind::Constant;
  rule.constant = alpha;
  return rule;
}

const char* solve_status_name(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIters: return "max-iters";
    case SolveStatus::LineSearchFailure: return "line-search-failure";
  }
  return "?";
}

namespace {

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double value : v) m = std::max(m, std::abs(value));
  return m;
}

double two_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double value : v) s += value * value;
  return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double eval_objective(const FlowState& state, const SumOrder* order) {
  return order ? objective_ordered(state, *order) : objective(state);
}

} // namespace

LineSearchResult armijo_search(FlowState& state, const std::vector<double>& g,
                               const std::vector<double>& direction,
                               double initial_step, const ArmijoRule& rule,
                               const SumOrder* order) {
  const std::vector<double> x0 = state.x;
  const double f0 = eval_objective(state, order);
  const double slope = dot(g, direction);

  LineSearchResult out;
  double alpha = initial_step;
  std::vector<double> trial(x0.size());
  for (int k = 0; k <= rule.max_backtracks; ++k) {
    for (std::size_t i = 0; i < x0.size(); ++i)
      trial[i] = x0[i] + alpha * direction[i];
    // The feasibility cap keeps trials inside every cost domain up to
    // rounding; a trial that still lands outside is simply rejected (the
    // NaN fails the acceptance test below).
    double f_trial;
    try {
      refresh_in_place(state, trial);
      f_trial = eval_objective(state, order);
    } catch (const DomainViolation&) {
      f_trial = std::numeric_limits<double>::quiet_NaN();
    }
    if (f_trial <= f0 + rule.sigma * alpha * slope) {
      out.stepsize = alpha;
      out.objective_value = f_trial;
      out.backtracks = k;
      out.success = true;
      return out;
    }
    alpha *= rule.backtrack;
  }

  refresh_in_place(state, x0);
  out.backtracks = rule.max_backtracks + 1;
  return out;
}

NewtonReport minimize(const NetworkInstance& instance, const std::vector<double>& x0,
                      const NewtonConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    if (!config.collect_timing) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
        .count();
  };

  FlowState state = refresh(instance, x0);
  double f = eval_objective(state, config.sum_order);
  std::vector<double> g = gradient(state);
  double g_inf = inf_norm(g);

  NewtonReport report;
  report.trace.push_back(
      {0, f, g_inf, "-", 0, "-", 0.0, state.ops.total(), state.ops.total(), elapsed()});

  bool line_search_failed = false;
  for (int outer = 1; outer <= config.max_outer; ++outer) {
    if (g_inf <= config.grad_tol) break;
    const std::int64_t ops_before = state.ops.total();

    std::vector<double> direction;
    int cg_iters = 0;
    std::string cg_termination = "-";
    std::string direction_source;

    switch (config.method) {
      case Method::NewtonCG: {
        Preconditioner precond;
        if (config.precond == Preconditioner::Kind::DiagHessian)
          precond = Preconditioner::from_hessian_diagonal(hessian_diagonal(state));
        else if (config.precond == Preconditioner::Kind::DiagR)
          precond = Preconditioner::from_path_curvatures(state.path_d2);

        CgConfig cg_cfg = config.cg;
        if (config.forcing == ForcingRule::SqrtGradient)
          cg_cfg.rel_residual_tol = std::max(
              config.cg.rel_residual_tol, std::min(0.5, std::sqrt(two_norm(g))));

        const HvpFn hvp = [&state](const std::vector<double>& v) {
          return hessian_vector_product(state, v);
        };
        const CgResult cg = cg_solve(hvp, g, precond, cg_cfg);
        direction = cg.y;
        cg_iters = cg.iterations;
        cg_termination = cg_termination_name(cg.termination);
        direction_source =
            cg.termination == CgTermination::ZeroCurvatureEscape ? "cg-escape" : "cg";
        report.total_cg_iters += cg.iterations;
        break;
      }
      case Method::SteepestDescent: {
        direction.resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) direction[i] = -g[i];
        direction_source = "gradient";
        break;
      }
      case Method::DiagScaledGradient: {
        const std::vector<double> h = hessian_diagonal(state);
        direction.resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i)
          direction[i] = -g[i] / (h[i] > 0.0 ? h[i] : 1.0);
        direction_source = "scaled-gradient";
        break;
      }
    }

    // Keep every trial point strictly inside the cost domains.
    const double boundary = max_feasible_step(state, direction);
    const double step_cap =
        boundary == kInf ? kInf : config.feasibility_fraction * boundary;

    double alpha;
    if (config.stepsize.kind == StepsizeRule::Kind::Constant) {
      alpha = std::min(config.stepsize.constant, step_cap);
      std::vector<double> next(state.x.size());
      for (std::size_t i = 0; i < next.size(); ++i)
        next[i] = state.x[i] + alpha * direction[i];
      refresh_in_place(state, next);
      f = eval_objective(state, config.sum_order);
    } else {
      const double initial = std::min(config.stepsize.armijo.initial, step_cap);
      const LineSearchResult ls = armijo_search(state, g, direction, initial,
                                                config.stepsize.armijo,
                                                config.sum_order);
      if (!ls.success) {
        line_search_failed = true;
        break;
      }
      alpha = ls.stepsize;
      f = ls.objective_value;
    }

    g = gradient(state);
    g_inf = inf_norm(g);
    report.trace.push_back({outer, f, g_inf, direction_source, cg_iters,
                            cg_termination, alpha, state.ops.total(),
                            state.ops.total() - ops_before, elapsed()});
  }

  report.x = state.x;
  report.objective_value = f;
  report.grad_inf_norm = g_inf;
  report.ops = state.ops;
  if (g_inf <= config.grad_tol)
    report.status = SolveStatus::Converged;
  else if (line_search_failed)
    report.status = SolveStatus::LineSearchFailure;
  else
    report.status = SolveStatus::MaxIters;
  return report;
}

} // namespace pathnewton
