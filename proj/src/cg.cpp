#include "pathnewton/cg.hpp"

#include <cmath>
#include <cstddef>
#include <string>

namespace pathnewton {

Preconditioner Preconditioner::none() { return {}; }

namespace {

Preconditioner invert_diagonal(Preconditioner::Kind kind,
                               const std::vector<double>& diag,
                               const char* what) {
  Preconditioner s;
  s.kind = kind;
  s.inv_diag.reserve(diag.size());
  for (double d : diag) {
    if (!std::isfinite(d) || d <= 0.0)
      throw ContractViolation(std::string(what) +
                              " preconditioner needs a finite positive diagonal");
    s.inv_diag.push_back(1.0 / d);
  }
  return s;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_finite(double value, const char* what, int iteration) {
  if (!std::isfinite(value))
    throw NumericalBreakdown(std::string("conjugate gradient produced a non-finite ") + what,
                             iteration);
}

} // namespace

Preconditioner Preconditioner::from_hessian_diagonal(const std::vector<double>& diag) {
  return invert_diagonal(Kind::DiagHessian, diag, "Hessian-diagonal");
}

Preconditioner Preconditioner::from_path_curvatures(const std::vector<double>& path_d2) {
  return invert_diagonal(Kind::DiagR, path_d2, "path-curvature");
}

const char* cg_termination_name(CgTermination t) {
  switch (t) {
    case CgTermination::Converged: return "converged";
    case CgTermination::IterBudget: return "budget";
    case CgTermination::ZeroCurvatureEscape: return "escape";
  }
  return "?";
}

bool negligible_curvature(double kappa, double p_dot_p, double curvature_tol) {
  return kappa <= curvature_tol * p_dot_p;
}

std::vector<double> curvature_safeguard(const std::vector<double>& y,
                                        const std::vector<double>& p, int k,
                                        const std::vector<double>& g,
                                        double escape_step) {
  std::vector<double> d(g.size());
  if (k == 0) {
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = -g[i];
  } else {
    for (std::size_t i = 0; i < y.size(); ++i) d[i] = y[i] + escape_step * p[i];
  }
  return d;
}

namespace {

CgResult cg_core(const HvpFn& hvp, const std::vector<double>& g,
                 const std::vector<double>& inv_diag, const CgConfig& config) {
  const int n = static_cast<int>(g.size());
  if (!inv_diag.empty() && static_cast<int>(inv_diag.size()) != n)
    throw ContractViolation("cg_solve: preconditioner size does not match g");
  const int max_iters = config.max_iters > 0 ? config.max_iters : n;

  auto apply_s = [&inv_diag](const std::vector<double>& r) {
    if (inv_diag.empty()) return r;
    std::vector<double> z(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag[i] * r[i];
    return z;
  };

  CgResult out;
  out.y.assign(n, 0.0);

  std::vector<double> r = g;
  std::vector<double> z = apply_s(r);
  std::vector<double> p(n);
  for (int i = 0; i < n; ++i) p[i] = -z[i];
  double rho = dot(r, z);
  check_finite(rho, "initial residual norm", 0);

  out.residual_norms.push_back(std::sqrt(rho));
  out.model_values.push_back(0.0);
  if (rho == 0.0) return out; // g = 0: the zero step already solves H y = -g

  for (int k = 0; k < max_iters; ++k) {
    std::vector<double> w = hvp(p);
    ++out.hvp_count;
    const double kappa = dot(p, w);
    check_finite(kappa, "curvature p'Hp", k);

    if (negligible_curvature(kappa, dot(p, p), config.curvature_tol)) {
      out.termination = CgTermination::ZeroCurvatureEscape;
      out.y = curvature_safeguard(out.y, p, k, g, config.escape_step);
      double model;
      if (k == 0) {
        out.iterations = 0;
        // Exact model value; with no scaling p equals -g so Hy is the w
        // already in hand, otherwise one extra product pays for it.
        std::vector<double> hy = inv_diag.empty() ? w : hvp(out.y);
        if (!inv_diag.empty()) ++out.hvp_count;
        model = dot(g, out.y) + 0.5 * dot(out.y, hy);
      } else {
        const double s = config.escape_step;
        out.iterations = k;
        // r'p = -rho for conjugate directions, so the move along p lowers
        // the model by s*rho up to the negligible curvature term.
        model = out.model_values.back() - s * rho + 0.5 * s * s * kappa;
      }
      out.model_values.push_back(model);
      out.model_decrease = model;
      return out;
    }

    const double alpha = rho / kappa;
    check_finite(alpha, "step length", k);
    for (int i = 0; i < n; ++i) out.y[i] += alpha * p[i];
    for (int i = 0; i < n; ++i) r[i] += alpha * w[i];

    if (config.verify_residual) {
      std::vector<double> hy = hvp(out.y);
      ++out.hvp_count;
      double drift = 0.0;
      for (int i = 0; i < n; ++i)
        drift = std::max(drift, std::abs(r[i] - (g[i] + hy[i])));
      out.max_residual_drift = std::max(out.max_residual_drift, drift);
      if (drift > kResidualVerifyTol)
        throw NumericalBreakdown("recursive residual drifted from g + H y", k);
    }

    z = apply_s(r);
    const double rho_new = dot(r, z);
    check_finite(rho_new, "residual norm", k);

    out.residual_norms.push_back(std::sqrt(rho_new));
    out.model_values.push_back(out.model_values.back() - 0.5 * alpha * rho);
    out.iterations = k + 1;

    if (out.residual_norms.back() <=
        config.rel_residual_tol * out.residual_norms.front()) {
      out.termination = CgTermination::Converged;
      out.model_decrease = out.model_values.back();
      return out;
    }

    const double beta = rho_new / rho;
    for (int i = 0; i < n; ++i) p[i] = -z[i] + beta * p[i];
    rho = rho_new;
  }

  out.termination = CgTermination::IterBudget;
  out.model_decrease = out.model_values.back();
  return out;
}

} // namespace

CgResult cg_solve(const HvpFn& hvp, const std::vector<double>& g,
                  const CgConfig& config) {
  return cg_core(hvp, g, {}, config);
}

CgResult cg_solve(const HvpFn& hvp, const std::vector<double>& g,
                  const Preconditioner& precond, const CgConfig& config) {
  return cg_core(hvp, g, precond.inv_diag, config);
}

namespace {

HvpFn state_hvp(const FlowState& state) {
  return [&state](const std::vector<double>& v) {
    return hessian_vector_product(state, v);
  };
}

} // namespace

CgResult solve_plain(const FlowState& state, const std::vector<double>& g,
                     const CgConfig& config) {
  return cg_core(state_hvp(state), g, {}, config);
}

CgResult solve_preconditioned(const FlowState& state, const std::vector<double>& g,
                              const Preconditioner& precond,
                              const CgConfig& config) {
  return cg_core(state_hvp(state), g, precond.inv_diag, config);
}

} // namespace pathnewton

