#pragma once

#include <functional>
#include <vector>

#include "pathnewton/calculus.hpp"
#include "pathnewton/common.hpp"

namespace pathnewton {

// Applies the Hessian at the current point to a vector; the caller owns
// whatever state (centralized sweeps or a simulated network) backs it.
using HvpFn = std::function<std::vector<double>(const std::vector<double>&)>;

// Diagonal scaling applied to residuals as S r. Entries store the INVERSE
// of the chosen diagonal, so application is a plain elementwise product.
struct Preconditioner {
  enum class Kind { None, DiagHessian, DiagR };
  Kind kind = Kind::None;
  std::vector<double> inv_diag; // empty for None

  static Preconditioner none();
  // From the full Hessian diagonal H_pp; every entry must be finite and > 0.
  static Preconditioner from_hessian_diagonal(const std::vector<double>& diag);
  // From the decoupled per-path curvatures R_p''; same positivity contract.
  static Preconditioner from_path_curvatures(const std::vector<double>& path_d2);
};

enum class CgTermination { Converged, IterBudget, ZeroCurvatureEscape };

const char* cg_termination_name(CgTermination t);

struct CgConfig {
  int max_iters = 0;              // 0 means the problem dimension
  double rel_residual_tol = 1e-10;
  double curvature_tol = 1e-14;   // p'Hp <= tol * p'p triggers the escape
  double escape_step = 1.0;       // length added along p when escaping at k >= 1
  // Recompute g + H y each iteration (one extra HVP) and fail loudly if the
  // recursively updated residual has drifted more than kResidualVerifyTol.
  bool verify_residual = false;
};

inline constexpr double kResidualVerifyTol = 1e-10;

struct CgResult {
  std::vector<double> y;
  int iterations = 0;
  // residual_norms[k] = sqrt(r_k' S r_k); index 0 is the initial residual.
  std::vector<double> residual_norms;
  CgTermination termination = CgTermination::Converged;
  // Quadratic model g'y + y'Hy/2 along the accepted iterates, starting at 0.
  std::vector<double> model_values;
  double model_decrease = 0.0; // model value at the returned y
  int hvp_count = 0;
  double max_residual_drift = 0.0; // only populated under verify_residual
};

// Conjugate gradient on H y = -g with one Hessian-vector product per
// iteration and the recursively updated residual. Stops when the scaled
// residual norm falls to rel_residual_tol times its initial value, the
// iteration budget runs out, or negligible curvature is met, in which case
// the returned direction is -g (first iteration) or the current iterate
// pushed along the offending direction.
CgResult cg_solve(const HvpFn& hvp, const std::vector<double>& g,
                  const CgConfig& config = {});
CgResult cg_solve(const HvpFn& hvp, const std::vector<double>& g,
                  const Preconditioner& precond, const CgConfig& config = {});

// Convenience forms running against a refreshed state's Hessian.
CgResult solve_plain(const FlowState& state, const std::vector<double>& g,
                     const CgConfig& config = {});
CgResult solve_preconditioned(const FlowState& state, const std::vector<double>& g,
                              const Preconditioner& precond,
                              const CgConfig& config = {});

// The escape predicate, shared with tests that probe the boundary.
bool negligible_curvature(double kappa, double p_dot_p, double curvature_tol);

// The direction taken when curvature collapses at iteration k: the current
// iterate pushed along p for k >= 1, plain steepest descent -g at k = 0.
std::vector<double> curvature_safeguard(const std::vector<double>& y,
                                        const std::vector<double>& p, int k,
                                        const std::vector<double>& g,
                                        double escape_step);

} // namespace pathnewton
