#include "doctest.h"

#include <cmath>
#include <random>

#include "pathnewton/cg.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace pathnewton;
using namespace pathnewton::testing;

namespace {

HvpFn dense_hvp(const DenseMatrix& h) {
  return [h](const std::vector<double>& v) { return dense_mat_vec(h, v); };
}

// Direct quadratic-model value C(y) = g'y + y'Hy/2, the reference for the
// incrementally tracked model.
double model_value(const DenseMatrix& h, const std::vector<double>& g,
                   const std::vector<double>& y) {
  const std::vector<double> hy = dense_mat_vec(h, y);
  double v = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) v += g[i] * y[i] + 0.5 * y[i] * hy[i];
  return v;
}

} // namespace

TEST_CASE("identity Hessian converges in one iteration") {
  DenseMatrix h;
  h.n = 3;
  h.a = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  const std::vector<double> g = {1.0, -2.0, 0.5};
  const CgResult r = cg_solve(dense_hvp(h), g, CgConfig{});
  CHECK(r.iterations == 1);
  CHECK(r.termination == CgTermination::Converged);
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(r.y[i] == doctest::Approx(-g[i]).epsilon(1e-14));
}

TEST_CASE("zero gradient returns the zero direction untouched") {
  DenseMatrix h;
  h.n = 2;
  h.a = {2, 0, 0, 2};
  const CgResult r = cg_solve(dense_hvp(h), {0.0, 0.0}, CgConfig{});
  CHECK(r.iterations == 0);
  CHECK(r.termination == CgTermination::Converged);
  CHECK(r.y == std::vector<double>{0.0, 0.0});
  CHECK(r.hvp_count == 0);
}

TEST_CASE("random SPD instances: finite termination and dense-solve match") {
  std::mt19937_64 rng(4242);
  for (int i = 0; i < 30; ++i) {
    const NetworkInstance inst = random_instance(rng);
    const std::vector<double> x = random_point(rng, inst);
    FlowState state = refresh(inst, x);
    const std::vector<double> g = gradient(state);
    if (inf_norm(g) < 1e-12) continue;

    CgConfig cfg;
    cfg.rel_residual_tol = 1e-10;
    cfg.max_iters = inst.num_paths + 2; // dimension plus round-off slack
    const CgResult r = solve_plain(state, g, cfg);
    INFO("instance ", i, " P=", inst.num_paths, " iters=", r.iterations);
    CHECK(r.termination == CgTermination::Converged);
    CHECK(r.iterations <= inst.num_paths + 2);
    CHECK(r.residual_norms.back() <=
          1e-10 * r.residual_norms.front() + 1e-300);

    const DenseMatrix h = dense_hessian_oracle(inst, x);
    std::vector<double> neg_g(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) neg_g[k] = -g[k];
    const std::vector<double> exact = lu_solve(h, neg_g);
    CHECK(max_rel_gap(r.y, exact, inf_norm(exact) + 1e-12) < 1e-8);
  }
}

TEST_CASE("incremental model values match the direct quadratic model") {
  std::mt19937_64 rng(515);
  const NetworkInstance inst = random_instance(rng);
  const std::vector<double> x = random_point(rng, inst);
  FlowState state = refresh(inst, x);
  const std::vector<double> g = gradient(state);
  const DenseMatrix h = dense_hessian_oracle(inst, x);

  CgConfig cfg;
  cfg.rel_residual_tol = 1e-12;
  const CgResult r = solve_plain(state, g, cfg);
  REQUIRE(r.model_values.size() == static_cast<std::size_t>(r.iterations) + 1);
  CHECK(r.model_values.front() == 0.0);

  // Replay the advances against dense arithmetic.
  std::vector<double> y(g.size(), 0.0);
  std::vector<double> rvec = g, p(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) p[k] = -g[k];
  for (int it = 0; it < r.iterations; ++it) {
    const std::vector<double> hp = dense_mat_vec(h, p);
    double rho = 0.0, kappa = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      rho += rvec[k] * rvec[k];
      kappa += p[k] * hp[k];
    }
    const double alpha = rho / kappa;
    for (std::size_t k = 0; k < g.size(); ++k) {
      y[k] += alpha * p[k];
      rvec[k] += alpha * hp[k];
    }
    CHECK(rel_gap(r.model_values[it + 1], model_value(h, g, y)) < 1e-8);
    double rho_new = 0.0;
    for (double rk : rvec) rho_new += rk * rk;
    const double beta = rho_new / rho;
    for (std::size_t k = 0; k < g.size(); ++k) p[k] = -rvec[k] + beta * p[k];
  }
  // The reported decrease is the model value at the returned direction.
  CHECK(rel_gap(r.model_decrease, model_value(h, g, r.y)) < 1e-8);
}

TEST_CASE("diagonal-Hessian preconditioning solves in one iteration") {
  const NetworkInstance inst = diag_instance(6);
  const std::vector<double> x(6, 0.75);
  FlowState state = refresh(inst, x);
  const std::vector<double> g = gradient(state);
  const Preconditioner pre = Preconditioner::from_hessian_diagonal(hessian_diagonal(state));

  CgConfig cfg;
  cfg.rel_residual_tol = 1e-10;
  const CgResult r = solve_preconditioned(state, g, pre, cfg);
  CHECK(r.iterations == 1);
  CHECK(r.termination == CgTermination::Converged);
}

TEST_CASE("path-curvature preconditioning finishes within A+1 iterations") {
  std::mt19937_64 rng(31337);
  int tried = 0;
  for (int attempt = 0; attempt < 400 && tried < 25; ++attempt) {
    RandomOptions opts;
    opts.max_paths = 20;
    opts.max_total_arcs = 6;
    const NetworkInstance inst = random_instance(rng, opts);
    const int a = inst.total_arcs();
    if (a >= inst.num_paths) continue; // the claim needs A < P
    ++tried;
    const std::vector<double> x = random_point(rng, inst);
    FlowState state = refresh(inst, x);
    const std::vector<double> g = gradient(state);
    if (inf_norm(g) < 1e-12) continue;
    const Preconditioner pre = Preconditioner::from_path_curvatures(state.path_d2);

    CgConfig cfg;
    cfg.rel_residual_tol = 1e-8;
    const CgResult r = solve_preconditioned(state, g, pre, cfg);
    INFO("P=", inst.num_paths, " A=", a, " iters=", r.iterations);
    CHECK(r.iterations <= a + 1);
    CHECK(r.termination == CgTermination::Converged);
  }
  CHECK(tried == 25);
}

TEST_CASE("preconditioner construction rejects nonpositive diagonals") {
  CHECK_THROWS_AS(Preconditioner::from_hessian_diagonal({1.0, 0.0}), ContractViolation);
  CHECK_THROWS_AS(Preconditioner::from_hessian_diagonal({1.0, -2.0}), ContractViolation);
  CHECK_THROWS_AS(Preconditioner::from_path_curvatures({0.5, kInf}), ContractViolation);
  const Preconditioner ok = Preconditioner::from_hessian_diagonal({2.0, 4.0});
  CHECK(ok.inv_diag == std::vector<double>{0.5, 0.25});
}

TEST_CASE("iteration budget cuts the solve short") {
  std::mt19937_64 rng(99);
  const NetworkInstance inst = random_instance(rng);
  const std::vector<double> x = random_point(rng, inst);
  FlowState state = refresh(inst, x);
  std::vector<double> g = gradient(state);
  if (inf_norm(g) < 1e-9) g[0] += 1.0;

  CgConfig cfg;
  cfg.max_iters = 1;
  cfg.rel_residual_tol = 1e-300;
  const CgResult r = solve_plain(state, g, cfg);
  if (r.termination == CgTermination::IterBudget) CHECK(r.iterations == 1);
  else CHECK(r.termination == CgTermination::Converged);
}

TEST_CASE("zero curvature triggers the escape direction") {
  const NetworkInstance inst = singular_instance();
  const FlowState state = refresh(inst, {0.0, 0.0});
  const std::vector<double> g = gradient(state);
  CHECK(g == std::vector<double>{0.0, 1.0});

  CgConfig cfg;
  cfg.rel_residual_tol = 1e-14;
  const CgResult r = solve_plain(state, g, cfg);
  CHECK(r.termination == CgTermination::ZeroCurvatureEscape);
  CHECK(r.iterations == 1);
  double descent = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) descent += g[k] * r.y[k];
  CHECK(descent < 0.0);
}

TEST_CASE("curvature_safeguard falls back to steepest descent at the start") {
  const std::vector<double> y = {5.0, 5.0};
  const std::vector<double> p = {1.0, 0.0};
  const std::vector<double> g = {0.25, -0.5};
  const std::vector<double> d0 = curvature_safeguard(y, p, 0, g, 1.0);
  CHECK(d0 == std::vector<double>{-0.25, 0.5});
  const std::vector<double> d2 = curvature_safeguard(y, p, 2, g, 0.5);
  CHECK(d2 == std::vector<double>{5.5, 5.0});
}

TEST_CASE("negligible_curvature scales with the direction") {
  CHECK(negligible_curvature(0.0, 1.0, 1e-14));
  CHECK(negligible_curvature(5e-15, 1.0, 1e-14));
  CHECK(!negligible_curvature(1e-10, 1.0, 1e-14));
  CHECK(negligible_curvature(1e-10, 1e6, 1e-14));
}

TEST_CASE("verification mode tracks and bounds the residual drift") {
  std::mt19937_64 rng(640);
  const NetworkInstance inst = random_instance(rng);
  const std::vector<double> x = random_point(rng, inst);
  FlowState state = refresh(inst, x);
  std::vector<double> g = gradient(state);
  if (inf_norm(g) < 1e-9) g[0] += 1.0;

  CgConfig cfg;
  cfg.rel_residual_tol = 1e-10;
  cfg.verify_residual = true;
  const CgResult r = solve_plain(state, g, cfg);
  CHECK(r.max_residual_drift <= kResidualVerifyTol);
  // One extra product per iteration pays for the recomputation.
  CHECK(r.hvp_count == 2 * r.iterations);

  cfg.verify_residual = false;
  const CgResult plain = solve_plain(state, g, cfg);
  CHECK(plain.hvp_count == plain.iterations);
  CHECK(plain.max_residual_drift == 0.0);
}

TEST_CASE("termination names are stable") {
  CHECK(std::string(cg_termination_name(CgTermination::Converged)) == "converged");
  CHECK(std::string(cg_termination_name(CgTermination::IterBudget)) == "budget");
  CHECK(std::string(cg_termination_name(CgTermination::ZeroCurvatureEscape)) == "escape");
}
