#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "pathnewton/constraints.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace pathnewton;
using namespace pathnewton::testing;

TEST_CASE("augmenting folds equality rows into a penalty block") {
  const NetworkInstance base = t1_eq_instance();
  const NetworkInstance aug = augmented_instance(base, {0.5}, 4.0);

  CHECK(!aug.equalities.has_value());
  CHECK(aug.nonneg_paths.empty());
  REQUIRE(aug.blocks.size() == 2);
  const CouplingBlock& pen = aug.blocks.back();
  CHECK(pen.name == "eq-penalty");
  REQUIRE(pen.arc_costs.size() == 1);
  CHECK(pen.arc_costs[0] == ScalarCostFn::quadratic(4.0, 2.0, 0.5));
  REQUIRE(pen.entries.size() == 2);
  CHECK(pen.entries[0] == CouplingEntry{0, 0, 1.0});
  CHECK(pen.entries[1] == CouplingEntry{0, 1, 1.0});
}

TEST_CASE("augmenting folds sign constraints into shortfall penalties") {
  const NetworkInstance base = bound_instance();
  const NetworkInstance aug = augmented_instance(base, {}, 2.0);

  CHECK(aug.nonneg_paths.empty());
  REQUIRE(aug.blocks.size() == 2);
  const CouplingBlock& pen = aug.blocks.back();
  CHECK(pen.name == "bound-penalty");
  REQUIRE(pen.arc_costs.size() == 1);
  CHECK(pen.arc_costs[0] == ScalarCostFn::neg_part_penalty(2.0));
  CHECK(pen.entries[0] == CouplingEntry{0, 0, 1.0});
}

TEST_CASE("augmenting validates its inputs") {
  CHECK_THROWS_AS(augmented_instance(t1_eq_instance(), {0.5}, 0.0), ContractViolation);
  CHECK_THROWS_AS(augmented_instance(t1_eq_instance(), {0.5, 0.5}, 1.0),
                  ContractViolation);
  CHECK_THROWS_AS(augmented_instance(t1_instance(), {1.0}, 1.0), ContractViolation);
}

TEST_CASE("augmented objective equals the penalized Lagrangian plus lambda'b") {
  const NetworkInstance base = t1_eq_instance();
  const double lambda = 0.7, c = 3.0;
  const NetworkInstance aug = augmented_instance(base, {lambda}, c);

  for (const std::vector<double>& x :
       {std::vector<double>{0.3, -0.4}, std::vector<double>{1.0, 1.0},
        std::vector<double>{-2.0, 5.0}}) {
    const double f_base = objective(refresh(base, x));
    const double f_aug = objective(refresh(aug, x));
    const double res = x[0] + x[1] - 2.0;
    const double expected = lambda * res + 0.5 * c * res * res + lambda * 2.0;
    CHECK(rel_gap(f_aug - f_base, expected) < 1e-12);
  }
}

TEST_CASE("residual helpers") {
  const NetworkInstance inst = t1_eq_instance();
  CHECK(equality_residuals(inst, {1.0, 1.0}) == std::vector<double>{0.0});
  CHECK(equality_residuals(inst, {0.25, 0.5})[0] == doctest::Approx(-1.25));
  CHECK(equality_residuals(t1_instance(), {1.0, 1.0}).empty());

  const NetworkInstance bounded = bound_instance();
  CHECK(bound_violation_inf(bounded, {-0.3}) == doctest::Approx(0.3));
  CHECK(bound_violation_inf(bounded, {0.2}) == 0.0);
  CHECK(bound_violation_inf(t1_instance(), {-5.0, -5.0}) == 0.0);
}

TEST_CASE("equality-constrained quadratic reaches the hand-computed optimum") {
  const ConstrainedReport rep = solve_constrained(qp2_instance(), {0.0, 0.0});
  CHECK(rep.feasible);
  CHECK(rep.status == SolveStatus::Converged);
  CHECK(rep.x[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(rep.x[1] == doctest::Approx(0.5).epsilon(1e-6));
  REQUIRE(rep.multipliers.size() == 1);
  CHECK(rep.multipliers[0] == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(rep.penalty > 0.0);
}

TEST_CASE("multiplier iteration matches the KKT oracle on a coupled instance") {
  const NetworkInstance inst = t1_eq_instance();
  const KktSolution kkt = kkt_oracle(inst);
  REQUIRE(kkt.x.size() == 2);
  CHECK(kkt.x[0] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(kkt.x[1] == doctest::Approx(4.0 / 3).epsilon(1e-12));
  CHECK(kkt.multipliers[0] == doctest::Approx(-10.0 / 3).epsilon(1e-12));

  const ConstrainedReport rep = solve_constrained(inst, {0.0, 0.0});
  CHECK(rep.feasible);
  CHECK(rep.status == SolveStatus::Converged);
  CHECK(max_rel_gap(rep.x, kkt.x) < 1e-6);
  CHECK(std::abs(rep.multipliers[0] - kkt.multipliers[0]) < 1e-5);
}

TEST_CASE("constraint violation decays geometrically") {
  const ConstrainedReport rep = solve_constrained(qp2_instance(), {0.0, 0.0});
  REQUIRE(rep.violation_history.size() >= 3);
  for (std::size_t k = 0; k + 1 < rep.violation_history.size(); ++k)
    CHECK(rep.violation_history[k + 1] <=
          0.1 * rep.violation_history[k] + 5e-9);
  CHECK(rep.violation_history.back() <= 1e-8);
}

TEST_CASE("sign-constrained minimum lands on the bound") {
  const ConstrainedReport rep = solve_constrained(bound_instance(), {1.0});
  CHECK(rep.feasible);
  CHECK(std::abs(rep.x[0]) <= 1e-7);
  CHECK(rep.multipliers.empty());
  // The shortfall penalty has no multiplier to lean on, so feasibility here
  // comes from penalty growth alone.
  CHECK(rep.penalty > 1e6);
}

TEST_CASE("unconstrained instances collapse to a single inner solve") {
  const ConstrainedReport rep = solve_constrained(t1_instance(), {1.0, 1.0});
  CHECK(rep.rounds == 1);
  CHECK(rep.feasible);
  CHECK(rep.status == SolveStatus::Converged);
  CHECK(rep.multipliers.empty());
  CHECK(rep.violation_history.empty());
  CHECK(std::abs(rep.x[0]) < 1e-8);
  CHECK(std::abs(rep.x[1]) < 1e-8);
}

TEST_CASE("a custom inner solver is called once per round on the penalized copy") {
  int calls = 0;
  bool saw_penalty_block = true;
  const InnerSolver counting = [&](const NetworkInstance& sub,
                                   const std::vector<double>& start,
                                   const NewtonConfig& cfg) {
    ++calls;
    saw_penalty_block = saw_penalty_block && !sub.equalities.has_value() &&
                        sub.blocks.back().name == "eq-penalty";
    return minimize(sub, start, cfg);
  };

  const ConstrainedReport rep =
      solve_constrained(qp2_instance(), {0.0, 0.0}, {}, counting);
  CHECK(rep.feasible);
  CHECK(calls == rep.rounds);
  CHECK(saw_penalty_block);
}

TEST_CASE("an explicit initial penalty is honored") {
  ConstrainedConfig cfg;
  cfg.initial_penalty = 1e4;
  const ConstrainedReport rep = solve_constrained(qp2_instance(), {0.0, 0.0}, cfg);
  CHECK(rep.feasible);
  CHECK(rep.penalty >= 1e4);
  CHECK(rep.x[0] == doctest::Approx(0.5).epsilon(1e-6));
}
