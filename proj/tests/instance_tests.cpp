#include "doctest.h"

#include <string>

#include "pathnewton/instance.hpp"
#include "support/fixtures.hpp"

using namespace pathnewton;
using namespace pathnewton::testing;

namespace {

bool mentions(const ValidationReport& report, const std::string& needle) {
  for (const std::string& v : report.violations)
    if (v.find(needle) != std::string::npos) return true;
  return false;
}

} // namespace

TEST_CASE("t1 validates cleanly") {
  const NetworkInstance inst = t1_instance();
  const ValidationReport report = validate(inst);
  CHECK(report.ok());
  CHECK(inst.total_entries() == 3);
  CHECK(inst.total_arcs() == 2);
}

TEST_CASE("validate rejects structural problems") {
  SUBCASE("no paths") {
    NetworkInstance inst;
    inst.num_paths = 0;
    CHECK(!validate(inst).ok());
  }
  SUBCASE("path cost count mismatch") {
    NetworkInstance inst = t1_instance();
    inst.path_costs.pop_back();
    CHECK(!validate(inst).ok());
  }
  SUBCASE("entry with unknown path") {
    NetworkInstance inst = t1_instance();
    inst.blocks[0].entries.push_back({0, 7, 1.0});
    CHECK(mentions(validate(inst), "path"));
  }
  SUBCASE("entry with unknown arc") {
    NetworkInstance inst = t1_instance();
    inst.blocks[0].entries.push_back({5, 0, 1.0});
    CHECK(mentions(validate(inst), "arc"));
  }
  SUBCASE("zero weight") {
    NetworkInstance inst = t1_instance();
    inst.blocks[0].entries[0].weight = 0.0;
    CHECK(!validate(inst).ok());
  }
  SUBCASE("non-finite weight") {
    NetworkInstance inst = t1_instance();
    inst.blocks[0].entries[0].weight = kInf;
    CHECK(!validate(inst).ok());
  }
  SUBCASE("duplicate (arc, path) pair") {
    NetworkInstance inst = t1_instance();
    inst.blocks[0].entries.push_back({0, 0, 2.0});
    CHECK(mentions(validate(inst), "duplicate"));
  }
  SUBCASE("bad cost parameters surface per cost") {
    NetworkInstance inst = t1_instance();
    inst.path_costs[1].q = -1.0;
    CHECK(!validate(inst).ok());
  }
  SUBCASE("constraint referencing unknown path") {
    NetworkInstance inst = qp2_instance();
    inst.equalities->rows[0].push_back({9, 1.0});
    CHECK(!validate(inst).ok());
  }
  SUBCASE("constraint with repeated path") {
    NetworkInstance inst = qp2_instance();
    inst.equalities->rows[0].push_back({0, 2.0});
    CHECK(!validate(inst).ok());
  }
  SUBCASE("non-finite rhs") {
    NetworkInstance inst = qp2_instance();
    inst.equalities->rhs[0] = kInf;
    CHECK(!validate(inst).ok());
  }
  SUBCASE("nonneg mark out of range") {
    NetworkInstance inst = t1_instance();
    inst.nonneg_paths = {5};
    CHECK(!validate(inst).ok());
  }
  SUBCASE("nonneg mark duplicated") {
    NetworkInstance inst = t1_instance();
    inst.nonneg_paths = {1, 1};
    CHECK(!validate(inst).ok());
  }
}

TEST_CASE("incidence_row extracts one arc's weights") {
  const NetworkInstance inst = t1_instance();
  const auto row0 = incidence_row(inst, 0, 0);
  REQUIRE(row0.size() == 1);
  CHECK(row0[0] == std::pair<int, double>{0, 1.0});
  const auto row1 = incidence_row(inst, 0, 1);
  REQUIRE(row1.size() == 2);
  CHECK(row1[0] == std::pair<int, double>{0, 1.0});
  CHECK(row1[1] == std::pair<int, double>{1, 1.0});
  CHECK_THROWS_AS(incidence_row(inst, 0, 9), ContractViolation);
  CHECK_THROWS_AS(incidence_row(inst, 4, 0), ContractViolation);
}

TEST_CASE("sort_entries orders by (arc, path) within each block") {
  NetworkInstance inst = t1_instance();
  inst.blocks[0].entries = {{1, 1, 3.0}, {0, 0, 1.0}, {1, 0, 2.0}};
  sort_entries(inst);
  CHECK(inst.blocks[0].entries[0].arc == 0);
  CHECK(inst.blocks[0].entries[1].arc == 1);
  CHECK(inst.blocks[0].entries[1].path == 0);
  CHECK(inst.blocks[0].entries[2].path == 1);
}

TEST_CASE("display names prefer the configured labels") {
  NetworkInstance inst = t1_instance();
  CHECK(path_display_name(inst, 0) == "path p0");
  CHECK(arc_display_name(inst, 0, 1) == "arc a1");
  inst.path_names.clear();
  inst.blocks[0].arc_names.clear();
  CHECK(path_display_name(inst, 1) == "path 1");
  CHECK(arc_display_name(inst, 0, 0) == "block 0 arc 0");
}

TEST_CASE("random instances from the generator validate") {
  std::mt19937_64 rng(991);
  for (int i = 0; i < 50; ++i) {
    const NetworkInstance inst = random_instance(rng);
    const ValidationReport report = validate(inst);
    INFO("instance ", i);
    CHECK(report.ok());
    CHECK(inst.num_paths <= 20);
    CHECK(inst.total_arcs() <= 10);
    CHECK(static_cast<int>(inst.blocks.size()) <= 3);
  }
}
