#include "support/fixtures.hpp"

namespace pathnewton::testing {

namespace {

NetworkInstance base_two_path() {
  NetworkInstance inst;
  inst.num_paths = 2;
  inst.path_names = {"p0", "p1"};
  inst.path_costs = {ScalarCostFn::quadratic(1.0, 0.0, 0.0),
                     ScalarCostFn::quadratic(1.0, 0.0, 0.0)};
  CouplingBlock block;
  block.name = "b0";
  block.arc_names = {"a0", "a1"};
  block.arc_costs = {ScalarCostFn::quadratic(1.0, 0.0, 0.0),
                     ScalarCostFn::quadratic(1.0, 0.0, 0.0)};
  block.entries = {{0, 0, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}};
  inst.blocks.push_back(block);
  return inst;
}

} // namespace

NetworkInstance t1_instance() { return base_two_path(); }

NetworkInstance kleinrock_scalar() {
  NetworkInstance inst;
  inst.num_paths = 1;
  inst.path_names = {"p0"};
  inst.path_costs = {ScalarCostFn::quadratic(0.0, 0.0, -2.0)};
  CouplingBlock block;
  block.name = "b0";
  block.arc_names = {"a0"};
  block.arc_costs = {ScalarCostFn::kleinrock(2.0)};
  block.entries = {{0, 0, 1.0}};
  inst.blocks.push_back(block);
  return inst;
}

NetworkInstance qp2_instance() {
  NetworkInstance inst;
  inst.num_paths = 2;
  inst.path_names = {"p0", "p1"};
  inst.path_costs = {ScalarCostFn::quadratic(1.0, 0.0, 0.0),
                     ScalarCostFn::quadratic(1.0, 0.0, 0.0)};
  CouplingBlock block;
  block.name = "b0";
  block.arc_names = {"a0"};
  block.arc_costs = {ScalarCostFn::zero()};
  block.entries = {{0, 0, 1.0}};
  inst.blocks.push_back(block);
  inst.equalities.emplace();
  inst.equalities->rows = {{{0, 1.0}, {1, 1.0}}};
  inst.equalities->rhs = {1.0};
  return inst;
}

NetworkInstance t1_eq_instance() {
  NetworkInstance inst = base_two_path();
  inst.equalities.emplace();
  inst.equalities->rows = {{{0, 1.0}, {1, 1.0}}};
  inst.equalities->rhs = {2.0};
  return inst;
}

NetworkInstance singular_instance() {
  NetworkInstance inst;
  inst.num_paths = 2;
  inst.path_names = {"p0", "p1"};
  inst.path_costs = {ScalarCostFn::quadratic(0.0, 0.0, 0.0),
                     ScalarCostFn::quadratic(0.0, 0.0, 1.0)};
  CouplingBlock block;
  block.name = "b0";
  block.arc_names = {"a0"};
  block.arc_costs = {ScalarCostFn::quadratic(1.0, 0.0, 0.0)};
  block.entries = {{0, 0, 1.0}, {0, 1, 1.0}};
  inst.blocks.push_back(block);
  return inst;
}

NetworkInstance diag_instance(int n) {
  NetworkInstance inst;
  inst.num_paths = n;
  CouplingBlock block;
  block.name = "b0";
  for (int i = 0; i < n; ++i) {
    inst.path_names.push_back("p" + std::to_string(i));
    inst.path_costs.push_back(ScalarCostFn::quadratic(1.0 + i, 0.0, -1.0));
    block.arc_names.push_back("a" + std::to_string(i));
    block.arc_costs.push_back(ScalarCostFn::quadratic(0.5 + i, 0.0, 0.0));
    block.entries.push_back({i, i, 1.0 + 0.25 * i});
  }
  inst.blocks.push_back(block);
  return inst;
}

NetworkInstance bound_instance() {
  NetworkInstance inst;
  inst.num_paths = 1;
  inst.path_names = {"p0"};
  inst.path_costs = {ScalarCostFn::quadratic(1.0, -1.0, 0.0)};
  CouplingBlock block;
  block.name = "b0";
  block.arc_names = {"a0"};
  block.arc_costs = {ScalarCostFn::zero()};
  block.entries = {{0, 0, 1.0}};
  inst.blocks.push_back(block);
  inst.nonneg_paths = {0};
  return inst;
}

NetworkInstance random_instance(std::mt19937_64& rng, const RandomOptions& opts) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto pick_int = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };

  NetworkInstance inst;
  inst.num_paths = pick_int(1, opts.max_paths);
  for (int p = 0; p < inst.num_paths; ++p) {
    inst.path_names.push_back("p" + std::to_string(p));
    if (opts.spd) {
      inst.path_costs.push_back(
          ScalarCostFn::quadratic(range(0.5, 2.0), range(-1.0, 1.0), range(-1.0, 1.0)));
    } else {
      const int kind = pick_int(0, 2);
      if (kind == 0) inst.path_costs.push_back(ScalarCostFn::zero());
      else if (kind == 1)
        inst.path_costs.push_back(
            ScalarCostFn::quadratic(range(0.0, 2.0), range(-1.0, 1.0), range(-1.0, 1.0)));
      else
        inst.path_costs.push_back(
            ScalarCostFn::power_monomial(range(0.2, 1.0), pick_int(2, 4)));
    }
  }

  const int blocks = pick_int(1, opts.max_blocks);
  const int total_arcs = pick_int(blocks, opts.max_total_arcs);
  std::vector<int> per_block(blocks, 1);
  for (int extra = total_arcs - blocks; extra > 0; --extra)
    ++per_block[pick_int(0, blocks - 1)];

  for (int bi = 0; bi < blocks; ++bi) {
    CouplingBlock block;
    block.name = "b" + std::to_string(bi);
    for (int a = 0; a < per_block[bi]; ++a) {
      block.arc_names.push_back("b" + std::to_string(bi) + "a" + std::to_string(a));
      double max_flow = 0.0;
      if (unit(rng) >= opts.orphan_arc_prob) {
        const int degree = pick_int(1, std::min(inst.num_paths, 4));
        std::vector<int> members;
        for (int d = 0; d < degree; ++d) {
          int p = pick_int(0, inst.num_paths - 1);
          bool dup = false;
          for (int q : members) dup |= (q == p);
          if (dup) continue;
          members.push_back(p);
          const double w = range(0.5, 2.0);
          block.entries.push_back({a, p, w});
          max_flow += w;
        }
      }
      const int kind = opts.arc_variety ? pick_int(0, 3) : 1;
      switch (kind) {
        case 0: block.arc_costs.push_back(ScalarCostFn::zero()); break;
        case 1:
          block.arc_costs.push_back(
              ScalarCostFn::quadratic(range(0.0, 2.0), range(-1.0, 1.0), range(-0.5, 0.5)));
          break;
        case 2:
          block.arc_costs.push_back(
              ScalarCostFn::power_monomial(range(0.2, 1.0), pick_int(2, 4)));
          break;
        default:
          block.arc_costs.push_back(
              ScalarCostFn::kleinrock(1.1 * max_flow + 0.5 + range(0.0, 1.0)));
          break;
      }
    }
    inst.blocks.push_back(std::move(block));
  }
  sort_entries(inst);
  return inst;
}

std::vector<double> random_point(std::mt19937_64& rng, const NetworkInstance& instance) {
  std::uniform_real_distribution<double> coord(0.05, 1.0);
  std::vector<double> x(instance.num_paths);
  for (double& v : x) v = coord(rng);
  return x;
}

} // namespace pathnewton::testing
