#include "pathnewton/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pathnewton/common.hpp"

namespace pathnewton {

namespace {

void evaluate(FlowState& state) {
  const NetworkInstance& instance = *state.instance;
  const int num_blocks = static_cast<int>(instance.blocks.size());

  state.arc_flow.assign(num_blocks, {});
  state.arc_value.assign(num_blocks, {});
  state.arc_d1.assign(num_blocks, {});
  state.arc_d2.assign(num_blocks, {});

  for (int bi = 0; bi < num_blocks; ++bi) {
    const CouplingBlock& block = instance.blocks[bi];
    state.arc_flow[bi].assign(block.num_arcs(), 0.0);
    for (const CouplingEntry& e : block.entries)
      state.arc_flow[bi][e.arc] += e.weight * state.x[e.path];

    state.arc_value[bi].resize(block.num_arcs());
    state.arc_d1[bi].resize(block.num_arcs());
    state.arc_d2[bi].resize(block.num_arcs());
    for (int a = 0; a < block.num_arcs(); ++a) {
      const EvalTriple t = eval(block.arc_costs[a], state.arc_flow[bi][a],
                                arc_display_name(instance, bi, a));
      state.arc_value[bi][a] = t.value;
      state.arc_d1[bi][a] = t.d1;
      state.arc_d2[bi][a] = t.d2;
    }
  }

  state.path_value.resize(instance.num_paths);
  state.path_d1.resize(instance.num_paths);
  state.path_d2.resize(instance.num_paths);
  for (int p = 0; p < instance.num_paths; ++p) {
    const EvalTriple t =
        eval(instance.path_costs[p], state.x[p], path_display_name(instance, p));
    state.path_value[p] = t.value;
    state.path_d1[p] = t.d1;
    state.path_d2[p] = t.d2;
  }

  state.ops.refresh +=
      instance.total_entries() + instance.num_paths + instance.total_arcs();
  ++state.revision;
}

} // namespace

FlowState refresh(const NetworkInstance& instance, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != instance.num_paths)
    throw ContractViolation("refresh: x size does not match num_paths");
  FlowState state;
  state.instance = &instance;
  state.x = x;
  evaluate(state);
  return state;
}

void refresh_in_place(FlowState& state, const std::vector<double>& x) {
  if (state.instance == nullptr)
    throw ContractViolation("refresh_in_place: state has no instance");
  if (static_cast<int>(x.size()) != state.instance->num_paths)
    throw ContractViolation("refresh_in_place: x size does not match num_paths");
  state.x = x;
  evaluate(state);
}

double objective(const FlowState& state) {
  double sum = 0.0;
  for (double v : state.path_value) sum += v;
  for (const auto& block_values : state.arc_value)
    for (double v : block_values) sum += v;
  return sum;
}

double objective_ordered(const FlowState& state, const SumOrder& order) {
  const NetworkInstance& instance = *state.instance;
  std::vector<bool> path_seen(instance.num_paths, false);
  std::vector<std::vector<bool>> arc_seen;
  for (const auto& b : instance.blocks)
    arc_seen.emplace_back(b.num_arcs(), false);
  int terms = 0;

  double sum = 0.0;
  for (const SumGroup& group : order) {
    double subtotal = 0.0;
    if (group.path >= 0) {
      if (group.path >= instance.num_paths || path_seen[group.path])
        throw ContractViolation("objective_ordered: bad or repeated path term");
      path_seen[group.path] = true;
      subtotal = state.path_value[group.path];
      ++terms;
    }
    for (const auto& [block, arc] : group.arcs) {
      if (block < 0 || block >= static_cast<int>(instance.blocks.size()))
        throw ContractViolation("objective_ordered: bad block in arc term");
      if (arc < 0 || arc >= instance.blocks[block].num_arcs() ||
          arc_seen[block][arc])
        throw ContractViolation("objective_ordered: bad or repeated arc term");
      arc_seen[block][arc] = true;
      subtotal += state.arc_value[block][arc];
      ++terms;
    }
    sum += subtotal;
  }
  if (terms != instance.num_paths + instance.total_arcs())
    throw ContractViolation("objective_ordered: order does not cover every term");
  return sum;
}

std::vector<double> gradient(const FlowState& state) {
  const NetworkInstance& instance = *state.instance;
  std::vector<double> g = state.path_d1;
  for (int bi = 0; bi < static_cast<int>(instance.blocks.size()); ++bi) {
    const CouplingBlock& block = instance.blocks[bi];
    for (const CouplingEntry& e : block.entries)
      g[e.path] += e.weight * state.arc_d1[bi][e.arc];
  }
  state.ops.gradient += instance.total_entries();
  return g;
}

std::vector<double> hessian_diagonal(const FlowState& state) {
  const NetworkInstance& instance = *state.instance;
  std::vector<double> d = state.path_d2;
  for (int bi = 0; bi < static_cast<int>(instance.blocks.size()); ++bi) {
    const CouplingBlock& block = instance.blocks[bi];
    for (const CouplingEntry& e : block.entries)
      d[e.path] += e.weight * e.weight * state.arc_d2[bi][e.arc];
  }
  state.ops.hessian_diagonal += instance.total_entries();
  return d;
}

std::vector<double> hessian_vector_product(const FlowState& state,
                                           const std::vector<double>& v) {
  const NetworkInstance& instance = *state.instance;
  if (static_cast<int>(v.size()) != instance.num_paths)
    throw ContractViolation("hessian_vector_product: v size does not match num_paths");

  std::vector<double> w(instance.num_paths);
  for (int p = 0; p < instance.num_paths; ++p) w[p] = state.path_d2[p] * v[p];

  for (int bi = 0; bi < static_cast<int>(instance.blocks.size()); ++bi) {
    const CouplingBlock& block = instance.blocks[bi];
    std::vector<double> fv(block.num_arcs(), 0.0);
    for (const CouplingEntry& e : block.entries)
      fv[e.arc] += e.weight * v[e.path];
    // The inner product is grouped as weight * (d2 * fv): the distributed
    // run forms d2 * fv at the arc and weights it at the path, and the two
    // codepaths must round identically.
    for (const CouplingEntry& e : block.entries)
      w[e.path] += e.weight * (state.arc_d2[bi][e.arc] * fv[e.arc]);
  }
  state.ops.hvp += 2 * instance.total_entries();
  return w;
}

double max_feasible_step(const FlowState& state, const std::vector<double>& y) {
  const NetworkInstance& instance = *state.instance;
  if (static_cast<int>(y.size()) != instance.num_paths)
    throw ContractViolation("max_feasible_step: y size does not match num_paths");

  double t = kInf;
  auto tighten = [&t](double value, double rate, double upper, double lower) {
    // value + s * rate must stay inside (lower, upper) resp. [lower, upper).
    if (rate > 0.0 && upper < kInf) t = std::min(t, (upper - value) / rate);
    if (rate < 0.0 && lower > -kInf) t = std::min(t, (lower - value) / rate);
  };

  for (int p = 0; p < instance.num_paths; ++p) {
    const ScalarCostFn& fn = instance.path_costs[p];
    tighten(state.x[p], y[p], domain_upper(fn), domain_lower(fn));
  }
  for (int bi = 0; bi < static_cast<int>(instance.blocks.size()); ++bi) {
    const CouplingBlock& block = instance.blocks[bi];
    std::vector<double> fy(block.num_arcs(), 0.0);
    for (const CouplingEntry& e : block.entries)
      fy[e.arc] += e.weight * y[e.path];
    for (int a = 0; a < block.num_arcs(); ++a) {
      const ScalarCostFn& fn = block.arc_costs[a];
      tighten(state.arc_flow[bi][a], fy[a], domain_upper(fn), domain_lower(fn));
    }
  }
  return std::max(t, 0.0);
}

DenseMatrix dense_hessian_oracle(const NetworkInstance& instance,
                                 const std::vector<double>& x, int max_paths) {
  if (instance.num_paths > max_paths)
    throw ContractViolation("dense_hessian_oracle: instance too large for dense assembly");
  const FlowState state = refresh(instance, x);

  DenseMatrix h;
  h.n = instance.num_paths;
  h.a.assign(static_cast<std::size_t>(h.n) * h.n, 0.0);
  for (int p = 0; p < h.n; ++p) h.at(p, p) = state.path_d2[p];

  for (int bi = 0; bi < static_cast<int>(instance.blocks.size()); ++bi) {
    const CouplingBlock& block = instance.blocks[bi];
    for (int a = 0; a < block.num_arcs(); ++a) {
      const auto row = incidence_row(instance, bi, a);
      for (const auto& [pi, wi] : row)
        for (const auto& [pj, wj] : row)
          h.at(pi, pj) += wi * state.arc_d2[bi][a] * wj;
    }
  }
  return h;
}

SumOrder natural_sum_order(const NetworkInstance& instance) {
  SumOrder order;
  for (int p = 0; p < instance.num_paths; ++p) order.push_back({p, {}});
  for (int bi = 0; bi < static_cast<int>(instance.blocks.size()); ++bi)
    for (int a = 0; a < instance.blocks[bi].num_arcs(); ++a)
      order.push_back({-1, {{bi, a}}});
  return order;
}

} // namespace pathnewton
