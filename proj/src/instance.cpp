#include "pathnewton/instance.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "pathnewton/common.hpp"

namespace pathnewton {

int NetworkInstance::total_arcs() const {
  int n = 0;
  for (const auto& b : blocks) n += b.num_arcs();
  return n;
}

int NetworkInstance::total_entries() const {
  int n = 0;
  for (const auto& b : blocks) n += static_cast<int>(b.entries.size());
  return n;
}

ValidationReport validate(const NetworkInstance& instance) {
  ValidationReport report;
  report.num_paths = instance.num_paths;
  report.total_arcs = instance.total_arcs();
  report.total_entries = instance.total_entries();
  auto bad = [&report](std::string msg) { report.violations.push_back(std::move(msg)); };

  if (instance.num_paths <= 0) bad("instance must have at least one path");
  if (instance.blocks.empty()) bad("instance must have at least one coupling block");

  if (!instance.path_names.empty() &&
      static_cast<int>(instance.path_names.size()) != instance.num_paths)
    bad("path_names size does not match num_paths");
  if (static_cast<int>(instance.path_costs.size()) != instance.num_paths)
    bad("path_costs size does not match num_paths");
  for (int p = 0; p < static_cast<int>(instance.path_costs.size()); ++p) {
    if (auto why = invalid_reason(instance.path_costs[p]))
      bad("path " + std::to_string(p) + " cost: " + *why);
  }

  for (int bi = 0; bi < static_cast<int>(instance.blocks.size()); ++bi) {
    const CouplingBlock& block = instance.blocks[bi];
    const std::string tag = "block " + std::to_string(bi) +
                            (block.name.empty() ? "" : " (" + block.name + ")");
    if (!block.arc_names.empty() &&
        block.arc_names.size() != block.arc_costs.size())
      bad(tag + ": arc_names size does not match arc_costs");
    for (int a = 0; a < block.num_arcs(); ++a) {
      if (auto why = invalid_reason(block.arc_costs[a]))
        bad(tag + ", arc " + std::to_string(a) + " cost: " + *why);
    }
    std::set<std::pair<int, int>> seen;
    for (const CouplingEntry& e : block.entries) {
      if (e.arc < 0 || e.arc >= block.num_arcs()) {
        bad(tag + ": entry arc id " + std::to_string(e.arc) + " out of range");
        continue;
      }
      if (e.path < 0 || e.path >= instance.num_paths) {
        bad(tag + ": entry path id " + std::to_string(e.path) + " out of range");
        continue;
      }
      if (!std::isfinite(e.weight) || e.weight == 0.0)
        bad(tag + ": entry (" + std::to_string(e.arc) + "," +
            std::to_string(e.path) + ") weight must be finite and nonzero");
      if (!seen.insert({e.arc, e.path}).second)
        bad(tag + ": duplicate coupling entry (" + std::to_string(e.arc) + "," +
            std::to_string(e.path) + ")");
    }
  }

  if (instance.equalities) {
    const EqualityConstraints& eq = *instance.equalities;
    if (eq.rows.size() != eq.rhs.size())
      bad("equality rows/rhs size mismatch");
    for (int i = 0; i < static_cast<int>(eq.rows.size()); ++i) {
      if (eq.rows[i].empty())
        bad("equality row " + std::to_string(i) + " is empty");
      std::set<int> cols;
      for (const auto& [p, coeff] : eq.rows[i]) {
        if (p < 0 || p >= instance.num_paths)
          bad("equality row " + std::to_string(i) + ": path id " +
              std::to_string(p) + " out of range");
        else if (!cols.insert(p).second)
          bad("equality row " + std::to_string(i) + ": repeated path id " +
              std::to_string(p));
        if (!std::isfinite(coeff) || coeff == 0.0)
          bad("equality row " + std::to_string(i) +
              ": coefficient must be finite and nonzero");
      }
      if (i < static_cast<int>(eq.rhs.size()) && !std::isfinite(eq.rhs[i]))
        bad("equality row " + std::to_string(i) + ": rhs must be finite");
    }
  }

  {
    std::set<int> seen;
    for (int p : instance.nonneg_paths) {
      if (p < 0 || p >= instance.num_paths)
        bad("nonnegative-path id " + std::to_string(p) + " out of range");
      else if (!seen.insert(p).second)
        bad("nonnegative-path id " + std::to_string(p) + " repeated");
    }
  }

  return report;
}

std::vector<std::pair<int, double>> incidence_row(const NetworkInstance& instance,
                                                  int block, int arc) {
  if (block < 0 || block >= static_cast<int>(instance.blocks.size()))
    throw ContractViolation("incidence_row: block id out of range");
  const CouplingBlock& b = instance.blocks[block];
  if (arc < 0 || arc >= b.num_arcs())
    throw ContractViolation("incidence_row: arc id out of range");
  std::vector<std::pair<int, double>> row;
  for (const CouplingEntry& e : b.entries)
    if (e.arc == arc) row.emplace_back(e.path, e.weight);
  std::sort(row.begin(), row.end());
  return row;
}

std::string path_display_name(const NetworkInstance& instance, int path) {
  if (path < static_cast<int>(instance.path_names.size()) &&
      !instance.path_names[path].empty())
    return "path " + instance.path_names[path];
  return "path " + std::to_string(path);
}

std::string arc_display_name(const NetworkInstance& instance, int block, int arc) {
  const CouplingBlock& b = instance.blocks[block];
  if (arc < static_cast<int>(b.arc_names.size()) && !b.arc_names[arc].empty())
    return "arc " + b.arc_names[arc];
  return "block " + std::to_string(block) + " arc " + std::to_string(arc);
}

void sort_entries(NetworkInstance& instance) {
  for (CouplingBlock& b : instance.blocks) {
    std::sort(b.entries.begin(), b.entries.end(),
              [](const CouplingEntry& lhs, const CouplingEntry& rhs) {
                if (lhs.arc != rhs.arc) return lhs.arc < rhs.arc;
                return lhs.path < rhs.path;
              });
  }
}

} // namespace pathnewton
