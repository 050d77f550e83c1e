#include "pathnewton/cli.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "pathnewton/calculus.hpp"
#include "pathnewton/constraints.hpp"
#include "pathnewton/distsim.hpp"
#include "pathnewton/io.hpp"

namespace pathnewton {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool parse_method(const std::string& name, Method& out) {
  if (name == "newton-cg") out = Method::NewtonCG;
  else if (name == "diag-grad") out = Method::DiagScaledGradient;
  else if (name == "steepest") out = Method::SteepestDescent;
  else return false;
  return true;
}

bool parse_precond(const std::string& name, Preconditioner::Kind& out) {
  if (name == "none") out = Preconditioner::Kind::None;
  else if (name == "diag-h") out = Preconditioner::Kind::DiagHessian;
  else if (name == "diag-r") out = Preconditioner::Kind::DiagR;
  else return false;
  return true;
}

bool parse_stepsize(const std::string& text, StepsizeRule& out) {
  if (text == "armijo") {
    out = StepsizeRule{};
    out.kind = StepsizeRule::Kind::Armijo;
    return true;
  }
  const std::string prefix = "constant:";
  if (text.rfind(prefix, 0) != 0) return false;
  const std::string num = text.substr(prefix.size());
  char* end = nullptr;
  const double alpha = std::strtod(num.c_str(), &end);
  if (num.empty() || end != num.c_str() + num.size() || !(alpha > 0.0)) return false;
  out = StepsizeRule::constant_step(alpha);
  return true;
}

bool is_constrained(const NetworkInstance& instance) {
  return (instance.equalities && instance.equalities->num_rows() > 0) ||
         !instance.nonneg_paths.empty();
}

int status_exit_code(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return 0;
    case SolveStatus::MaxIters: return 2;
    case SolveStatus::LineSearchFailure: return 3;
  }
  return 1;
}

struct CheckRow {
  std::string name;
  std::string result; // PASS | FAIL | skipped
  std::string detail;
};

} // namespace

int cli_solve(const SolveCliOptions& opts, std::ostream& out, std::ostream& err) {
  NetworkInstance instance;
  std::vector<double> x0;
  NewtonConfig config;
  try {
    if (opts.instance_path.empty())
      throw std::runtime_error("--instance is required");
    instance = load_instance(opts.instance_path);

    if (!parse_method(opts.method, config.method))
      throw std::runtime_error("unknown --method '" + opts.method + "'");
    if (!parse_precond(opts.precond, config.precond))
      throw std::runtime_error("unknown --precond '" + opts.precond + "'");
    if (!parse_stepsize(opts.stepsize, config.stepsize))
      throw std::runtime_error("bad --stepsize '" + opts.stepsize +
                               "' (want armijo or constant:<alpha>)");
    if (opts.cg_max_iters < 0) throw std::runtime_error("--cg-max-iters must be >= 0");
    if (!(opts.cg_tol > 0.0)) throw std::runtime_error("--cg-tol must be positive");
    if (!(opts.grad_tol >= 0.0)) throw std::runtime_error("--grad-tol must be >= 0");
    if (opts.max_outer <= 0) throw std::runtime_error("--max-outer must be positive");
    config.cg.max_iters = opts.cg_max_iters;
    config.cg.rel_residual_tol = opts.cg_tol;
    config.grad_tol = opts.grad_tol;
    config.max_outer = opts.max_outer;

    if (opts.x0 == "zeros") {
      x0.assign(instance.num_paths, 0.0);
    } else if (opts.x0.rfind("file:", 0) == 0) {
      x0 = parse_vector(read_text_file(opts.x0.substr(5)));
      if (static_cast<int>(x0.size()) != instance.num_paths)
        throw std::runtime_error("--x0 file has " + std::to_string(x0.size()) +
                                 " values; instance has " +
                                 std::to_string(instance.num_paths) + " paths");
    } else {
      throw std::runtime_error("bad --x0 '" + opts.x0 + "' (want zeros or file:<path>)");
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    SpanningTree tree;
    if (opts.distributed) tree = build_topology(instance, opts.seed);
    std::string message_log;
    std::string* log_target =
        (opts.distributed && !opts.dump_messages_path.empty()) ? &message_log : nullptr;

    NewtonReport report;
    double final_f = 0.0;
    int exit_code = 0;

    if (!is_constrained(instance)) {
      if (opts.distributed)
        report = run_distributed_newton(instance, x0, config, tree, log_target).report;
      else
        report = minimize(instance, x0, config);
      final_f = report.objective_value;
      exit_code = status_exit_code(report.status);
    } else {
      InnerSolver inner;
      if (opts.distributed) {
        inner = [&](const NetworkInstance& sub, const std::vector<double>& start,
                    const NewtonConfig& cfg) {
          return run_distributed_newton(sub, start, cfg, build_topology(sub, opts.seed),
                                        log_target)
              .report;
        };
      }
      ConstrainedReport cons = solve_constrained(instance, x0, {}, inner);
      report = cons.last_inner;
      // Report the plain objective, not the penalized one the inner solver
      // saw; fall back when the iterate sits just outside the plain domain.
      try {
        final_f = objective(refresh(instance, cons.x));
      } catch (const DomainViolation&) {
        final_f = report.objective_value;
      }
      if (cons.status == SolveStatus::LineSearchFailure) exit_code = 3;
      else if (!cons.feasible || cons.status != SolveStatus::Converged) exit_code = 2;
      else exit_code = 0;
    }

    if (!opts.trace_path.empty())
      write_text_file(opts.trace_path, format_trace(report.trace));
    if (log_target != nullptr)
      write_text_file(opts.dump_messages_path, message_log);

    out << "F " << fmt17(final_f) << "\n";
    out << "grad_inf " << fmt17(report.grad_inf_norm) << "\n";
    return exit_code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cli_check(const CheckCliOptions& opts, std::ostream& out, std::ostream& err) {
  NetworkInstance instance;
  std::vector<double> x;
  try {
    if (opts.instance_path.empty())
      throw std::runtime_error("--instance is required");
    instance = load_instance(opts.instance_path);
    if (opts.x_path.empty()) {
      x.assign(instance.num_paths, 0.0);
    } else {
      x = parse_vector(read_text_file(opts.x_path));
      if (static_cast<int>(x.size()) != instance.num_paths)
        throw std::runtime_error("--x file has " + std::to_string(x.size()) +
                                 " values; instance has " +
                                 std::to_string(instance.num_paths) + " paths");
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  std::vector<CheckRow> rows;
  const ValidationReport vr = validate(instance);
  rows.push_back({"validate", vr.ok() ? "PASS" : "FAIL",
                  std::to_string(vr.violations.size()) + " violations"});

  bool evaluated = true;
  try {
    FlowState state = refresh(instance, x);
    const std::vector<double> g = gradient(state);

    // Central differences on the full objective, one coordinate at a time.
    // Probes that step outside a cost domain skip that coordinate.
    double max_rel = 0.0;
    int checked = 0, skipped = 0;
    std::vector<double> probe = x;
    for (int p = 0; p < instance.num_paths; ++p) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[p]));
      double f_plus = 0.0, f_minus = 0.0;
      try {
        probe[p] = x[p] + h;
        f_plus = objective(refresh(instance, probe));
        probe[p] = x[p] - h;
        f_minus = objective(refresh(instance, probe));
      } catch (const DomainViolation&) {
        probe[p] = x[p];
        ++skipped;
        continue;
      }
      probe[p] = x[p];
      const double fd = (f_plus - f_minus) / (2.0 * h);
      const double rel = std::abs(fd - g[p]) / std::max(1.0, std::abs(g[p]));
      max_rel = std::max(max_rel, rel);
      ++checked;
    }
    std::string detail = "max rel err " + fmt17(max_rel) + " over " +
                         std::to_string(checked) + " coordinates";
    if (skipped > 0) detail += ", " + std::to_string(skipped) + " at a domain edge";
    if (checked == 0)
      rows.push_back({"gradient-fd", "skipped", "every probe left a cost domain"});
    else
      rows.push_back({"gradient-fd", max_rel <= 1e-5 ? "PASS" : "FAIL", detail});

    const int kOracleCap = 200;
    if (instance.num_paths > kOracleCap) {
      rows.push_back({"hvp-oracle", "skipped",
                      "P exceeds the dense-oracle cap of " + std::to_string(kOracleCap)});
    } else {
      const DenseMatrix h = dense_hessian_oracle(instance, x, kOracleCap);
      std::mt19937_64 rng(12345);
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      double worst = 0.0;
      for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> v(instance.num_paths);
        for (double& vi : v) vi = unit(rng);
        const std::vector<double> hv = hessian_vector_product(state, v);
        for (int i = 0; i < instance.num_paths; ++i) {
          double dense = 0.0;
          for (int j = 0; j < instance.num_paths; ++j) dense += h.at(i, j) * v[j];
          worst = std::max(worst,
                           std::abs(hv[i] - dense) / std::max(1.0, std::abs(dense)));
        }
      }
      rows.push_back({"hvp-oracle", worst <= 1e-10 ? "PASS" : "FAIL",
                      "max rel err " + fmt17(worst) + " over 10 vectors"});
    }
  } catch (const std::exception& e) {
    evaluated = false;
    rows.push_back({"evaluate", "FAIL", e.what()});
  }
  (void)evaluated;

  out << "check        result   detail\n";
  bool any_fail = false;
  for (const CheckRow& r : rows) {
    out << r.name;
    for (std::size_t i = r.name.size(); i < 13; ++i) out << ' ';
    out << r.result;
    for (std::size_t i = r.result.size(); i < 9; ++i) out << ' ';
    out << r.detail << "\n";
    if (r.result == "FAIL") any_fail = true;
  }
  return any_fail ? 1 : 0;
}

} // namespace pathnewton
