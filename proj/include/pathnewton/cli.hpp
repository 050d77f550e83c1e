#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace pathnewton {

// `solve` subcommand options, one field per flag.
struct SolveCliOptions {
  std::string instance_path;
  std::string method = "newton-cg"; // newton-cg | diag-grad | steepest
  std::string precond = "none";     // none | diag-h | diag-r
  int cg_max_iters = 0;             // 0 lets the dimension decide
  double cg_tol = 1e-10;
  std::string stepsize = "armijo";  // armijo | constant:<alpha>
  double grad_tol = 1e-8;
  int max_outer = 100;
  std::string x0 = "zeros";         // zeros | file:<path>
  std::string trace_path;           // empty: no trace written
  bool distributed = false;
  std::uint64_t seed = 0;
  std::string dump_messages_path;   // with --distributed: message log target
};

// Solves the instance and prints `F <value>` and `grad_inf <value>` at 17
// significant digits. Returns 0 when converged, 2 when an iteration budget
// ran out, 3 on line-search failure, 1 on bad inputs.
int cli_solve(const SolveCliOptions& opts, std::ostream& out, std::ostream& err);

// `check` subcommand options.
struct CheckCliOptions {
  std::string instance_path;
  std::string x_path; // optional evaluation point; default all-zero
};

// Prints a pass/fail table for instance validation, a finite-difference
// gradient probe, and a dense-Hessian product cross-check (skipped above
// the dense-oracle size cap). Returns 1 when any row fails, else 0.
int cli_check(const CheckCliOptions& opts, std::ostream& out, std::ostream& err);

} // namespace pathnewton
