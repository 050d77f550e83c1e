#include <iostream>

#include "CLI11.hpp"
#include "pathnewton/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Path-flow network optimizer"};
  app.require_subcommand(1);

  pathnewton::SolveCliOptions s;
  CLI::App* solve = app.add_subcommand("solve", "Minimize an instance file");
  solve->add_option("--instance", s.instance_path, "Instance file")->required();
  solve->add_option("--method", s.method, "newton-cg | diag-grad | steepest");
  solve->add_option("--precond", s.precond, "none | diag-h | diag-r");
  solve->add_option("--cg-max-iters", s.cg_max_iters,
                    "Inner iteration budget (0: problem dimension)");
  solve->add_option("--cg-tol", s.cg_tol, "Relative residual tolerance");
  solve->add_option("--stepsize", s.stepsize, "armijo | constant:<alpha>");
  solve->add_option("--grad-tol", s.grad_tol, "Stop when the gradient max-norm drops here");
  solve->add_option("--max-outer", s.max_outer, "Outer iteration budget");
  solve->add_option("--x0", s.x0, "zeros | file:<path>");
  solve->add_option("--trace", s.trace_path, "Write a per-iteration CSV here");
  solve->add_flag("--distributed", s.distributed,
                  "Run the synchronous message-passing simulation");
  solve->add_option("--seed", s.seed, "Topology seed for --distributed");
  solve->add_option("--dump-messages", s.dump_messages_path,
                    "With --distributed: write the message log here");

  pathnewton::CheckCliOptions c;
  CLI::App* check = app.add_subcommand("check", "Validate an instance and its calculus");
  check->add_option("--instance", c.instance_path, "Instance file")->required();
  check->add_option("--x", c.x_path, "Evaluation point file (default: zeros)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (solve->parsed()) return pathnewton::cli_solve(s, std::cout, std::cerr);
  if (check->parsed()) return pathnewton::cli_check(c, std::cout, std::cerr);
  return 1;
}
