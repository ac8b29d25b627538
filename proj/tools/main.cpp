// nsdyn command-line front end.
#include "nsdyn/runner.h"

#include <CLI11.hpp>

#include <cstdio>

int main(int argc, char** argv) {
  CLI::App app{"nsdyn - multi-body dynamics benchmark runner"};
  app.require_subcommand(1);

  nsdyn::RunOptions opts;
  std::string axis = "solver";
  std::string solver, ncp, rstrat;
  int newton_iters = 0, linear_iters = 0;
  double t = 0.0, eps = -1.0;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--scene", opts.scene, "scene file path or builder name")->required();
    cmd->add_option("--steps", opts.steps, "number of simulation steps");
    cmd->add_option("--solver", solver, "linear solver: jacobi|gs|pcg|pcr");
    cmd->add_option("--ncp", ncp, "NCP function: minmap|fb");
    cmd->add_option("--r", rstrat, "r-factor strategy: identity|h2|effmass");
    cmd->add_option("--newton-iters", newton_iters, "Newton iterations per step");
    cmd->add_option("--linear-iters", linear_iters, "linear iterations per Newton iteration");
    cmd->add_option("--t", t, "damped Newton step fraction (0, 1]");
    cmd->add_option("--eps", eps, "regularization epsilon");
    cmd->add_option("--seed", opts.seed, "random seed for seeded builders");
    cmd->add_option("--out", opts.out_dir, "output directory");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run a scene and write CSV outputs");
  add_common(run_cmd);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run one scene per axis value");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--axis", axis, "sweep axis: solver|r_strategy|ncp");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return nsdyn::kExitValidation;
  }

  if (!solver.empty()) opts.solver_method = solver;
  if (!ncp.empty()) opts.ncp = ncp;
  if (!rstrat.empty()) opts.r_strategy = rstrat;
  if (newton_iters > 0) opts.newton_iters = newton_iters;
  if (linear_iters > 0) opts.linear_iters = linear_iters;
  if (t > 0.0) opts.step_fraction = t;
  if (eps >= 0.0) opts.epsilon = eps;

  std::string error;
  int code = 0;
  if (run_cmd->parsed())
    code = nsdyn::run(opts, &error);
  else
    code = nsdyn::sweep(opts, axis, &error);
  if (code != nsdyn::kExitOk) std::fprintf(stderr, "error: %s\n", error.c_str());
  return code;
}
