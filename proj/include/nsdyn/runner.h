// Scene execution front end: runs scenes and emits trajectory / convergence
// CSV files for plotting.
#pragma once

#include "nsdyn/scene.h"

#include <optional>
#include <string>

namespace nsdyn {

struct RunOptions {
  std::string scene;  // file path or builder name
  int steps = 100;
  std::optional<std::string> solver_method;  // jacobi | gs | pcg | pcr
  std::optional<std::string> ncp;            // minmap | fb
  std::optional<std::string> r_strategy;     // identity | h2 | effmass
  std::optional<int> newton_iters;
  std::optional<int> linear_iters;
  std::optional<double> step_fraction;
  std::optional<double> epsilon;
  unsigned seed = 0;
  std::string out_dir = ".";
};

// Exit codes: 0 success, 1 validation error, 2 numerical abort.
constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

// Loads or builds the scene with overrides applied. Throws on validation
// problems.
World load_world(const RunOptions& opts);

// Runs `steps` steps and writes trajectory.csv and convergence.csv into
// opts.out_dir (atomically). Returns an exit code.
int run(const RunOptions& opts, std::string* error = nullptr);

// Runs one scene per axis value and writes a merged long-format sweep.csv.
// axis is one of "solver", "r_strategy", "ncp".
int sweep(const RunOptions& opts, const std::string& axis, std::string* error = nullptr);

}  // namespace nsdyn
