#include "nsdyn/runner.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nsdyn {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

void apply_overrides(const RunOptions& opts, NewtonConfig& cfg) {
  if (opts.solver_method) {
    const std::string& m = *opts.solver_method;
    if (m == "jacobi")
      cfg.linear.method = LinearMethod::Jacobi;
    else if (m == "gs")
      cfg.linear.method = LinearMethod::GaussSeidel;
    else if (m == "pcg")
      cfg.linear.method = LinearMethod::PCG;
    else if (m == "pcr")
      cfg.linear.method = LinearMethod::PCR;
    else
      throw std::runtime_error("unknown solver \"" + m + "\"");
  }
  if (opts.ncp) {
    if (*opts.ncp == "minmap")
      cfg.ncp_kind = NcpKind::MinimumMap;
    else if (*opts.ncp == "fb")
      cfg.ncp_kind = NcpKind::FischerBurmeister;
    else
      throw std::runtime_error("unknown NCP function \"" + *opts.ncp + "\"");
  }
  if (opts.r_strategy) {
    if (*opts.r_strategy == "identity")
      cfg.r_strategy = RStrategy::Identity;
    else if (*opts.r_strategy == "h2")
      cfg.r_strategy = RStrategy::TimestepSquared;
    else if (*opts.r_strategy == "effmass")
      cfg.r_strategy = RStrategy::EffectiveMass;
    else
      throw std::runtime_error("unknown r strategy \"" + *opts.r_strategy + "\"");
  }
  if (opts.newton_iters) {
    if (*opts.newton_iters < 1) throw std::runtime_error("--newton-iters must be >= 1");
    cfg.newton_iterations = *opts.newton_iters;
  }
  if (opts.linear_iters) {
    if (*opts.linear_iters < 1) throw std::runtime_error("--linear-iters must be >= 1");
    cfg.linear.max_iterations = *opts.linear_iters;
  }
  if (opts.step_fraction) {
    if (*opts.step_fraction <= 0.0 || *opts.step_fraction > 1.0)
      throw std::runtime_error("--t must lie in (0, 1]");
    cfg.step_fraction = *opts.step_fraction;
  }
  if (opts.epsilon) {
    if (*opts.epsilon < 0.0) throw std::runtime_error("--eps must be >= 0");
    cfg.epsilon_reg = *opts.epsilon;
  }
}

void append_trajectory(std::string& csv, int step, const GeneralizedState& state) {
  for (size_t b = 0; b < state.bodies.size(); ++b) {
    csv += std::to_string(step);
    csv += ',';
    csv += std::to_string(b);
    const Vec3 p = state.position(static_cast<int>(b));
    for (int k = 0; k < 3; ++k) csv += ',' + fmt(p[k]);
    if (state.bodies[b].type == BodyType::Rigid) {
      const Vec4 q = state.orientation(static_cast<int>(b));
      for (int k = 0; k < 4; ++k) csv += ',' + fmt(q[k]);
    } else {
      csv += ",1,0,0,0";
    }
    const Vec3 v = state.linear_velocity(static_cast<int>(b));
    for (int k = 0; k < 3; ++k) csv += ',' + fmt(v[k]);
    if (state.bodies[b].type == BodyType::Rigid) {
      const Vec3 w = state.angular_velocity(static_cast<int>(b));
      for (int k = 0; k < 3; ++k) csv += ',' + fmt(w[k]);
    } else {
      csv += ",0,0,0";
    }
    csv += '\n';
  }
}

void append_convergence(std::string& csv, int step, const SolveReport& report,
                        const std::string& prefix) {
  for (size_t i = 0; i < report.iterations.size(); ++i) {
    const NewtonIterationStats& it = report.iterations[i];
    csv += prefix;
    csv += std::to_string(step);
    csv += ',' + std::to_string(i);
    csv += ',' + fmt(it.residual_inf);
    csv += ',' + fmt(it.comp_error_max);
    csv += ',' + fmt(it.cone_violation_max);
    csv += ',' + fmt(it.step_size);
    csv += ',' + std::to_string(it.linear_iterations);
    csv += ',' + fmt(it.linear_residual);
    csv += '\n';
  }
}

constexpr const char* kTrajectoryHeader =
    "step,body,qx,qy,qz,q0,q1,q2,q3,ux,uy,uz,wx,wy,wz\n";
constexpr const char* kConvergenceHeader =
    "step,newton_iter,residual_inf,comp_error_n_max,cone_violation_max,step_size,linear_iters,"
    "linear_residual_final\n";

}  // namespace

World load_world(const RunOptions& opts) {
  SceneDescription scene;
  if (std::filesystem::exists(opts.scene)) {
    std::ifstream in(opts.scene, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    scene = parse_scene(ss.str());
  } else {
    const auto built = build_scene_by_name(opts.scene, opts.seed);
    if (!built)
      throw std::runtime_error("scene \"" + opts.scene +
                               "\" is neither a file nor a known builder");
    scene = *built;
  }
  apply_overrides(opts, scene.solver);
  return build_world(scene);
}

int run(const RunOptions& opts, std::string* error) {
  try {
    if (opts.steps < 1) throw std::runtime_error("--steps must be >= 1");
    World world = load_world(opts);

    std::string trajectory = kTrajectoryHeader;
    std::string convergence = kConvergenceHeader;

    bool aborted = false;
    for (int step = 0; step < opts.steps; ++step) {
      const SolveReport report = step_world(world);
      append_trajectory(trajectory, step, world.state);
      append_convergence(convergence, step, report, "");
      if (report.aborted) {
        aborted = true;
        break;
      }
    }

    std::filesystem::create_directories(opts.out_dir);
    write_atomic(std::filesystem::path(opts.out_dir) / "trajectory.csv", trajectory);
    write_atomic(std::filesystem::path(opts.out_dir) / "convergence.csv", convergence);

    if (aborted) {
      if (error) *error = "numerical abort (NaN) during solve";
      return kExitNumerical;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    return kExitValidation;
  }
}

int sweep(const RunOptions& opts, const std::string& axis, std::string* error) {
  try {
    if (opts.steps < 1) throw std::runtime_error("--steps must be >= 1");
    std::vector<std::string> values;
    if (axis == "solver")
      values = {"jacobi", "gs", "pcg", "pcr"};
    else if (axis == "r_strategy")
      values = {"identity", "h2", "effmass"};
    else if (axis == "ncp")
      values = {"minmap", "fb"};
    else
      throw std::runtime_error("unknown sweep axis \"" + axis + "\"");

    std::string csv = std::string("axis_value,") + kConvergenceHeader;
    for (const std::string& value : values) {
      RunOptions sub = opts;
      if (axis == "solver")
        sub.solver_method = value;
      else if (axis == "r_strategy")
        sub.r_strategy = value;
      else
        sub.ncp = value;
      World world = load_world(sub);
      for (int step = 0; step < opts.steps; ++step) {
        const SolveReport report = step_world(world);
        append_convergence(csv, step, report, value + ",");
        if (report.aborted) break;
      }
    }
    std::filesystem::create_directories(opts.out_dir);
    write_atomic(std::filesystem::path(opts.out_dir) / "sweep.csv", csv);
    return kExitOk;
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    return kExitValidation;
  }
}

}  // namespace nsdyn
