// Non-smooth Newton stepper: per-iteration assembly, Schur-complement solve,
// damped update, geometric stiffness, and telemetry.
#pragma once

#include "nsdyn/collision.h"
#include "nsdyn/constraints.h"
#include "nsdyn/materials.h"
#include "nsdyn/solvers.h"

namespace nsdyn {

struct NewtonConfig {
  int newton_iterations = 8;
  double step_fraction = 0.75;  // damped Newton factor t
  double epsilon_reg = 1e-6;
  bool geometric_stiffness = true;
  RStrategy r_strategy = RStrategy::EffectiveMass;
  NcpKind ncp_kind = NcpKind::FischerBurmeister;
  LinearSolverConfig linear;
  double newton_tolerance = 1e-6;  // convergence classification only
  bool line_search = false;        // merit backtracking, frictionless scenes only
  bool record_iterates = false;    // keep per-iteration velocity deltas
};

// Tetrahedral mesh bound to a block of particle bodies in the state.
struct MeshBinding {
  TetMeshElements mesh;
  int particle_base = 0;  // body index of vertex 0
};

// Assembled blocks for one Newton iteration.
struct NewtonSystem {
  SparseMatrix j;                  // stacked rows over velocity DOFs
  std::vector<Triplet> c_blocks;   // compliance blocks (E/h^2, S/h^2, W/h)
  VecX g;                          // momentum residual
  VecX h_vec;                      // constraint residual
  BlockDiagMass h_mass;            // H = M + diagonal stiffness shifts
  int num_rows = 0;
  // Telemetry gathered during assembly.
  double comp_error_max = 0.0;
  double cone_violation_max = 0.0;
  double min_gap = 0.0;
};

struct NewtonIterationStats {
  double residual_inf = 0.0;
  double merit_l2 = 0.0;
  double comp_error_max = 0.0;
  double cone_violation_max = 0.0;
  double step_size = 0.0;
  int linear_iterations = 0;
  double linear_residual = 0.0;
  bool linear_breakdown = false;
};

struct ContactTelemetry {
  double gap = 0.0;
  double lambda_n = 0.0;       // force units
  double lambda_f_norm = 0.0;  // force units
  double mu = 0.0;
  double tangential_speed = 0.0;
  double dissipation_dot = 0.0;  // lambda_f . D^T u, <= 0 when dissipative
};

struct SolveReport {
  std::vector<NewtonIterationStats> iterations;
  std::vector<std::vector<double>> linear_histories;
  std::vector<VecX> delta_u;  // applied velocity deltas (record_iterates)
  std::vector<ContactTelemetry> contacts;
  double final_residual_inf = 0.0;
  double final_comp_error = 0.0;
  double final_cone_violation = 0.0;
  double min_gap = 0.0;        // most negative contact gap seen at step end
  double min_diag_shift = 0.0; // min over iterations of min_k (H_kk - M_kk)
  bool aborted = false;
  bool converged = false;
};

struct StepContext {
  GeneralizedState* state = nullptr;
  const std::vector<JointSpec>* joints = nullptr;
  const std::vector<MeshBinding>* meshes = nullptr;
  std::vector<ContactConstraint>* contacts = nullptr;
  Vec3 gravity = Vec3(0, 0, -9.81);
  double h = 0.0083;
};

// Assembles the Newton system at the given iterate. `lambda` holds the
// h-scaled multipliers for every row in the fixed per-step row layout
// (joints, then mesh elements, then contact normals, then friction pairs).
NewtonSystem assemble(const StepContext& ctx, const BlockDiagMass& mass, const VecX& u_tilde,
                      const VecX& u, const VecX& lambda, const VecX& stiffness_shift,
                      const NewtonConfig& cfg);

struct SchurResult {
  VecX delta_lambda;  // h-scaled (impulse) increments
  VecX delta_u;
  LinearSolveResult linear;
};

// Solves [J H^-1 J^T + C + eps I] dLambda = J H^-1 g - h_vec, then back-
// substitutes dU = H^-1 (J^T dLambda - g).
SchurResult schur_solve(const NewtonSystem& sys, const NewtonConfig& cfg);

// Diagonal Broyden-style secant shifts: c_k from consecutive momentum
// residuals, clamped so the shifted diagonal never drops below the mass.
VecX geometric_stiffness_shifts(const VecX& g_prev, const VecX& g_curr,
                                const BlockDiagMass& mass, const VecX& delta_u);

// Zeroes shifts on rigid-body DOFs; only particles receive them.
VecX apply_geometric_stiffness_policy(const GeneralizedState& state, const VecX& shifts);

// Total number of constraint rows for the step's fixed layout.
int count_rows(const StepContext& ctx);

// Runs the damped Newton loop from the zero-velocity starting iterate and
// advances coordinates. Collision detection must already have run.
SolveReport newton_step(const StepContext& ctx, const NewtonConfig& cfg);

}  // namespace nsdyn
