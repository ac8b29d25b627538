// Generalized-coordinate bookkeeping for particles and rigid bodies.
#pragma once

#include "nsdyn/linalg.h"

namespace nsdyn {

enum class BodyType { Particle, Rigid };

// Quaternions are stored as (w, x, y, z) inside the coordinate vector.
struct Body {
  BodyType type = BodyType::Particle;
  double mass = 1.0;
  Mat3 inertia = Mat3::Identity();  // body frame, rigid bodies only

  int dof_count() const { return type == BodyType::Particle ? 3 : 6; }
  int coord_count() const { return type == BodyType::Particle ? 3 : 7; }
};

struct GeneralizedState {
  std::vector<Body> bodies;
  VecX q;  // packed coordinates
  VecX u;  // packed velocities
  std::vector<int> dof_offset;
  std::vector<int> coord_offset;
  int num_dof = 0;
  int num_coord = 0;

  // Builds offsets and zero-sizes q/u. Call after editing the body list.
  void finalize_layout();

  Vec3 position(int body) const { return q.segment<3>(coord_offset[body]); }
  void set_position(int body, const Vec3& p) { q.segment<3>(coord_offset[body]) = p; }
  Vec4 orientation(int body) const { return q.segment<4>(coord_offset[body] + 3); }
  void set_orientation(int body, const Vec4& quat) { q.segment<4>(coord_offset[body] + 3) = quat; }
  Mat3 rotation(int body) const;
  Vec3 linear_velocity(int body) const { return u.segment<3>(dof_offset[body]); }
  Vec3 angular_velocity(int body) const { return u.segment<3>(dof_offset[body] + 3); }

  // World-space point of a body-local point (identity transform for particles).
  Vec3 world_point(int body, const Vec3& local) const;
  Mat3 world_inertia(int body) const;
};

// The 4x3 matrix Q(theta) mapping angular velocity to the (un-halved)
// quaternion time-derivative, so that theta_dot = 0.5 * Q * omega.
Eigen::Matrix<double, 4, 3> quaternion_rate_matrix(const Vec4& theta);

Mat3 quaternion_to_rotation(const Vec4& theta);
Vec4 normalized_quaternion(const Vec4& theta);

// Coordinate rates G(q) u for the whole system (size num_coord).
VecX coordinate_rates(const GeneralizedState& state, const VecX& u);

// q <- q + h G(q) u_new with quaternions renormalized after the update.
void integrate_coordinates(GeneralizedState& state, const VecX& u_new, double h);

// q <- q_from + h G(q_eval) u_new. The kinematic map is evaluated at the
// state's current coordinates while integration starts from q_from.
void integrate_coordinates_from(GeneralizedState& state, const VecX& q_from, const VecX& u_new,
                                double h);

// Block-diagonal mass matrix evaluated at the state's current coordinates,
// with optional per-DOF diagonal shifts (used for the stiffness-augmented H).
struct BlockDiagMass {
  struct Block {
    BodyType type;
    int dof_offset;
    double mass;
    Mat3 inertia_world;
    Mat3 inertia_world_inv;
  };
  std::vector<Block> blocks;
  VecX shift;  // size num_dof, zero unless geometric stiffness is active
  int num_dof = 0;

  VecX diagonal() const;
  VecX apply(const VecX& v) const;
  VecX apply_inverse(const VecX& v) const;
  // j^T (M + shift)^-1 j for a sparse row given as index/value spans.
  double inverse_quadratic(const int* idx, const double* val, int nnz) const;
  // (M + shift)^-1 j for a sparse row; result has the same sparsity.
  void apply_inverse_sparse(const int* idx, const double* val, int nnz, double* out) const;
};

BlockDiagMass mass_matrix(const GeneralizedState& state);

// Generalized gravity plus rigid-body gyroscopic torques -omega x I omega.
VecX external_forces(const GeneralizedState& state, const Vec3& gravity);

// u~ = u + h M^-1 f, the unconstrained velocity with explicit forces.
VecX unconstrained_velocity(const GeneralizedState& state, const VecX& f_gen, double h);

}  // namespace nsdyn
