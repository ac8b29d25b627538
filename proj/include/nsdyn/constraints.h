// Constraint row construction: joints, contacts, friction.
#pragma once

#include "nsdyn/bodies.h"
#include "nsdyn/ncp.h"

#include <vector>

namespace nsdyn {

// Sparse row over generalized-velocity DOFs, kept sorted by index.
struct GenRow {
  std::vector<int> idx;
  std::vector<double> val;

  void add(int i, double v);
  void add_block3(int dof_offset, const Vec3& v);
  void clear() {
    idx.clear();
    val.clear();
  }
  double dot(const VecX& x) const;
  void compress();  // sort indices, merge duplicates
};

// Attachment of a constraint to a body-local point; body < 0 means a fixed
// world point stored directly in `local`.
struct AttachPoint {
  int body = -1;
  Vec3 local = Vec3::Zero();
};

Vec3 attach_world_point(const GeneralizedState& state, const AttachPoint& p);
Vec3 attach_world_velocity(const GeneralizedState& state, const AttachPoint& p);

// Adds sign * d^T (point Jacobian) for the attachment to the row.
void add_point_jacobian(GenRow& row, const GeneralizedState& state, const AttachPoint& p,
                        const Vec3& direction, double sign);

struct ContactConstraint {
  AttachPoint a, b;
  Vec3 normal = Vec3::UnitZ();  // world space, fixed for the step, points b -> a
  double thickness = 0.0;
  double mu = 0.0;
  Vec3 d1 = Vec3::UnitX(), d2 = Vec3::UnitY();
  // Multipliers are stored h-scaled (impulses) and updated by the stepper.
  double lambda_n = 0.0;
  Vec2 lambda_f = Vec2::Zero();
  int feature = 0;  // corner / sub-contact id for canonical ordering
};

// Signed gap n^T (a - b) - thickness at the current coordinates.
double contact_gap(const ContactConstraint& c, const GeneralizedState& state);

// Geometric velocity-level rows (no NCP scaling applied).
GenRow contact_normal_row(const ContactConstraint& c, const GeneralizedState& state);
void contact_tangent_rows(const ContactConstraint& c, const GeneralizedState& state, GenRow& t1,
                          GenRow& t2);

// Deterministic orthonormal basis with d2 = n x d1.
void tangent_basis(const Vec3& n, Vec3& d1, Vec3& d2);

enum class RStrategy { Identity, TimestepSquared, EffectiveMass };
enum class RowClass { Position, Velocity };

// Complementarity preconditioner factor for one row. `effective_mass_diag`
// is the row's [J M^-1 J^T] diagonal entry.
double r_factor(double effective_mass_diag, double h, RowClass row_class, RStrategy strategy);

enum class JointKind { FixedPoint, Revolute, Prismatic, BendSpring };

struct JointSpec {
  JointKind kind = JointKind::FixedPoint;
  int body_a = -1;
  int body_b = -1;
  Vec3 anchor_a = Vec3::Zero();  // local frames (world for body index < 0)
  Vec3 anchor_b = Vec3::Zero();
  Vec3 axis_a = Vec3::UnitZ();   // primary axis, body-a frame
  Vec3 axis_a2 = Vec3::UnitX();  // complementary axis, body-a frame
  Vec3 axis_b1 = Vec3::UnitX();  // complementary axes, body-b frame
  Vec3 axis_b2 = Vec3::UnitY();
  double compliance = 0.0;   // per-row compliance e (0 = hard)
  double stiffness = 0.0;    // bend springs: e = 1/k
  Vec3 rest_dots = Vec3::Zero();  // rest values for orientation rows
  Vec3 anchor_velocity = Vec3::Zero();  // drives a world-side anchor
};

struct BilateralRowEval {
  double value = 0.0;  // C(q)
  GenRow jac;          // dC/du
  double compliance = 0.0;
};

std::vector<BilateralRowEval> joint_rows(const JointSpec& joint, const GeneralizedState& state);

// Captures local anchors/axes and rest offsets from the current pose.
void bind_joint(JointSpec& joint, const GeneralizedState& state, const Vec3& world_anchor,
                const Vec3& world_axis);

}  // namespace nsdyn
