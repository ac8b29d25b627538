// Primitive collision detection producing contact constraints once per step.
#pragma once

#include "nsdyn/constraints.h"

namespace nsdyn {

enum class ShapeKind { HalfSpace, Sphere, Box };

struct Shape {
  ShapeKind kind = ShapeKind::Sphere;
  Vec3 normal = Vec3::UnitZ();  // half-space plane normal (world frame)
  double offset = 0.0;          // half-space plane offset: n.x = offset
  double radius = 0.5;
  Vec3 half_extents = Vec3::Constant(0.5);
  double thickness = 0.0;
  double mu = -1.0;  // < 0: use the scene default
};

struct AttachedShape {
  int body = -1;  // -1: static, defined in world frame
  Shape shape;
};

struct ContactParams {
  double margin = 0.01;  // contacts created within this predicted distance
  double mu_default = 0.5;
};

// Builds the contact set for one step. Predicted gaps use the supplied
// velocities (typically the unconstrained velocity); normals are taken from
// the current configuration and stay fixed for the step. The output is
// ordered canonically by (body pair, feature index).
std::vector<ContactConstraint> detect(const GeneralizedState& state,
                                      const std::vector<AttachedShape>& shapes,
                                      const VecX& u_predict, double h,
                                      const ContactParams& params);

}  // namespace nsdyn
