// Declarative scene model, JSON file format, and benchmark scene builders.
#pragma once

#include "nsdyn/newton.h"

#include <optional>
#include <string>

namespace nsdyn {

struct ParticleDesc {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double mass = 1.0;
};

struct RigidDesc {
  Vec3 position = Vec3::Zero();
  Vec4 orientation = Vec4(1, 0, 0, 0);
  Vec3 velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();
  double mass = 1.0;
  std::optional<Mat3> inertia;  // derived from the shape when absent
  std::optional<Shape> shape;
};

struct StaticDesc {
  Shape shape;  // world frame
};

enum class BodyDescKind { Particle, Rigid, Static };

struct BodyDesc {
  BodyDescKind kind = BodyDescKind::Rigid;
  ParticleDesc particle;
  RigidDesc rigid;
  StaticDesc fixed;
};

// Joint attachments address a plain body index or a mesh vertex.
struct JointAttachment {
  int body = -1;  // -1: world
  int mesh = -1;  // >= 0: mesh particle (body ignored)
  int vertex = 0;
};

struct JointDesc {
  JointKind kind = JointKind::FixedPoint;
  JointAttachment a, b;
  Vec3 anchor = Vec3::Zero();  // world
  Vec3 axis = Vec3::UnitZ();   // world
  double compliance = 0.0;
  double stiffness = 0.0;  // bend springs
  Vec3 anchor_velocity = Vec3::Zero();
};

struct MeshDesc {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> elements;
  MaterialSpec material;
  double density = 1000.0;
};

struct SceneDescription {
  Vec3 gravity = Vec3(0, 0, -9.81);
  double timestep = 0.0083;
  std::vector<BodyDesc> bodies;
  std::vector<JointDesc> joints;
  std::vector<MeshDesc> meshes;
  ContactParams contacts;
  NewtonConfig solver;
};

// Parses and fully validates a scene document. Unknown keys are rejected;
// errors name the offending entity (for example "bodies[0].mass").
SceneDescription parse_scene(const std::string& text);
std::string serialize_scene(const SceneDescription& scene);

// Desk-scale benchmark scenes.
SceneDescription build_arch();
SceneDescription build_heavy_stack();
SceneDescription build_box_pile(unsigned seed);
SceneDescription build_stretch_sheet(MaterialModel model = MaterialModel::NeoHookean);
SceneDescription build_incline(double angle_deg, double mu);
SceneDescription build_box_on_plane();

// Builder dispatch by name, e.g. "incline:35:0.5". Returns nullopt for
// unknown names.
std::optional<SceneDescription> build_scene_by_name(const std::string& name, unsigned seed);

// Runtime world assembled from a description.
struct World {
  GeneralizedState state;
  std::vector<AttachedShape> shapes;
  std::vector<JointSpec> joints;
  std::vector<MeshBinding> meshes;
  std::vector<ContactConstraint> contacts;
  Vec3 gravity = Vec3(0, 0, -9.81);
  double h = 0.0083;
  ContactParams contact_params;
  NewtonConfig solver;
  // World anchors that move at a prescribed velocity (index into joints).
  std::vector<std::pair<int, Vec3>> driven_anchors;
  double time = 0.0;
};

World build_world(const SceneDescription& scene);

// Advances one step: moves driven anchors, detects contacts, runs the
// Newton solve.
SolveReport step_world(World& world);

}  // namespace nsdyn
