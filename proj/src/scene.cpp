#include "nsdyn/scene.h"

#include <json.hpp>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nsdyn {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("scene error at " + path + ": " + what);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) fail(path, "unknown key \"" + it.key() + "\"");
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double number_at(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

double require_number(const json& obj, const char* key, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) fail(path + "." + key, "missing");
  return number_at(*v, path + "." + key);
}

double optional_number(const json& obj, const char* key, const std::string& path, double dflt) {
  const json* v = find(obj, key);
  return v ? number_at(*v, path + "." + key) : dflt;
}

bool optional_bool(const json& obj, const char* key, const std::string& path, bool dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_boolean()) fail(path + "." + key, "expected a boolean");
  return v->get<bool>();
}

int optional_int(const json& obj, const char* key, const std::string& path, int dflt) {
  const json* v = find(obj, key);
  if (!v) return dflt;
  if (!v->is_number_integer()) fail(path + "." + key, "expected an integer");
  return v->get<int>();
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) fail(path + "." + key, "missing");
  if (!v->is_string()) fail(path + "." + key, "expected a string");
  return v->get<std::string>();
}

Vec3 vec3_at(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) fail(path, "expected an array of 3 numbers");
  return Vec3(number_at(v[0], path), number_at(v[1], path), number_at(v[2], path));
}

Vec3 optional_vec3(const json& obj, const char* key, const std::string& path, const Vec3& dflt) {
  const json* v = find(obj, key);
  return v ? vec3_at(*v, path + "." + key) : dflt;
}

Vec4 quat_from_json(const json& v, const std::string& path) {
  if (v.is_array()) {
    if (v.size() != 4) fail(path, "expected a quaternion [w,x,y,z]");
    Vec4 q(number_at(v[0], path), number_at(v[1], path), number_at(v[2], path),
           number_at(v[3], path));
    return normalized_quaternion(q);
  }
  if (v.is_object()) {
    check_keys(v, {"axis", "angle_deg"}, path);
    const Vec3 axis = vec3_at(*find(v, "axis"), path + ".axis").normalized();
    const double half = 0.5 * require_number(v, "angle_deg", path) * M_PI / 180.0;
    return Vec4(std::cos(half), std::sin(half) * axis.x(), std::sin(half) * axis.y(),
                std::sin(half) * axis.z());
  }
  fail(path, "expected a quaternion array or {axis, angle_deg}");
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json vec4_to_json(const Vec4& v) { return json::array({v[0], v[1], v[2], v[3]}); }

Shape parse_shape(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  check_keys(obj, {"kind", "normal", "offset", "radius", "half_extents", "thickness", "mu"},
             path);
  Shape s;
  const std::string kind = require_string(obj, "kind", path);
  if (kind == "halfspace") {
    s.kind = ShapeKind::HalfSpace;
    s.normal = optional_vec3(obj, "normal", path, Vec3::UnitZ());
    if (s.normal.norm() < 1e-12) fail(path + ".normal", "zero-length normal");
    s.normal.normalize();
    s.offset = optional_number(obj, "offset", path, 0.0);
  } else if (kind == "sphere") {
    s.kind = ShapeKind::Sphere;
    s.radius = require_number(obj, "radius", path);
    if (s.radius <= 0.0) fail(path + ".radius", "must be positive");
  } else if (kind == "box") {
    s.kind = ShapeKind::Box;
    s.half_extents = vec3_at(*[&] {
      const json* v = find(obj, "half_extents");
      if (!v) fail(path + ".half_extents", "missing");
      return v;
    }(), path + ".half_extents");
    if (s.half_extents.minCoeff() <= 0.0) fail(path + ".half_extents", "must be positive");
  } else {
    fail(path + ".kind", "unknown shape kind \"" + kind + "\"");
  }
  s.thickness = optional_number(obj, "thickness", path, 0.0);
  if (s.thickness < 0.0) fail(path + ".thickness", "must be non-negative");
  s.mu = optional_number(obj, "mu", path, -1.0);
  return s;
}

json shape_to_json(const Shape& s) {
  json o;
  switch (s.kind) {
    case ShapeKind::HalfSpace:
      o["kind"] = "halfspace";
      o["normal"] = vec3_to_json(s.normal);
      o["offset"] = s.offset;
      break;
    case ShapeKind::Sphere:
      o["kind"] = "sphere";
      o["radius"] = s.radius;
      break;
    case ShapeKind::Box:
      o["kind"] = "box";
      o["half_extents"] = vec3_to_json(s.half_extents);
      break;
  }
  if (s.thickness != 0.0) o["thickness"] = s.thickness;
  if (s.mu >= 0.0) o["mu"] = s.mu;
  return o;
}

LinearSolverConfig parse_linear(const json& obj, const std::string& path) {
  check_keys(obj, {"method", "iterations", "tolerance", "preconditioner"}, path);
  LinearSolverConfig cfg;
  const std::string m = require_string(obj, "method", path);
  if (m == "jacobi")
    cfg.method = LinearMethod::Jacobi;
  else if (m == "gs")
    cfg.method = LinearMethod::GaussSeidel;
  else if (m == "pcg")
    cfg.method = LinearMethod::PCG;
  else if (m == "pcr")
    cfg.method = LinearMethod::PCR;
  else
    fail(path + ".method", "unknown method \"" + m + "\"");
  cfg.max_iterations = optional_int(obj, "iterations", path, 40);
  if (cfg.max_iterations < 1) fail(path + ".iterations", "must be >= 1");
  cfg.tolerance = optional_number(obj, "tolerance", path, 1e-10);
  if (cfg.tolerance < 0.0) fail(path + ".tolerance", "must be >= 0");
  const std::string p = find(obj, "preconditioner")
                            ? require_string(obj, "preconditioner", path)
                            : std::string("diagonal");
  if (p == "none")
    cfg.preconditioner = PreconditionerKind::None;
  else if (p == "diagonal")
    cfg.preconditioner = PreconditionerKind::Diagonal;
  else
    fail(path + ".preconditioner", "unknown preconditioner \"" + p + "\"");
  return cfg;
}

json linear_to_json(const LinearSolverConfig& cfg) {
  json o;
  switch (cfg.method) {
    case LinearMethod::Jacobi: o["method"] = "jacobi"; break;
    case LinearMethod::GaussSeidel: o["method"] = "gs"; break;
    case LinearMethod::PCG: o["method"] = "pcg"; break;
    case LinearMethod::PCR: o["method"] = "pcr"; break;
  }
  o["iterations"] = cfg.max_iterations;
  o["tolerance"] = cfg.tolerance;
  o["preconditioner"] =
      cfg.preconditioner == PreconditionerKind::Diagonal ? "diagonal" : "none";
  return o;
}

NewtonConfig parse_solver(const json& obj, const std::string& path) {
  check_keys(obj,
             {"newton_iterations", "step_fraction", "epsilon", "geometric_stiffness",
              "r_strategy", "ncp", "newton_tolerance", "line_search", "linear"},
             path);
  NewtonConfig cfg;
  cfg.newton_iterations = optional_int(obj, "newton_iterations", path, 8);
  if (cfg.newton_iterations < 1) fail(path + ".newton_iterations", "must be >= 1");
  cfg.step_fraction = optional_number(obj, "step_fraction", path, 0.75);
  if (cfg.step_fraction <= 0.0 || cfg.step_fraction > 1.0)
    fail(path + ".step_fraction", "must lie in (0, 1]");
  cfg.epsilon_reg = optional_number(obj, "epsilon", path, 1e-6);
  if (cfg.epsilon_reg < 0.0) fail(path + ".epsilon", "must be >= 0");
  cfg.geometric_stiffness = optional_bool(obj, "geometric_stiffness", path, true);
  cfg.newton_tolerance = optional_number(obj, "newton_tolerance", path, 1e-6);
  cfg.line_search = optional_bool(obj, "line_search", path, false);
  if (const json* v = find(obj, "r_strategy")) {
    const std::string r = v->get<std::string>();
    if (r == "identity")
      cfg.r_strategy = RStrategy::Identity;
    else if (r == "h2")
      cfg.r_strategy = RStrategy::TimestepSquared;
    else if (r == "effmass")
      cfg.r_strategy = RStrategy::EffectiveMass;
    else
      fail(path + ".r_strategy", "unknown strategy \"" + r + "\"");
  }
  if (const json* v = find(obj, "ncp")) {
    const std::string n = v->get<std::string>();
    if (n == "minmap")
      cfg.ncp_kind = NcpKind::MinimumMap;
    else if (n == "fb")
      cfg.ncp_kind = NcpKind::FischerBurmeister;
    else
      fail(path + ".ncp", "unknown NCP function \"" + n + "\"");
  }
  if (const json* v = find(obj, "linear")) cfg.linear = parse_linear(*v, path + ".linear");
  return cfg;
}

json solver_to_json(const NewtonConfig& cfg) {
  json o;
  o["newton_iterations"] = cfg.newton_iterations;
  o["step_fraction"] = cfg.step_fraction;
  o["epsilon"] = cfg.epsilon_reg;
  o["geometric_stiffness"] = cfg.geometric_stiffness;
  switch (cfg.r_strategy) {
    case RStrategy::Identity: o["r_strategy"] = "identity"; break;
    case RStrategy::TimestepSquared: o["r_strategy"] = "h2"; break;
    case RStrategy::EffectiveMass: o["r_strategy"] = "effmass"; break;
  }
  o["ncp"] = cfg.ncp_kind == NcpKind::MinimumMap ? "minmap" : "fb";
  o["newton_tolerance"] = cfg.newton_tolerance;
  o["line_search"] = cfg.line_search;
  o["linear"] = linear_to_json(cfg.linear);
  return o;
}

MaterialSpec parse_material(const json& obj, const std::string& path) {
  check_keys(obj, {"model", "young", "poisson", "diagonal_compliance"}, path);
  MaterialSpec m;
  const std::string model = require_string(obj, "model", path);
  if (model == "linear")
    m.model = MaterialModel::Linear;
  else if (model == "neohookean")
    m.model = MaterialModel::NeoHookean;
  else
    fail(path + ".model", "unknown material model \"" + model + "\"");
  m.young = require_number(obj, "young", path);
  if (m.young <= 0.0) fail(path + ".young", "must be positive");
  m.poisson = require_number(obj, "poisson", path);
  if (m.poisson < 0.0 || m.poisson >= 0.4999) fail(path + ".poisson", "must lie in [0, 0.4999)");
  m.diagonal_compliance = optional_bool(obj, "diagonal_compliance", path, false);
  return m;
}

JointAttachment parse_attachment(const json& obj, const char* body_key, const char* mesh_key,
                                 const char* vertex_key, const std::string& path) {
  JointAttachment a;
  if (const json* v = find(obj, mesh_key)) {
    if (!v->is_number_integer()) fail(path + "." + mesh_key, "expected an integer");
    a.mesh = v->get<int>();
    a.vertex = optional_int(obj, vertex_key, path, 0);
  } else {
    a.body = optional_int(obj, body_key, path, -1);
  }
  return a;
}

}  // namespace

SceneDescription parse_scene(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("scene syntax error: ") + e.what());
  }
  if (!doc.is_object()) throw std::runtime_error("scene error at $: expected an object");
  check_keys(doc, {"gravity", "timestep", "bodies", "joints", "meshes", "contacts", "solver"},
             "$");

  SceneDescription scene;
  scene.gravity = optional_vec3(doc, "gravity", "$", Vec3(0, 0, -9.81));
  scene.timestep = optional_number(doc, "timestep", "$", 0.0083);
  if (scene.timestep <= 0.0) fail("$.timestep", "must be positive");

  if (const json* bodies = find(doc, "bodies")) {
    if (!bodies->is_array()) fail("$.bodies", "expected an array");
    for (size_t i = 0; i < bodies->size(); ++i) {
      const json& b = (*bodies)[i];
      const std::string path = "bodies[" + std::to_string(i) + "]";
      const std::string type = require_string(b, "type", path);
      BodyDesc desc;
      if (type == "particle") {
        check_keys(b, {"type", "position", "velocity", "mass"}, path);
        desc.kind = BodyDescKind::Particle;
        desc.particle.position = optional_vec3(b, "position", path, Vec3::Zero());
        desc.particle.velocity = optional_vec3(b, "velocity", path, Vec3::Zero());
        desc.particle.mass = require_number(b, "mass", path);
        if (desc.particle.mass <= 0.0) fail(path + ".mass", "must be positive");
      } else if (type == "rigid") {
        check_keys(b,
                   {"type", "position", "orientation", "velocity", "angular_velocity", "mass",
                    "inertia", "shape"},
                   path);
        desc.kind = BodyDescKind::Rigid;
        desc.rigid.position = optional_vec3(b, "position", path, Vec3::Zero());
        if (const json* o = find(b, "orientation"))
          desc.rigid.orientation = quat_from_json(*o, path + ".orientation");
        desc.rigid.velocity = optional_vec3(b, "velocity", path, Vec3::Zero());
        desc.rigid.angular_velocity = optional_vec3(b, "angular_velocity", path, Vec3::Zero());
        desc.rigid.mass = require_number(b, "mass", path);
        if (desc.rigid.mass <= 0.0) fail(path + ".mass", "must be positive");
        if (const json* inertia = find(b, "inertia")) {
          if (!inertia->is_array() || inertia->size() != 3)
            fail(path + ".inertia", "expected a 3x3 matrix");
          Mat3 m;
          for (int r = 0; r < 3; ++r) {
            const json& rowv = (*inertia)[r];
            if (!rowv.is_array() || rowv.size() != 3)
              fail(path + ".inertia", "expected a 3x3 matrix");
            for (int c = 0; c < 3; ++c) m(r, c) = number_at(rowv[c], path + ".inertia");
          }
          desc.rigid.inertia = m;
        }
        if (const json* s = find(b, "shape"))
          desc.rigid.shape = parse_shape(*s, path + ".shape");
        if (!desc.rigid.inertia && !desc.rigid.shape)
          fail(path, "rigid body needs a shape or an explicit inertia");
        if (desc.rigid.shape && desc.rigid.shape->kind == ShapeKind::HalfSpace)
          fail(path + ".shape", "half-spaces must be static bodies");
      } else if (type == "static") {
        check_keys(b, {"type", "shape"}, path);
        desc.kind = BodyDescKind::Static;
        const json* s = find(b, "shape");
        if (!s) fail(path + ".shape", "missing");
        desc.fixed.shape = parse_shape(*s, path + ".shape");
      } else {
        fail(path + ".type", "unknown body type \"" + type + "\"");
      }
      scene.bodies.push_back(desc);
    }
  }

  if (const json* meshes = find(doc, "meshes")) {
    if (!meshes->is_array()) fail("$.meshes", "expected an array");
    for (size_t i = 0; i < meshes->size(); ++i) {
      const json& m = (*meshes)[i];
      const std::string path = "meshes[" + std::to_string(i) + "]";
      check_keys(m, {"vertices", "elements", "material", "density"}, path);
      MeshDesc desc;
      const json* verts = find(m, "vertices");
      if (!verts || !verts->is_array()) fail(path + ".vertices", "expected an array");
      for (size_t v = 0; v < verts->size(); ++v)
        desc.vertices.push_back(
            vec3_at((*verts)[v], path + ".vertices[" + std::to_string(v) + "]"));
      const json* elems = find(m, "elements");
      if (!elems || !elems->is_array()) fail(path + ".elements", "expected an array");
      for (size_t e = 0; e < elems->size(); ++e) {
        const json& ev = (*elems)[e];
        const std::string epath = path + ".elements[" + std::to_string(e) + "]";
        if (!ev.is_array() || ev.size() != 4) fail(epath, "expected 4 vertex indices");
        std::array<int, 4> idx{};
        for (int k = 0; k < 4; ++k) {
          if (!ev[k].is_number_integer()) fail(epath, "expected integer indices");
          idx[k] = ev[k].get<int>();
          if (idx[k] < 0 || idx[k] >= static_cast<int>(desc.vertices.size()))
            fail(epath, "vertex index out of range");
        }
        desc.elements.push_back(idx);
      }
      const json* mat = find(m, "material");
      if (!mat) fail(path + ".material", "missing");
      desc.material = parse_material(*mat, path + ".material");
      desc.density = optional_number(m, "density", path, 1000.0);
      if (desc.density <= 0.0) fail(path + ".density", "must be positive");
      scene.meshes.push_back(desc);
    }
  }

  if (const json* joints = find(doc, "joints")) {
    if (!joints->is_array()) fail("$.joints", "expected an array");
    for (size_t i = 0; i < joints->size(); ++i) {
      const json& j = (*joints)[i];
      const std::string path = "joints[" + std::to_string(i) + "]";
      check_keys(j,
                 {"type", "body_a", "body_b", "mesh_a", "vertex_a", "mesh_b", "vertex_b",
                  "anchor", "axis", "compliance", "stiffness", "anchor_velocity"},
                 path);
      JointDesc desc;
      const std::string type = require_string(j, "type", path);
      if (type == "fixed_point")
        desc.kind = JointKind::FixedPoint;
      else if (type == "revolute")
        desc.kind = JointKind::Revolute;
      else if (type == "prismatic")
        desc.kind = JointKind::Prismatic;
      else if (type == "bend_spring")
        desc.kind = JointKind::BendSpring;
      else
        fail(path + ".type", "unknown joint type \"" + type + "\"");
      desc.a = parse_attachment(j, "body_a", "mesh_a", "vertex_a", path);
      desc.b = parse_attachment(j, "body_b", "mesh_b", "vertex_b", path);
      desc.anchor = optional_vec3(j, "anchor", path, Vec3::Zero());
      desc.axis = optional_vec3(j, "axis", path, Vec3::UnitZ());
      if (desc.axis.norm() < 1e-12) fail(path + ".axis", "zero-length axis");
      desc.compliance = optional_number(j, "compliance", path, 0.0);
      if (desc.compliance < 0.0) fail(path + ".compliance", "must be >= 0");
      desc.stiffness = optional_number(j, "stiffness", path, 0.0);
      if (desc.kind == JointKind::BendSpring && desc.stiffness <= 0.0)
        fail(path + ".stiffness", "bend springs need a positive stiffness");
      desc.anchor_velocity = optional_vec3(j, "anchor_velocity", path, Vec3::Zero());
      scene.joints.push_back(desc);
    }
  }

  if (const json* c = find(doc, "contacts")) {
    check_keys(*c, {"margin", "mu"}, "$.contacts");
    scene.contacts.margin = optional_number(*c, "margin", "$.contacts", 0.01);
    if (scene.contacts.margin < 0.0) fail("$.contacts.margin", "must be >= 0");
    scene.contacts.mu_default = optional_number(*c, "mu", "$.contacts", 0.5);
    if (scene.contacts.mu_default < 0.0) fail("$.contacts.mu", "must be >= 0");
  }

  if (const json* s = find(doc, "solver")) scene.solver = parse_solver(*s, "$.solver");

  // Cross-reference validation.
  const int nbodies = static_cast<int>(scene.bodies.size());
  const int nmeshes = static_cast<int>(scene.meshes.size());
  for (size_t i = 0; i < scene.joints.size(); ++i) {
    const std::string path = "joints[" + std::to_string(i) + "]";
    for (const auto* att : {&scene.joints[i].a, &scene.joints[i].b}) {
      if (att->mesh >= 0) {
        if (att->mesh >= nmeshes) fail(path, "mesh index out of range");
        if (att->vertex < 0 ||
            att->vertex >= static_cast<int>(scene.meshes[att->mesh].vertices.size()))
          fail(path, "mesh vertex index out of range");
      } else if (att->body >= nbodies) {
        fail(path, "body index out of range");
      } else if (att->body >= 0 && scene.bodies[att->body].kind == BodyDescKind::Static) {
        fail(path, "joints cannot attach to static bodies; use body -1 for the world");
      }
    }
  }
  return scene;
}

std::string serialize_scene(const SceneDescription& scene) {
  json doc;
  doc["gravity"] = vec3_to_json(scene.gravity);
  doc["timestep"] = scene.timestep;
  doc["bodies"] = json::array();
  for (const BodyDesc& b : scene.bodies) {
    json o;
    switch (b.kind) {
      case BodyDescKind::Particle:
        o["type"] = "particle";
        o["position"] = vec3_to_json(b.particle.position);
        o["velocity"] = vec3_to_json(b.particle.velocity);
        o["mass"] = b.particle.mass;
        break;
      case BodyDescKind::Rigid:
        o["type"] = "rigid";
        o["position"] = vec3_to_json(b.rigid.position);
        o["orientation"] = vec4_to_json(b.rigid.orientation);
        o["velocity"] = vec3_to_json(b.rigid.velocity);
        o["angular_velocity"] = vec3_to_json(b.rigid.angular_velocity);
        o["mass"] = b.rigid.mass;
        if (b.rigid.inertia) {
          json m = json::array();
          for (int r = 0; r < 3; ++r)
            m.push_back(json::array({(*b.rigid.inertia)(r, 0), (*b.rigid.inertia)(r, 1),
                                     (*b.rigid.inertia)(r, 2)}));
          o["inertia"] = m;
        }
        if (b.rigid.shape) o["shape"] = shape_to_json(*b.rigid.shape);
        break;
      case BodyDescKind::Static:
        o["type"] = "static";
        o["shape"] = shape_to_json(b.fixed.shape);
        break;
    }
    doc["bodies"].push_back(o);
  }
  doc["meshes"] = json::array();
  for (const MeshDesc& m : scene.meshes) {
    json o;
    o["vertices"] = json::array();
    for (const Vec3& v : m.vertices) o["vertices"].push_back(vec3_to_json(v));
    o["elements"] = json::array();
    for (const auto& e : m.elements) o["elements"].push_back(json::array({e[0], e[1], e[2], e[3]}));
    json mat;
    mat["model"] = m.material.model == MaterialModel::Linear ? "linear" : "neohookean";
    mat["young"] = m.material.young;
    mat["poisson"] = m.material.poisson;
    if (m.material.diagonal_compliance) mat["diagonal_compliance"] = true;
    o["material"] = mat;
    o["density"] = m.density;
    doc["meshes"].push_back(o);
  }
  doc["joints"] = json::array();
  for (const JointDesc& j : scene.joints) {
    json o;
    switch (j.kind) {
      case JointKind::FixedPoint: o["type"] = "fixed_point"; break;
      case JointKind::Revolute: o["type"] = "revolute"; break;
      case JointKind::Prismatic: o["type"] = "prismatic"; break;
      case JointKind::BendSpring: o["type"] = "bend_spring"; break;
    }
    const auto write_att = [&](const JointAttachment& a, const char* body_key,
                               const char* mesh_key, const char* vertex_key) {
      if (a.mesh >= 0) {
        o[mesh_key] = a.mesh;
        o[vertex_key] = a.vertex;
      } else {
        o[body_key] = a.body;
      }
    };
    write_att(j.a, "body_a", "mesh_a", "vertex_a");
    write_att(j.b, "body_b", "mesh_b", "vertex_b");
    o["anchor"] = vec3_to_json(j.anchor);
    o["axis"] = vec3_to_json(j.axis);
    o["compliance"] = j.compliance;
    if (j.stiffness != 0.0) o["stiffness"] = j.stiffness;
    if (j.anchor_velocity != Vec3::Zero()) o["anchor_velocity"] = vec3_to_json(j.anchor_velocity);
    doc["joints"].push_back(o);
  }
  json contacts;
  contacts["margin"] = scene.contacts.margin;
  contacts["mu"] = scene.contacts.mu_default;
  doc["contacts"] = contacts;
  doc["solver"] = solver_to_json(scene.solver);
  return doc.dump(2) + "\n";
}

namespace {

Mat3 shape_inertia(const Shape& s, double mass) {
  switch (s.kind) {
    case ShapeKind::Sphere:
      return Mat3::Identity() * (0.4 * mass * s.radius * s.radius);
    case ShapeKind::Box: {
      const Vec3 h = s.half_extents;
      Mat3 m = Mat3::Zero();
      m(0, 0) = mass / 3.0 * (h.y() * h.y() + h.z() * h.z());
      m(1, 1) = mass / 3.0 * (h.x() * h.x() + h.z() * h.z());
      m(2, 2) = mass / 3.0 * (h.x() * h.x() + h.y() * h.y());
      return m;
    }
    case ShapeKind::HalfSpace:
      break;
  }
  return Mat3::Identity();
}

Vec4 quat_axis_angle(const Vec3& axis, double angle_rad) {
  const Vec3 a = axis.normalized();
  const double half = 0.5 * angle_rad;
  return Vec4(std::cos(half), std::sin(half) * a.x(), std::sin(half) * a.y(),
              std::sin(half) * a.z());
}

}  // namespace

World build_world(const SceneDescription& scene) {
  World world;
  world.gravity = scene.gravity;
  world.h = scene.timestep;
  world.contact_params = scene.contacts;
  world.solver = scene.solver;

  std::vector<int> body_map(scene.bodies.size(), -1);
  for (size_t i = 0; i < scene.bodies.size(); ++i) {
    const BodyDesc& desc = scene.bodies[i];
    switch (desc.kind) {
      case BodyDescKind::Particle: {
        Body b;
        b.type = BodyType::Particle;
        b.mass = desc.particle.mass;
        body_map[i] = static_cast<int>(world.state.bodies.size());
        world.state.bodies.push_back(b);
        break;
      }
      case BodyDescKind::Rigid: {
        Body b;
        b.type = BodyType::Rigid;
        b.mass = desc.rigid.mass;
        b.inertia = desc.rigid.inertia ? *desc.rigid.inertia
                                       : shape_inertia(*desc.rigid.shape, desc.rigid.mass);
        body_map[i] = static_cast<int>(world.state.bodies.size());
        world.state.bodies.push_back(b);
        break;
      }
      case BodyDescKind::Static:
        break;
    }
  }

  // Mesh particles are appended after the scene bodies, one block per mesh.
  std::vector<int> mesh_base(scene.meshes.size(), 0);
  for (size_t m = 0; m < scene.meshes.size(); ++m) {
    const MeshDesc& desc = scene.meshes[m];
    mesh_base[m] = static_cast<int>(world.state.bodies.size());
    std::vector<double> lumped(desc.vertices.size(), 0.0);
    MeshBinding binding;
    binding.particle_base = mesh_base[m];
    binding.mesh.material = desc.material;
    binding.mesh.prepare();
    for (const auto& ev : desc.elements) {
      std::array<int, 4> idx = ev;
      // Repair negative orientation by swapping two vertices.
      Mat3 dm;
      dm.col(0) = desc.vertices[idx[1]] - desc.vertices[idx[0]];
      dm.col(1) = desc.vertices[idx[2]] - desc.vertices[idx[0]];
      dm.col(2) = desc.vertices[idx[3]] - desc.vertices[idx[0]];
      if (dm.determinant() < 0.0) std::swap(idx[2], idx[3]);
      const TetElement elem =
          make_tet_element(idx, desc.vertices[idx[0]], desc.vertices[idx[1]],
                           desc.vertices[idx[2]], desc.vertices[idx[3]]);
      binding.mesh.elements.push_back(elem);
      for (int v : idx) lumped[v] += desc.density * elem.rest_volume / 4.0;
    }
    for (size_t v = 0; v < desc.vertices.size(); ++v) {
      Body b;
      b.type = BodyType::Particle;
      b.mass = lumped[v] > 0.0 ? lumped[v] : 1e-6;
      world.state.bodies.push_back(b);
    }
    world.meshes.push_back(std::move(binding));
  }

  world.state.finalize_layout();

  // Initial conditions.
  for (size_t i = 0; i < scene.bodies.size(); ++i) {
    const BodyDesc& desc = scene.bodies[i];
    const int b = body_map[i];
    if (b < 0) continue;
    if (desc.kind == BodyDescKind::Particle) {
      world.state.set_position(b, desc.particle.position);
      world.state.u.segment<3>(world.state.dof_offset[b]) = desc.particle.velocity;
    } else {
      world.state.set_position(b, desc.rigid.position);
      world.state.set_orientation(b, normalized_quaternion(desc.rigid.orientation));
      world.state.u.segment<3>(world.state.dof_offset[b]) = desc.rigid.velocity;
      world.state.u.segment<3>(world.state.dof_offset[b] + 3) = desc.rigid.angular_velocity;
    }
  }
  for (size_t m = 0; m < scene.meshes.size(); ++m)
    for (size_t v = 0; v < scene.meshes[m].vertices.size(); ++v)
      world.state.set_position(mesh_base[m] + static_cast<int>(v), scene.meshes[m].vertices[v]);

  // Shapes.
  for (size_t i = 0; i < scene.bodies.size(); ++i) {
    const BodyDesc& desc = scene.bodies[i];
    if (desc.kind == BodyDescKind::Static) {
      world.shapes.push_back({-1, desc.fixed.shape});
    } else if (desc.kind == BodyDescKind::Rigid && desc.rigid.shape) {
      world.shapes.push_back({body_map[i], *desc.rigid.shape});
    }
  }

  // Joints.
  for (size_t i = 0; i < scene.joints.size(); ++i) {
    const JointDesc& desc = scene.joints[i];
    JointSpec j;
    j.kind = desc.kind;
    const auto resolve = [&](const JointAttachment& a) {
      if (a.mesh >= 0) return mesh_base[a.mesh] + a.vertex;
      return a.body >= 0 ? body_map[a.body] : -1;
    };
    j.body_a = resolve(desc.a);
    j.body_b = resolve(desc.b);
    j.compliance = desc.compliance;
    j.stiffness = desc.stiffness;
    j.anchor_velocity = desc.anchor_velocity;
    bind_joint(j, world.state, desc.anchor, desc.axis);
    if (desc.anchor_velocity != Vec3::Zero())
      world.driven_anchors.push_back(
          {static_cast<int>(world.joints.size()), desc.anchor_velocity});
    world.joints.push_back(j);
  }

  return world;
}

SolveReport step_world(World& world) {
  for (const auto& [ji, vel] : world.driven_anchors) {
    JointSpec& j = world.joints[ji];
    if (j.body_a < 0)
      j.anchor_a += vel * world.h;
    else if (j.body_b < 0)
      j.anchor_b += vel * world.h;
  }

  const VecX f = external_forces(world.state, world.gravity);
  const VecX u_tilde = unconstrained_velocity(world.state, f, world.h);
  world.contacts = detect(world.state, world.shapes, u_tilde, world.h, world.contact_params);

  StepContext ctx;
  ctx.state = &world.state;
  ctx.joints = &world.joints;
  ctx.meshes = &world.meshes;
  ctx.contacts = &world.contacts;
  ctx.gravity = world.gravity;
  ctx.h = world.h;
  const SolveReport report = newton_step(ctx, world.solver);
  world.time += world.h;
  return report;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

namespace {

BodyDesc static_ground() {
  BodyDesc ground;
  ground.kind = BodyDescKind::Static;
  ground.fixed.shape.kind = ShapeKind::HalfSpace;
  ground.fixed.shape.normal = Vec3::UnitZ();
  ground.fixed.shape.offset = 0.0;
  return ground;
}

BodyDesc rigid_box(const Vec3& position, const Vec3& half_extents, double mass,
                   const Vec4& orientation = Vec4(1, 0, 0, 0)) {
  BodyDesc b;
  b.kind = BodyDescKind::Rigid;
  b.rigid.position = position;
  b.rigid.orientation = orientation;
  b.rigid.mass = mass;
  Shape s;
  s.kind = ShapeKind::Box;
  s.half_extents = half_extents;
  b.rigid.shape = s;
  return b;
}

BodyDesc rigid_sphere(const Vec3& position, double radius, double mass) {
  BodyDesc b;
  b.kind = BodyDescKind::Rigid;
  b.rigid.position = position;
  b.rigid.mass = mass;
  Shape s;
  s.kind = ShapeKind::Sphere;
  s.radius = radius;
  b.rigid.shape = s;
  return b;
}

// 6-tet decomposition of a grid cell; orientation is repaired at build.
void tessellate_grid(MeshDesc& mesh, int nx, int ny, int nz, const Vec3& origin,
                     const Vec3& size) {
  const auto vid = [&](int x, int y, int z) {
    return (x * (ny + 1) + y) * (nz + 1) + z;
  };
  for (int x = 0; x <= nx; ++x)
    for (int y = 0; y <= ny; ++y)
      for (int z = 0; z <= nz; ++z)
        mesh.vertices.push_back(origin + Vec3(size.x() * x / nx, size.y() * y / ny,
                                              size.z() * z / nz));
  const int tets[6][4] = {{0, 1, 5, 7}, {0, 5, 4, 7}, {0, 4, 6, 7},
                          {0, 6, 2, 7}, {0, 2, 3, 7}, {0, 3, 1, 7}};
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      for (int z = 0; z < nz; ++z) {
        const int c[8] = {vid(x, y, z),         vid(x + 1, y, z),
                          vid(x, y + 1, z),     vid(x + 1, y + 1, z),
                          vid(x, y, z + 1),     vid(x + 1, y, z + 1),
                          vid(x, y + 1, z + 1), vid(x + 1, y + 1, z + 1)};
        for (const auto& t : tets)
          mesh.elements.push_back({c[t[0]], c[t[1]], c[t[2]], c[t[3]]});
      }
}

}  // namespace

SceneDescription build_box_on_plane() {
  SceneDescription scene;
  scene.bodies.push_back(static_ground());
  scene.bodies.push_back(rigid_box(Vec3(0, 0, 0.2), Vec3::Constant(0.2), 1.0));
  scene.contacts.mu_default = 0.5;
  return scene;
}

SceneDescription build_incline(double angle_deg, double mu) {
  SceneDescription scene;
  const double theta = angle_deg * M_PI / 180.0;
  BodyDesc ground = static_ground();
  ground.fixed.shape.normal = Vec3(-std::sin(theta), 0.0, std::cos(theta));
  scene.bodies.push_back(ground);
  const double half = 0.1;
  const Vec3 n = ground.fixed.shape.normal;
  scene.bodies.push_back(
      rigid_box(half * n, Vec3::Constant(half), 1.0, quat_axis_angle(Vec3::UnitY(), -theta)));
  scene.contacts.mu_default = mu;
  scene.solver.newton_iterations = 10;
  return scene;
}

SceneDescription build_heavy_stack() {
  SceneDescription scene;
  scene.bodies.push_back(static_ground());
  const double masses[5] = {8.0, 64.0, 512.0, 4096.0, 32768.0};
  for (int i = 0; i < 5; ++i)
    scene.bodies.push_back(rigid_box(Vec3(0, 0, 0.5 + 1.0 * i), Vec3::Constant(0.5), masses[i]));
  scene.contacts.mu_default = 0.5;
  scene.solver.newton_iterations = 5;
  scene.solver.linear.max_iterations = 25;
  return scene;
}

SceneDescription build_arch() {
  SceneDescription scene;
  scene.bodies.push_back(static_ground());
  const int blocks = 20;
  const double span = 4.0;
  const double height = 1.5;
  for (int i = 0; i < blocks; ++i) {
    const double x = -0.5 * span + span * (i + 0.5) / blocks;
    const double z = height * (1.0 - (x / (0.5 * span)) * (x / (0.5 * span)));
    const double slope = -2.0 * height * x / (0.25 * span * span);  // dz/dx
    const double angle = std::atan(slope);
    const double mass = 15.0 + (110.0 - 15.0) * (1.0 - z / height);
    scene.bodies.push_back(rigid_box(Vec3(x, 0, z + 0.1), Vec3(0.095, 0.15, 0.1), mass,
                                     quat_axis_angle(Vec3::UnitY(), -angle)));
  }
  scene.contacts.mu_default = 0.6;
  scene.solver.newton_iterations = 6;
  scene.solver.linear.max_iterations = 20;
  return scene;
}

SceneDescription build_box_pile(unsigned seed) {
  SceneDescription scene;
  scene.bodies.push_back(static_ground());
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> xy(-0.4, 0.4);
  std::uniform_real_distribution<double> zdist(0.3, 1.6);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int i = 0; i < 8; ++i) {
    Vec3 axis(unit(rng), unit(rng), unit(rng));
    if (axis.norm() < 1e-6) axis = Vec3::UnitZ();
    scene.bodies.push_back(rigid_box(Vec3(xy(rng), xy(rng), zdist(rng)), Vec3::Constant(0.15),
                                     4.7, quat_axis_angle(axis, angle(rng))));
  }
  for (int i = 0; i < 4; ++i)
    scene.bodies.push_back(rigid_sphere(Vec3(xy(rng), xy(rng), zdist(rng)), 0.12, 1.0));
  scene.contacts.mu_default = 0.7;
  scene.solver.newton_iterations = 6;
  scene.solver.linear.max_iterations = 25;
  return scene;
}

SceneDescription build_stretch_sheet(MaterialModel model) {
  SceneDescription scene;
  scene.gravity = Vec3::Zero();

  MeshDesc mesh;
  const int nx = 4, ny = 2, nz = 1;
  const Vec3 size(0.2, 0.1, 0.05);
  tessellate_grid(mesh, nx, ny, nz, Vec3::Zero(), size);
  mesh.material.model = model;
  mesh.material.young = 1e5;
  mesh.material.poisson = 0.45;
  mesh.density = 1000.0;
  scene.meshes.push_back(mesh);

  // Pin the x = 0 face; drive the x = L face outward at constant speed.
  for (size_t v = 0; v < mesh.vertices.size(); ++v) {
    const Vec3& p = mesh.vertices[v];
    const bool fixed_face = p.x() < 1e-9;
    const bool driven_face = p.x() > size.x() - 1e-9;
    if (!fixed_face && !driven_face) continue;
    JointDesc j;
    j.kind = JointKind::FixedPoint;
    j.a.mesh = 0;
    j.a.vertex = static_cast<int>(v);
    j.b.body = -1;
    j.anchor = p;
    if (driven_face) j.anchor_velocity = Vec3(0.2, 0.0, 0.0);
    scene.joints.push_back(j);
  }
  scene.solver.newton_iterations = 10;
  scene.solver.linear.max_iterations = 60;
  return scene;
}

std::optional<SceneDescription> build_scene_by_name(const std::string& name, unsigned seed) {
  std::string base = name;
  std::vector<double> args;
  if (const size_t colon = name.find(':'); colon != std::string::npos) {
    base = name.substr(0, colon);
    std::stringstream ss(name.substr(colon + 1));
    std::string tok;
    while (std::getline(ss, tok, ':')) args.push_back(std::stod(tok));
  }
  if (base == "arch") return build_arch();
  if (base == "heavy_stack") return build_heavy_stack();
  if (base == "box_pile") return build_box_pile(seed);
  if (base == "box_on_plane") return build_box_on_plane();
  if (base == "stretch_sheet") return build_stretch_sheet(MaterialModel::NeoHookean);
  if (base == "stretch_sheet_linear") return build_stretch_sheet(MaterialModel::Linear);
  if (base == "incline") {
    const double angle = args.size() > 0 ? args[0] : 20.0;
    const double mu = args.size() > 1 ? args[1] : 0.5;
    return build_incline(angle, mu);
  }
  return std::nullopt;
}

}  // namespace nsdyn
