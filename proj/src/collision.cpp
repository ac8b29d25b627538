#include "nsdyn/collision.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nsdyn {

namespace {

struct Candidate {
  ContactConstraint contact;
  double gap = 0.0;
};

Vec3 shape_world_position(const GeneralizedState& state, const AttachedShape& s) {
  return s.body < 0 ? Vec3::Zero() : state.position(s.body);
}

Mat3 shape_world_rotation(const GeneralizedState& state, const AttachedShape& s) {
  return s.body < 0 ? Mat3::Identity() : state.rotation(s.body);
}

Vec3 to_local(const GeneralizedState& state, const AttachedShape& s, const Vec3& world) {
  if (s.body < 0) return world;
  return shape_world_rotation(state, s).transpose() * (world - shape_world_position(state, s));
}

double pair_mu(const AttachedShape& a, const AttachedShape& b, const ContactParams& params) {
  const double ma = a.shape.mu >= 0.0 ? a.shape.mu : params.mu_default;
  const double mb = b.shape.mu >= 0.0 ? b.shape.mu : params.mu_default;
  return std::sqrt(ma * mb);
}

Vec3 point_velocity(const GeneralizedState& state, const VecX& u, int body, const Vec3& world) {
  if (body < 0) return Vec3::Zero();
  const int off = state.dof_offset[body];
  if (state.bodies[body].type == BodyType::Particle) return u.segment<3>(off);
  const Vec3 r = world - state.position(body);
  return u.segment<3>(off) + Vec3(u.segment<3>(off + 3)).cross(r);
}

void corners_of_box(const Vec3& he, Vec3 out[8]) {
  int k = 0;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) out[k++] = Vec3(sx * he.x(), sy * he.y(), sz * he.z());
}

// Sphere against a static half-space.
void sphere_halfspace(const GeneralizedState& state, int ia, int ib,
                      const std::vector<AttachedShape>& shapes, std::vector<Candidate>& out) {
  const AttachedShape& sph = shapes[ia];
  const AttachedShape& hs = shapes[ib];
  const Vec3 n = hs.shape.normal.normalized();
  const Vec3 c = shape_world_position(state, sph);
  const double gap = n.dot(c) - hs.shape.offset - sph.shape.radius;
  Candidate cand;
  cand.gap = gap;
  cand.contact.a = {sph.body, to_local(state, sph, c - sph.shape.radius * n)};
  const Vec3 surface = c - sph.shape.radius * n;
  cand.contact.b = {hs.body, surface - gap * n};
  cand.contact.normal = n;
  out.push_back(cand);
}

void box_halfspace(const GeneralizedState& state, int ia, int ib,
                   const std::vector<AttachedShape>& shapes, std::vector<Candidate>& out) {
  const AttachedShape& box = shapes[ia];
  const AttachedShape& hs = shapes[ib];
  const Vec3 n = hs.shape.normal.normalized();
  const Mat3 r = shape_world_rotation(state, box);
  const Vec3 x = shape_world_position(state, box);
  Vec3 corners[8];
  corners_of_box(box.shape.half_extents, corners);
  std::vector<Candidate> local;
  for (int k = 0; k < 8; ++k) {
    const Vec3 w = x + r * corners[k];
    Candidate cand;
    cand.gap = n.dot(w) - hs.shape.offset;
    cand.contact.a = {box.body, corners[k]};
    cand.contact.b = {hs.body, w - cand.gap * n};
    cand.contact.normal = n;
    cand.contact.feature = k;
    local.push_back(cand);
  }
  // Keep the four deepest corners; resting boxes produce exactly the
  // redundant four-contact set.
  std::sort(local.begin(), local.end(), [](const Candidate& a, const Candidate& b) {
    return a.gap != b.gap ? a.gap < b.gap : a.contact.feature < b.contact.feature;
  });
  if (local.size() > 4) local.resize(4);
  out.insert(out.end(), local.begin(), local.end());
}

void sphere_sphere(const GeneralizedState& state, int ia, int ib,
                   const std::vector<AttachedShape>& shapes, std::vector<Candidate>& out) {
  const AttachedShape& a = shapes[ia];
  const AttachedShape& b = shapes[ib];
  const Vec3 ca = shape_world_position(state, a);
  const Vec3 cb = shape_world_position(state, b);
  Vec3 d = ca - cb;
  double dist = d.norm();
  const Vec3 n = dist > 1e-12 ? Vec3(d / dist) : Vec3::UnitZ();
  Candidate cand;
  cand.gap = dist - a.shape.radius - b.shape.radius;
  cand.contact.a = {a.body, to_local(state, a, ca - a.shape.radius * n)};
  cand.contact.b = {b.body, to_local(state, b, cb + b.shape.radius * n)};
  cand.contact.normal = n;
  out.push_back(cand);
}

void sphere_box(const GeneralizedState& state, int ia, int ib,
                const std::vector<AttachedShape>& shapes, std::vector<Candidate>& out) {
  const AttachedShape& sph = shapes[ia];
  const AttachedShape& box = shapes[ib];
  const Vec3 c = shape_world_position(state, sph);
  const Mat3 r = shape_world_rotation(state, box);
  const Vec3 x = shape_world_position(state, box);
  const Vec3 he = box.shape.half_extents;
  const Vec3 cl = r.transpose() * (c - x);  // sphere center in box frame
  Vec3 closest = cl.cwiseMax(-he).cwiseMin(he);
  Vec3 nl;
  double dist;
  if ((cl - closest).norm() > 1e-12) {
    dist = (cl - closest).norm();
    nl = (cl - closest) / dist;
  } else {
    // Center inside the box: push out of the nearest face.
    int axis = 0;
    double best = he.x() - std::abs(cl.x());
    for (int k = 1; k < 3; ++k) {
      const double pen = he[k] - std::abs(cl[k]);
      if (pen < best) {
        best = pen;
        axis = k;
      }
    }
    nl = Vec3::Zero();
    nl[axis] = cl[axis] >= 0.0 ? 1.0 : -1.0;
    closest = cl;
    closest[axis] = nl[axis] * he[axis];
    dist = -best;
  }
  const Vec3 n = r * nl;
  Candidate cand;
  cand.gap = dist - sph.shape.radius;
  cand.contact.a = {sph.body, to_local(state, sph, c - sph.shape.radius * n)};
  cand.contact.b = {box.body, closest};
  cand.contact.normal = n;
  out.push_back(cand);
}

// Box-box restricted to face normals: pick the maximum-separation face axis,
// then emit the incident box corners that fall within the reference face.
void box_box(const GeneralizedState& state, int ia, int ib,
             const std::vector<AttachedShape>& shapes, double margin,
             std::vector<Candidate>& out) {
  const AttachedShape* boxes[2] = {&shapes[ia], &shapes[ib]};
  Mat3 rot[2];
  Vec3 pos[2];
  for (int k = 0; k < 2; ++k) {
    rot[k] = shape_world_rotation(state, *boxes[k]);
    pos[k] = shape_world_position(state, *boxes[k]);
  }

  // Separation of box `other` against face axis `axis` of box `ref`.
  const auto face_separation = [&](int ref, int axis, double dir) {
    const Vec3 n = dir * rot[ref].col(axis);
    const Vec3 face_point =
        pos[ref] + dir * boxes[ref]->shape.half_extents[axis] * rot[ref].col(axis);
    const int other = 1 - ref;
    double min_proj = std::numeric_limits<double>::infinity();
    Vec3 corners[8];
    corners_of_box(boxes[other]->shape.half_extents, corners);
    for (int k = 0; k < 8; ++k) {
      const Vec3 w = pos[other] + rot[other] * corners[k];
      min_proj = std::min(min_proj, n.dot(w - face_point));
    }
    return min_proj;
  };

  int best_ref = -1, best_axis = -1;
  double best_dir = 1.0;
  double best_sep = -std::numeric_limits<double>::infinity();
  for (int ref = 0; ref < 2; ++ref)
    for (int axis = 0; axis < 3; ++axis)
      for (double dir : {1.0, -1.0}) {
        const double sep = face_separation(ref, axis, dir);
        if (sep > best_sep + 1e-12) {
          best_sep = sep;
          best_ref = ref;
          best_axis = axis;
          best_dir = dir;
        }
      }
  if (best_sep > margin) return;  // separated beyond the margin

  const int ref = best_ref, inc = 1 - best_ref;
  const Vec3 n_ref = best_dir * rot[ref].col(best_axis);  // points ref -> incident
  const Vec3 face_point =
      pos[ref] + best_dir * boxes[ref]->shape.half_extents[best_axis] * rot[ref].col(best_axis);

  Vec3 corners[8];
  corners_of_box(boxes[inc]->shape.half_extents, corners);
  std::vector<Candidate> local;
  for (int k = 0; k < 8; ++k) {
    const Vec3 w = pos[inc] + rot[inc] * corners[k];
    const double gap = n_ref.dot(w - face_point);
    if (gap > margin) continue;
    // Require the corner to project inside the reference face (small slop).
    const Vec3 in_ref = rot[ref].transpose() * (w - pos[ref]);
    bool inside = true;
    for (int axis = 0; axis < 3; ++axis) {
      if (axis == best_axis) continue;
      if (std::abs(in_ref[axis]) > boxes[ref]->shape.half_extents[axis] + 1e-6) inside = false;
    }
    if (!inside) continue;
    Candidate cand;
    cand.gap = gap;
    // Contact normal points b -> a with a on the incident box.
    cand.contact.a = {boxes[inc]->body, corners[k]};
    cand.contact.b = {boxes[ref]->body, to_local(state, *boxes[ref], w - gap * n_ref)};
    cand.contact.normal = n_ref;
    cand.contact.feature = k;
    local.push_back(cand);
  }
  std::sort(local.begin(), local.end(), [](const Candidate& a, const Candidate& b) {
    return a.gap != b.gap ? a.gap < b.gap : a.contact.feature < b.contact.feature;
  });
  if (local.size() > 4) local.resize(4);
  // When the incident box is the pair's second shape the constraint stays
  // as generated (a = incident); ordering below canonicalizes output.
  out.insert(out.end(), local.begin(), local.end());
}

}  // namespace

std::vector<ContactConstraint> detect(const GeneralizedState& state,
                                      const std::vector<AttachedShape>& shapes,
                                      const VecX& u_predict, double h,
                                      const ContactParams& params) {
  std::vector<ContactConstraint> contacts;
  const int n = static_cast<int>(shapes.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const AttachedShape& si = shapes[i];
      const AttachedShape& sj = shapes[j];
      if (si.body < 0 && sj.body < 0) continue;
      if (si.body >= 0 && si.body == sj.body) continue;

      std::vector<Candidate> cands;
      const ShapeKind ki = si.shape.kind, kj = sj.shape.kind;
      if (ki == ShapeKind::Sphere && kj == ShapeKind::HalfSpace)
        sphere_halfspace(state, i, j, shapes, cands);
      else if (ki == ShapeKind::HalfSpace && kj == ShapeKind::Sphere)
        sphere_halfspace(state, j, i, shapes, cands);
      else if (ki == ShapeKind::Box && kj == ShapeKind::HalfSpace)
        box_halfspace(state, i, j, shapes, cands);
      else if (ki == ShapeKind::HalfSpace && kj == ShapeKind::Box)
        box_halfspace(state, j, i, shapes, cands);
      else if (ki == ShapeKind::Sphere && kj == ShapeKind::Sphere)
        sphere_sphere(state, i, j, shapes, cands);
      else if (ki == ShapeKind::Sphere && kj == ShapeKind::Box)
        sphere_box(state, i, j, shapes, cands);
      else if (ki == ShapeKind::Box && kj == ShapeKind::Sphere)
        sphere_box(state, j, i, shapes, cands);
      else if (ki == ShapeKind::Box && kj == ShapeKind::Box)
        box_box(state, i, j, shapes, params.margin, cands);
      else
        continue;  // half-space pairs never collide

      const double thickness = si.shape.thickness + sj.shape.thickness;
      const double mu = pair_mu(si, sj, params);
      for (Candidate& c : cands) {
        const Vec3 pa = attach_world_point(state, c.contact.a);
        const Vec3 pb = attach_world_point(state, c.contact.b);
        const Vec3 va = point_velocity(state, u_predict, c.contact.a.body, pa);
        const Vec3 vb = point_velocity(state, u_predict, c.contact.b.body, pb);
        const double closing = -c.contact.normal.dot(va - vb);
        const double predicted = (c.gap - thickness) - h * closing;
        if (predicted > params.margin) continue;
        c.contact.thickness = thickness;
        c.contact.mu = mu;
        tangent_basis(c.contact.normal, c.contact.d1, c.contact.d2);
        contacts.push_back(c.contact);
      }
    }
  }
  std::sort(contacts.begin(), contacts.end(), [](const ContactConstraint& a,
                                                 const ContactConstraint& b) {
    if (a.a.body != b.a.body) return a.a.body < b.a.body;
    if (a.b.body != b.b.body) return a.b.body < b.b.body;
    return a.feature < b.feature;
  });
  return contacts;
}

}  // namespace nsdyn
