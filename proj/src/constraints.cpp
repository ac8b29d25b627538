#include "nsdyn/constraints.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nsdyn {

void GenRow::add(int i, double v) {
  idx.push_back(i);
  val.push_back(v);
}

void GenRow::add_block3(int dof_offset, const Vec3& v) {
  for (int k = 0; k < 3; ++k) add(dof_offset + k, v[k]);
}

double GenRow::dot(const VecX& x) const {
  double sum = 0.0;
  for (size_t k = 0; k < idx.size(); ++k) sum += val[k] * x[idx[k]];
  return sum;
}

void GenRow::compress() {
  std::vector<size_t> order(idx.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return idx[a] < idx[b]; });
  std::vector<int> ni;
  std::vector<double> nv;
  for (size_t k = 0; k < order.size(); ++k) {
    const int i = idx[order[k]];
    const double v = val[order[k]];
    if (!ni.empty() && ni.back() == i)
      nv.back() += v;
    else {
      ni.push_back(i);
      nv.push_back(v);
    }
  }
  idx = std::move(ni);
  val = std::move(nv);
}

Vec3 attach_world_point(const GeneralizedState& state, const AttachPoint& p) {
  if (p.body < 0) return p.local;
  return state.world_point(p.body, p.local);
}

Vec3 attach_world_velocity(const GeneralizedState& state, const AttachPoint& p) {
  if (p.body < 0) return Vec3::Zero();
  if (state.bodies[p.body].type == BodyType::Particle) return state.linear_velocity(p.body);
  const Vec3 r = state.rotation(p.body) * p.local;
  return state.linear_velocity(p.body) + state.angular_velocity(p.body).cross(r);
}

void add_point_jacobian(GenRow& row, const GeneralizedState& state, const AttachPoint& p,
                        const Vec3& d, double sign) {
  if (p.body < 0) return;
  const int off = state.dof_offset[p.body];
  row.add_block3(off, sign * d);
  if (state.bodies[p.body].type == BodyType::Rigid) {
    const Vec3 r = state.rotation(p.body) * p.local;
    row.add_block3(off + 3, sign * r.cross(d));
  }
}

double contact_gap(const ContactConstraint& c, const GeneralizedState& state) {
  const Vec3 pa = attach_world_point(state, c.a);
  const Vec3 pb = attach_world_point(state, c.b);
  return c.normal.dot(pa - pb) - c.thickness;
}

GenRow contact_normal_row(const ContactConstraint& c, const GeneralizedState& state) {
  GenRow row;
  add_point_jacobian(row, state, c.a, c.normal, 1.0);
  add_point_jacobian(row, state, c.b, c.normal, -1.0);
  row.compress();
  return row;
}

void contact_tangent_rows(const ContactConstraint& c, const GeneralizedState& state, GenRow& t1,
                          GenRow& t2) {
  t1.clear();
  t2.clear();
  add_point_jacobian(t1, state, c.a, c.d1, 1.0);
  add_point_jacobian(t1, state, c.b, c.d1, -1.0);
  add_point_jacobian(t2, state, c.a, c.d2, 1.0);
  add_point_jacobian(t2, state, c.b, c.d2, -1.0);
  t1.compress();
  t2.compress();
}

void tangent_basis(const Vec3& n, Vec3& d1, Vec3& d2) {
  int smallest = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(n[k]) < std::abs(n[smallest])) smallest = k;
  Vec3 e = Vec3::Zero();
  e[smallest] = 1.0;
  d1 = (e - e.dot(n) * n).normalized();
  d2 = n.cross(d1);
}

double r_factor(double effective_mass_diag, double h, RowClass row_class, RStrategy strategy) {
  const double time_scale = row_class == RowClass::Position ? h * h : h;
  switch (strategy) {
    case RStrategy::Identity:
      return 1.0;
    case RStrategy::TimestepSquared:
      return time_scale;
    case RStrategy::EffectiveMass:
      if (effective_mass_diag <= 0.0) return time_scale;
      return time_scale * effective_mass_diag;
  }
  return 1.0;
}

namespace {

Vec3 world_dir(const GeneralizedState& state, int body, const Vec3& local) {
  if (body < 0) return local;
  return state.rotation(body) * local;
}

// Row for C = ax_a . ax_b - rest acting on the angular DOFs of both bodies.
BilateralRowEval axis_dot_row(const GeneralizedState& state, int body_a, int body_b,
                              const Vec3& ax_a, const Vec3& ax_b, double rest, double e) {
  BilateralRowEval out;
  out.value = ax_a.dot(ax_b) - rest;
  out.compliance = e;
  const Vec3 cr = ax_a.cross(ax_b);
  if (body_a >= 0 && state.bodies[body_a].type == BodyType::Rigid)
    out.jac.add_block3(state.dof_offset[body_a] + 3, cr);
  if (body_b >= 0 && state.bodies[body_b].type == BodyType::Rigid)
    out.jac.add_block3(state.dof_offset[body_b] + 3, -cr);
  out.jac.compress();
  return out;
}

}  // namespace

std::vector<BilateralRowEval> joint_rows(const JointSpec& j, const GeneralizedState& state) {
  if (j.body_a >= static_cast<int>(state.bodies.size()) ||
      j.body_b >= static_cast<int>(state.bodies.size()))
    throw std::invalid_argument("joint references invalid body");

  std::vector<BilateralRowEval> rows;
  const AttachPoint pa{j.body_a, j.anchor_a};
  const AttachPoint pb{j.body_b, j.anchor_b};

  const auto add_point_rows = [&]() {
    const Vec3 wa = attach_world_point(state, pa);
    const Vec3 wb = attach_world_point(state, pb);
    for (int k = 0; k < 3; ++k) {
      BilateralRowEval r;
      r.value = wa[k] - wb[k];
      r.compliance = j.compliance;
      Vec3 e = Vec3::Zero();
      e[k] = 1.0;
      add_point_jacobian(r.jac, state, pa, e, 1.0);
      add_point_jacobian(r.jac, state, pb, e, -1.0);
      r.jac.compress();
      rows.push_back(std::move(r));
    }
  };

  switch (j.kind) {
    case JointKind::FixedPoint: {
      add_point_rows();
      break;
    }
    case JointKind::Revolute: {
      add_point_rows();
      const Vec3 ax = world_dir(state, j.body_a, j.axis_a);
      const Vec3 b1 = world_dir(state, j.body_b, j.axis_b1);
      const Vec3 b2 = world_dir(state, j.body_b, j.axis_b2);
      rows.push_back(axis_dot_row(state, j.body_a, j.body_b, ax, b1, j.rest_dots[0], j.compliance));
      rows.push_back(axis_dot_row(state, j.body_a, j.body_b, ax, b2, j.rest_dots[1], j.compliance));
      break;
    }
    case JointKind::Prismatic: {
      // Two translation rows orthogonal to the slide axis. The basis rotates
      // with body a, which adds a t x d angular coupling on that body.
      const Vec3 ax = world_dir(state, j.body_a, j.axis_a);
      Vec3 t1, t2;
      tangent_basis(ax, t1, t2);
      const Vec3 wa = attach_world_point(state, pa);
      const Vec3 wb = attach_world_point(state, pb);
      const Vec3 d = wa - wb;
      for (const Vec3& t : {t1, t2}) {
        BilateralRowEval r;
        r.value = t.dot(d);
        r.compliance = j.compliance;
        add_point_jacobian(r.jac, state, pa, t, 1.0);
        add_point_jacobian(r.jac, state, pb, t, -1.0);
        if (j.body_a >= 0 && state.bodies[j.body_a].type == BodyType::Rigid)
          r.jac.add_block3(state.dof_offset[j.body_a] + 3, t.cross(d));
        r.jac.compress();
        rows.push_back(std::move(r));
      }
      // Orientation lock: three pairwise axis dots.
      const Vec3 a2 = world_dir(state, j.body_a, j.axis_a2);
      const Vec3 b1 = world_dir(state, j.body_b, j.axis_b1);
      const Vec3 b2 = world_dir(state, j.body_b, j.axis_b2);
      rows.push_back(axis_dot_row(state, j.body_a, j.body_b, ax, b1, j.rest_dots[0], j.compliance));
      rows.push_back(axis_dot_row(state, j.body_a, j.body_b, ax, b2, j.rest_dots[1], j.compliance));
      rows.push_back(axis_dot_row(state, j.body_a, j.body_b, a2, b2, j.rest_dots[2], j.compliance));
      break;
    }
    case JointKind::BendSpring: {
      const double e = j.stiffness > 0.0 ? 1.0 / j.stiffness : 0.0;
      const Vec3 ax = world_dir(state, j.body_a, j.axis_a);
      const Vec3 b1 = world_dir(state, j.body_b, j.axis_b1);
      const Vec3 b2 = world_dir(state, j.body_b, j.axis_b2);
      rows.push_back(axis_dot_row(state, j.body_a, j.body_b, ax, b1, j.rest_dots[0], e));
      rows.push_back(axis_dot_row(state, j.body_a, j.body_b, ax, b2, j.rest_dots[1], e));
      break;
    }
  }
  return rows;
}

void bind_joint(JointSpec& j, const GeneralizedState& state, const Vec3& world_anchor,
                const Vec3& world_axis_in) {
  const auto point_local = [&](int body, const Vec3& w) -> Vec3 {
    if (body < 0) return w;
    if (state.bodies[body].type == BodyType::Particle) return Vec3::Zero();
    return state.rotation(body).transpose() * (w - state.position(body));
  };
  const auto dir_local = [&](int body, const Vec3& w) -> Vec3 {
    if (body < 0) return w;
    return state.rotation(body).transpose() * w;
  };

  j.anchor_a = point_local(j.body_a, world_anchor);
  j.anchor_b = point_local(j.body_b, world_anchor);

  const Vec3 ax = world_axis_in.normalized();
  Vec3 p1, p2;
  tangent_basis(ax, p1, p2);
  j.axis_a = dir_local(j.body_a, ax);
  j.axis_a2 = dir_local(j.body_a, p1);
  switch (j.kind) {
    case JointKind::FixedPoint:
      break;
    case JointKind::Revolute:
      // Lock the a axis orthogonal to two b-frame directions.
      j.axis_b1 = dir_local(j.body_b, p1);
      j.axis_b2 = dir_local(j.body_b, p2);
      j.rest_dots = Vec3::Zero();
      break;
    case JointKind::BendSpring:
      j.axis_b1 = dir_local(j.body_b, p1);
      j.axis_b2 = dir_local(j.body_b, p2);
      j.rest_dots = Vec3::Zero();
      break;
    case JointKind::Prismatic:
      j.axis_b1 = dir_local(j.body_b, p1);
      j.axis_b2 = dir_local(j.body_b, p2);
      // Rows are ax.b1, ax.b2, a2.b2 evaluated at the bind pose.
      j.rest_dots = Vec3(ax.dot(p1), ax.dot(p2), p1.dot(p2));
      break;
  }
}

}  // namespace nsdyn
