#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nsdyn/constraints.h"

#include <random>

using namespace nsdyn;

namespace {

GeneralizedState two_rigid_state() {
  GeneralizedState s;
  Body r;
  r.type = BodyType::Rigid;
  r.mass = 1.0;
  r.inertia = Mat3::Identity();
  s.bodies = {r, r};
  s.finalize_layout();
  return s;
}

Vec4 random_unit_quat(std::mt19937& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec4 q(g(rng), g(rng), g(rng), g(rng));
  return q / q.norm();
}

// Central-difference velocity-level gradient check: perturb along each
// generalized velocity direction and integrate the coordinates.
void check_row_gradient(const GeneralizedState& state, const JointSpec& joint) {
  const auto rows0 = joint_rows(joint, state);
  const double eps = 1e-6;
  for (size_t ri = 0; ri < rows0.size(); ++ri) {
    for (int dof = 0; dof < state.num_dof; ++dof) {
      VecX du = VecX::Zero(state.num_dof);
      du[dof] = 1.0;
      GeneralizedState plus = state;
      integrate_coordinates(plus, du, eps);
      GeneralizedState minus = state;
      VecX ndu = -du;
      integrate_coordinates(minus, ndu, eps);
      const double fp = joint_rows(joint, plus)[ri].value;
      const double fm = joint_rows(joint, minus)[ri].value;
      const double fd = (fp - fm) / (2 * eps);
      double analytic = 0.0;
      for (size_t k = 0; k < rows0[ri].jac.idx.size(); ++k)
        if (rows0[ri].jac.idx[k] == dof) analytic = rows0[ri].jac.val[k];
      CHECK(analytic == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

}  // namespace

TEST_CASE("contact gap sign convention") {
  GeneralizedState s;
  Body r;
  r.type = BodyType::Rigid;
  r.mass = 1.0;
  r.inertia = Mat3::Identity();
  s.bodies = {r};
  s.finalize_layout();

  ContactConstraint c;
  c.normal = Vec3::UnitZ();

  s.set_position(0, Vec3(0, 0, 1));
  c.a = {0, Vec3::Zero()};
  c.b = {-1, Vec3::Zero()};
  c.thickness = 0.1;
  CHECK(contact_gap(c, s) == doctest::Approx(0.9));

  s.set_position(0, Vec3::Zero());
  c.thickness = 0.0;
  CHECK(contact_gap(c, s) == doctest::Approx(0.0));

  s.set_position(0, Vec3(0, 0, 0.05));
  c.thickness = 0.1;
  CHECK(contact_gap(c, s) == doctest::Approx(-0.05));
}

TEST_CASE("tangent basis axis-aligned convention") {
  Vec3 d1, d2;
  tangent_basis(Vec3::UnitZ(), d1, d2);
  CHECK((d1 - Vec3::UnitX()).norm() < 1e-15);
  CHECK((d2 - Vec3::UnitY()).norm() < 1e-15);

  tangent_basis(Vec3::UnitX(), d1, d2);
  CHECK(std::abs(d1.dot(Vec3::UnitX())) < 1e-15);
  CHECK(std::abs(d2.dot(Vec3::UnitX())) < 1e-15);
  CHECK(std::abs(d1.norm() - 1.0) < 1e-15);
}

TEST_CASE("tangent basis orthonormal and deterministic for random normals") {
  std::mt19937 rng(37);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 100000; ++trial) {
    Vec3 n(g(rng), g(rng), g(rng));
    if (n.norm() < 1e-6) continue;
    n.normalize();
    Vec3 d1, d2, e1, e2;
    tangent_basis(n, d1, d2);
    tangent_basis(n, e1, e2);
    CHECK((d1 - e1).norm() == 0.0);
    CHECK((d2 - e2).norm() == 0.0);
    CHECK(std::abs(d1.cross(d2).dot(n) - 1.0) < 1e-12);
  }
}

TEST_CASE("r factor formulas") {
  // Unit-normal particle contact with mass m: [J M^-1 J^T] = 1/m.
  const double m = 2.0, h = 0.01;
  CHECK(r_factor(1.0 / m, h, RowClass::Position, RStrategy::EffectiveMass) ==
        doctest::Approx(h * h / m));
  CHECK(r_factor(1.0 / m, h, RowClass::Position, RStrategy::EffectiveMass) ==
        doctest::Approx(5e-5));
  CHECK(r_factor(1.0 / m, h, RowClass::Velocity, RStrategy::EffectiveMass) ==
        doctest::Approx(5e-3));
  CHECK(r_factor(0.7, h, RowClass::Position, RStrategy::Identity) == 1.0);
  CHECK(r_factor(0.7, h, RowClass::Position, RStrategy::TimestepSquared) == h * h);
  CHECK(r_factor(0.7, h, RowClass::Velocity, RStrategy::TimestepSquared) == h);
  // Non-positive diagonal falls back to the pure time-step scaling.
  CHECK(r_factor(0.0, h, RowClass::Position, RStrategy::EffectiveMass) == h * h);
}

TEST_CASE("fixed point joint rows at a shared point vanish") {
  GeneralizedState s = two_rigid_state();
  s.set_position(0, Vec3(0, 0, 0));
  s.set_position(1, Vec3(1, 0, 0));
  JointSpec j;
  j.kind = JointKind::FixedPoint;
  j.body_a = 0;
  j.body_b = 1;
  bind_joint(j, s, Vec3(0.5, 0, 0), Vec3::UnitZ());
  const auto rows = joint_rows(j, s);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK(std::abs(r.value) < 1e-15);
}

TEST_CASE("fixed point joint sees separation along x") {
  GeneralizedState s = two_rigid_state();
  s.set_position(0, Vec3(0, 0, 0));
  s.set_position(1, Vec3(1, 0, 0));
  JointSpec j;
  j.kind = JointKind::FixedPoint;
  j.body_a = 0;
  j.body_b = 1;
  bind_joint(j, s, Vec3(0.5, 0, 0), Vec3::UnitZ());
  const double delta = 0.03;
  s.set_position(1, Vec3(1 + delta, 0, 0));
  const auto rows = joint_rows(j, s);
  CHECK(rows[0].value == doctest::Approx(-delta));
  CHECK(std::abs(rows[1].value) < 1e-15);
}

TEST_CASE("bend spring stiffness maps to compliance") {
  GeneralizedState s = two_rigid_state();
  s.set_position(1, Vec3(1, 0, 0));
  JointSpec j;
  j.kind = JointKind::BendSpring;
  j.body_a = 0;
  j.body_b = 1;
  j.stiffness = 250.0;
  bind_joint(j, s, Vec3(0.5, 0, 0), Vec3::UnitX());
  const auto rows = joint_rows(j, s);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) CHECK(r.compliance == doctest::Approx(0.004));
}

TEST_CASE("joint row gradients match finite differences at random poses") {
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> up(-0.3, 0.3);
  for (int trial = 0; trial < 12; ++trial) {
    GeneralizedState s = two_rigid_state();
    s.set_position(0, Vec3(0, 0, 0));
    s.set_position(1, Vec3(1, 0, 0));
    JointSpec j;
    j.body_a = 0;
    j.body_b = 1;
    switch (trial % 4) {
      case 0: j.kind = JointKind::FixedPoint; break;
      case 1: j.kind = JointKind::Revolute; break;
      case 2: j.kind = JointKind::Prismatic; break;
      case 3:
        j.kind = JointKind::BendSpring;
        j.stiffness = 100.0;
        break;
    }
    bind_joint(j, s, Vec3(0.5, 0, 0.1), Vec3(0.3, 0.5, 1.0).normalized());
    // Perturb the pose so the gradient is exercised away from the bind point.
    s.set_position(0, Vec3(up(rng), up(rng), up(rng)));
    s.set_orientation(0, random_unit_quat(rng));
    s.set_position(1, Vec3(1 + up(rng), up(rng), up(rng)));
    s.set_orientation(1, random_unit_quat(rng));
    check_row_gradient(s, j);
  }
}

TEST_CASE("contact rows match finite differences of the gap") {
  std::mt19937 rng(43);
  std::uniform_real_distribution<double> up(-0.2, 0.2);
  for (int trial = 0; trial < 20; ++trial) {
    GeneralizedState s = two_rigid_state();
    s.set_position(0, Vec3(up(rng), up(rng), up(rng) + 1.0));
    s.set_orientation(0, random_unit_quat(rng));
    s.set_position(1, Vec3(up(rng), up(rng), up(rng) - 1.0));
    s.set_orientation(1, random_unit_quat(rng));

    ContactConstraint c;
    std::normal_distribution<double> g(0.0, 1.0);
    Vec3 n(g(rng), g(rng), g(rng));
    c.normal = n.normalized();
    c.a = {0, Vec3(up(rng), up(rng), up(rng))};
    c.b = {1, Vec3(up(rng), up(rng), up(rng))};

    const GenRow row = contact_normal_row(c, s);
    const double eps = 1e-6;
    for (int dof = 0; dof < s.num_dof; ++dof) {
      VecX du = VecX::Zero(s.num_dof);
      du[dof] = 1.0;
      GeneralizedState plus = s;
      integrate_coordinates(plus, du, eps);
      GeneralizedState minus = s;
      VecX ndu = -du;
      integrate_coordinates(minus, ndu, eps);
      const double fd = (contact_gap(c, plus) - contact_gap(c, minus)) / (2 * eps);
      double analytic = 0.0;
      for (size_t k = 0; k < row.idx.size(); ++k)
        if (row.idx[k] == dof) analytic = row.val[k];
      CHECK(analytic == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}
