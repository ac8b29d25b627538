#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nsdyn/bodies.h"

#include <random>

using namespace nsdyn;

namespace {

GeneralizedState particle_state(double mass, const Vec3& p, const Vec3& v) {
  GeneralizedState s;
  Body b;
  b.type = BodyType::Particle;
  b.mass = mass;
  s.bodies.push_back(b);
  s.finalize_layout();
  s.set_position(0, p);
  s.u.segment<3>(0) = v;
  return s;
}

GeneralizedState rigid_state(double mass, const Mat3& inertia) {
  GeneralizedState s;
  Body b;
  b.type = BodyType::Rigid;
  b.mass = mass;
  b.inertia = inertia;
  s.bodies.push_back(b);
  s.finalize_layout();
  return s;
}

}  // namespace

TEST_CASE("layout offsets sum to totals") {
  GeneralizedState s;
  Body p;
  p.type = BodyType::Particle;
  Body r;
  r.type = BodyType::Rigid;
  s.bodies = {p, r, p, r};
  s.finalize_layout();
  CHECK(s.num_dof == 3 + 6 + 3 + 6);
  CHECK(s.num_coord == 3 + 7 + 3 + 7);
  CHECK(s.dof_offset == std::vector<int>{0, 3, 9, 12});
  CHECK(s.coord_offset == std::vector<int>{0, 3, 10, 13});
}

TEST_CASE("quaternion rate matrix at identity gives half omega") {
  const Vec4 theta(1, 0, 0, 0);
  const Vec3 omega(0.3, -0.2, 0.9);
  const Vec4 rate = 0.5 * quaternion_rate_matrix(theta) * omega;
  CHECK(rate[0] == doctest::Approx(0.0));
  CHECK(rate[1] == doctest::Approx(0.5 * omega[0]));
  CHECK(rate[2] == doctest::Approx(0.5 * omega[1]));
  CHECK(rate[3] == doctest::Approx(0.5 * omega[2]));
}

TEST_CASE("quaternion rate matrix matches the quaternion product") {
  // theta = (0,1,0,0), omega = z: only the y-slot of the vector part moves.
  const Vec4 theta(0, 1, 0, 0);
  const Vec3 omega(0, 0, 1);
  const Vec4 rate = 0.5 * quaternion_rate_matrix(theta) * omega;
  CHECK(rate[0] == doctest::Approx(0.0));
  CHECK(rate[1] == doctest::Approx(0.0));
  CHECK(rate[2] == doctest::Approx(0.5));
  CHECK(rate[3] == doctest::Approx(0.0));
  // Cross-check against 0.5 * (0, omega) * theta for random inputs.
  std::mt19937 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vec4 t(g(rng), g(rng), g(rng), g(rng));
    t.normalize();
    const Vec3 w(g(rng), g(rng), g(rng));
    const Vec4 r1 = 0.5 * quaternion_rate_matrix(t) * w;
    const Eigen::Quaterniond prod =
        Eigen::Quaterniond(0.0, w[0], w[1], w[2]) * Eigen::Quaterniond(t[0], t[1], t[2], t[3]);
    const Vec4 r2 = 0.5 * Vec4(prod.w(), prod.x(), prod.y(), prod.z());
    CHECK((r1 - r2).norm() < 1e-12);
  }
}

TEST_CASE("quaternion rate matrix columns are orthogonal to theta") {
  std::mt19937 rng(23);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Vec4 theta(g(rng), g(rng), g(rng), g(rng));
    theta.normalize();
    const auto q = quaternion_rate_matrix(theta);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(q.col(c).dot(theta)) < 1e-12);
  }
}

TEST_CASE("integrate particle coordinates") {
  GeneralizedState s = particle_state(1.0, Vec3::Zero(), Vec3::Zero());
  VecX u(3);
  u << 1, 0, 0;
  integrate_coordinates(s, u, 0.1);
  CHECK(s.position(0).x() == doctest::Approx(0.1));
}

TEST_CASE("integrate rigid at rest stays put") {
  GeneralizedState s = rigid_state(2.0, Mat3::Identity());
  const VecX q0 = s.q;
  integrate_coordinates(s, VecX::Zero(6), 0.1);
  CHECK((s.q - q0).norm() == 0.0);
}

TEST_CASE("integrate rigid quaternion half-pi spin about z") {
  GeneralizedState s = rigid_state(1.0, Mat3::Identity());
  VecX u = VecX::Zero(6);
  u[5] = M_PI;  // omega_z
  integrate_coordinates(s, u, 0.5);
  const Vec4 theta = s.orientation(0);
  CHECK(std::abs(theta.norm() - 1.0) < 1e-12);
  CHECK(theta[0] == doctest::Approx(0.786).epsilon(1e-3));
  CHECK(theta[3] == doctest::Approx(0.618).epsilon(1e-3));
}

TEST_CASE("unconstrained velocity with zero force is unchanged") {
  GeneralizedState s = particle_state(2.0, Vec3::Zero(), Vec3(1, 2, 3));
  const VecX u = unconstrained_velocity(s, VecX::Zero(3), 0.1);
  CHECK((u - s.u).norm() == 0.0);
}

TEST_CASE("gravity enters as mass proportional force") {
  GeneralizedState s = particle_state(2.0, Vec3::Zero(), Vec3::Zero());
  const VecX f = external_forces(s, Vec3(0, 0, -9.8));
  CHECK(f[2] == doctest::Approx(-19.6));
  const VecX u = unconstrained_velocity(s, f, 0.1);
  CHECK(u[2] == doctest::Approx(-0.98));
}

TEST_CASE("gyroscopic torque hand calculation") {
  GeneralizedState s = rigid_state(1.0, Vec3(1, 2, 3).asDiagonal());
  s.u.segment<3>(3) = Vec3(1, 1, 0);
  const VecX f = external_forces(s, Vec3::Zero());
  // -omega x (I omega) = -(1,1,0) x (1,2,0) = -(0,0,1)
  CHECK(f[3] == doctest::Approx(0.0));
  CHECK(f[4] == doctest::Approx(0.0));
  CHECK(f[5] == doctest::Approx(-1.0));
  const double h = 0.1;
  const VecX u = unconstrained_velocity(s, f, h);
  CHECK(u[5] == doctest::Approx(-h / 3.0));
}

TEST_CASE("free rigid body preserves linear momentum over a step") {
  GeneralizedState s = rigid_state(3.0, Vec3(0.2, 0.3, 0.4).asDiagonal());
  s.u << 1.0, -2.0, 0.5, 4.0, -1.0, 2.0;
  const VecX f = external_forces(s, Vec3::Zero());
  const VecX u_new = unconstrained_velocity(s, f, 0.01);
  CHECK((u_new.head<3>() - s.u.head<3>()).norm() == 0.0);
  integrate_coordinates(s, u_new, 0.01);
  CHECK(std::abs(s.orientation(0).norm() - 1.0) < 1e-12);
}

TEST_CASE("block mass apply and inverse round trip") {
  GeneralizedState s;
  Body p;
  p.type = BodyType::Particle;
  p.mass = 2.0;
  Body r;
  r.type = BodyType::Rigid;
  r.mass = 3.0;
  r.inertia = Vec3(1, 2, 3).asDiagonal();
  s.bodies = {p, r};
  s.finalize_layout();
  const BlockDiagMass m = mass_matrix(s);
  const VecX v = VecX::Random(s.num_dof);
  CHECK((m.apply_inverse(m.apply(v)) - v).norm() < 1e-12);

  // Quadratic form through a sparse row touching particle x and rigid angular.
  std::vector<int> idx = {0, 6, 7, 8};
  std::vector<double> val = {2.0, 1.0, 0.0, 1.0};
  const double q = m.inverse_quadratic(idx.data(), val.data(), 4);
  CHECK(q == doctest::Approx(4.0 / 2.0 + 1.0 / 1.0 + 0.0 + 1.0 / 3.0));
}
