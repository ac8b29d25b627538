#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nsdyn/ncp.h"

#include <cmath>
#include <random>

using namespace nsdyn;

TEST_CASE("fischer-burmeister pythagorean triple") {
  const PhiEval p = phi_n(3.0, 4.0, 1.0, NcpKind::FischerBurmeister);
  CHECK(p.value == doctest::Approx(2.0));
}

TEST_CASE("fischer-burmeister satisfied on the boundary") {
  const PhiEval p = phi_n(0.0, 5.0, 1.0, NcpKind::FischerBurmeister);
  CHECK(p.value == doctest::Approx(0.0));
}

TEST_CASE("minimum map selects the smaller branch") {
  const PhiEval p = phi_n(2.0, 3.0, 1.0, NcpKind::MinimumMap);
  CHECK(p.value == doctest::Approx(2.0));
  CHECK(p.d_constraint == 1.0);
  CHECK(p.d_lambda == 0.0);
  const PhiEval q = phi_n(5.0, 3.0, 1.0, NcpKind::MinimumMap);
  CHECK(q.value == doctest::Approx(3.0));
  CHECK(q.d_constraint == 0.0);
  CHECK(q.d_lambda == 1.0);
}

TEST_CASE("fischer-burmeister subgradient choice at the origin") {
  for (double r : {0.1, 1.0, 10.0}) {
    const PhiEval p = phi_n(0.0, 0.0, r, NcpKind::FischerBurmeister);
    CHECK(p.value == 0.0);
    CHECK(p.d_constraint == 0.0);
    CHECK(p.d_lambda == r);
  }
}

TEST_CASE("ncp root set equals the complementarity set on a grid") {
  // Coarse version; the acceptance suite runs the full 401x401 grid.
  const int n = 81;
  for (NcpKind kind : {NcpKind::MinimumMap, NcpKind::FischerBurmeister}) {
    for (double r : {0.1, 1.0, 10.0}) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const double a = -2.0 + 4.0 * i / (n - 1);
          const double b = -2.0 + 4.0 * j / (n - 1);
          const bool root = std::abs(phi_n(a, b, r, kind).value) <= 1e-9;
          const bool comp = a >= -1e-9 && b >= -1e-9 && std::abs(a * b) <= 1e-9;
          CHECK(root == comp);
        }
      }
    }
  }
}

TEST_CASE("fischer-burmeister derivatives match finite differences") {
  std::mt19937 rng(29);
  std::uniform_real_distribution<double> uab(-2.0, 2.0);
  std::uniform_real_distribution<double> ur(0.1, 10.0);
  const double eps = 1e-7;
  int tested = 0;
  while (tested < 1000) {
    const double a = uab(rng), b = uab(rng), r = ur(rng);
    if (a * a + b * b <= 1e-4) continue;
    ++tested;
    const PhiEval p = phi_n(a, b, r, NcpKind::FischerBurmeister);
    const double fd_a =
        (phi_n(a + eps, b, r, NcpKind::FischerBurmeister).value -
         phi_n(a - eps, b, r, NcpKind::FischerBurmeister).value) /
        (2 * eps);
    const double fd_b =
        (phi_n(a, b + eps, r, NcpKind::FischerBurmeister).value -
         phi_n(a, b - eps, r, NcpKind::FischerBurmeister).value) /
        (2 * eps);
    CHECK(p.d_constraint == doctest::Approx(fd_a).epsilon(1e-6));
    CHECK(p.d_lambda == doctest::Approx(fd_b).epsilon(1e-6));
  }
}

TEST_CASE("friction W stick region is exactly zero for the minimum map") {
  CHECK(friction_W(0.0, 2.0, 5.0, 1.0, NcpKind::MinimumMap) == 0.0);
  CHECK(friction_W(1.0, 0.0, 5.0, 1.0, NcpKind::MinimumMap) == 0.0);  // v <= r(m - l)
  CHECK(friction_W(0.0, 0.0, 3.0, 0.5, NcpKind::MinimumMap) == 0.0);
}

TEST_CASE("friction W at the cone limit reproduces the sliding value") {
  // v_t = 0.5 m/s, mu lambda_n = 0.5 * 10 = 5 N, |lambda_f| = 5 N, r = 1.
  const double w_min = friction_W(0.5, 5.0, 5.0, 1.0, NcpKind::MinimumMap);
  CHECK(w_min == doctest::Approx(0.1));
  // Fischer-Burmeister agrees at the cone limit: phi_f = -v + W*lambda = 0.
  const double w_fb = friction_W(0.5, 5.0, 5.0, 1.0, NcpKind::FischerBurmeister);
  CHECK(w_fb == doctest::Approx(0.1));
}

TEST_CASE("friction W vanishes for a sticking fischer-burmeister contact") {
  const double w = friction_W(0.0, 2.0, 5.0, 1.0, NcpKind::FischerBurmeister);
  CHECK(w == doctest::Approx(0.0));
}

TEST_CASE("friction W degenerate denominator caps") {
  CHECK(friction_W(0.0, 0.0, 0.0, 1.0, NcpKind::MinimumMap) == 0.0);  // stick branch
  CHECK(friction_W(1e-6, 0.0, 0.0, 1.0, NcpKind::MinimumMap) == 1e12);
  CHECK(friction_W(0.0, 0.0, 0.0, 1.0, NcpKind::FischerBurmeister) == 1e12);
  // Far outside the cone the FB denominator flips sign and also caps.
  CHECK(friction_W(0.0, 11.0, 5.0, 1.0, NcpKind::FischerBurmeister) == 1e12);
}

TEST_CASE("friction W is non-negative") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> uv(0.0, 5.0);
  std::uniform_real_distribution<double> ur(0.01, 10.0);
  for (int trial = 0; trial < 5000; ++trial) {
    const double v = uv(rng), l = uv(rng), m = uv(rng) + 1e-6, r = ur(rng);
    for (NcpKind kind : {NcpKind::MinimumMap, NcpKind::FischerBurmeister}) {
      CHECK(friction_W(v, l, m, r, kind) >= 0.0);
    }
  }
}
