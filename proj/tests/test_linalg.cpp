#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nsdyn/linalg.h"

#include <random>

using namespace nsdyn;

TEST_CASE("csr assembly sums duplicates and orders columns") {
  const SparseMatrix a =
      SparseMatrix::from_triplets(2, 3, {{0, 2, 1.0}, {0, 0, 2.0}, {0, 2, 3.0}, {1, 1, -1.0}});
  CHECK(a.valid());
  CHECK(a.nnz() == 3);
  CHECK(a.row_offsets == std::vector<int>{0, 2, 3});
  CHECK(a.col_indices == std::vector<int>{0, 2, 1});
  CHECK(a.values[0] == 2.0);
  CHECK(a.values[1] == 4.0);
}

TEST_CASE("spmv identity and zero") {
  const SparseMatrix id = SparseMatrix::identity(3);
  VecX x(3);
  x << 1, 2, 3;
  CHECK((spmv(id, x) - x).norm() == 0.0);

  const SparseMatrix zero = SparseMatrix::from_triplets(3, 3, {});
  CHECK(spmv(zero, x).norm() == 0.0);
}

TEST_CASE("spmv 2x2 hand multiplication") {
  const SparseMatrix a =
      SparseMatrix::from_triplets(2, 2, {{0, 0, 4.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 3.0}});
  VecX x(2);
  x << 1, 2;
  const VecX y = spmv(a, x);
  CHECK(y[0] == doctest::Approx(6.0));
  CHECK(y[1] == doctest::Approx(7.0));
  // Symmetric matrix: transpose product matches.
  const VecX yt = spmv_transpose(a, x);
  CHECK((y - yt).norm() == 0.0);
}

TEST_CASE("spmv transpose examples") {
  const SparseMatrix id = SparseMatrix::identity(3);
  VecX x(3);
  x << 4, 5, 6;
  CHECK((spmv_transpose(id, x) - x).norm() == 0.0);

  const SparseMatrix row = SparseMatrix::from_triplets(1, 3, {{0, 0, 1.0}});
  VecX s(1);
  s << 5;
  const VecX y = spmv_transpose(row, s);
  CHECK(y[0] == 5.0);
  CHECK(y[1] == 0.0);
  CHECK(y[2] == 0.0);
}

TEST_CASE("spmv dimension mismatch throws") {
  const SparseMatrix id = SparseMatrix::identity(3);
  CHECK_THROWS(spmv(id, VecX::Zero(4)));
  CHECK_THROWS(spmv_transpose(id, VecX::Zero(2)));
}

TEST_CASE("adjoint identity on random sparse matrices") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  std::uniform_int_distribution<int> dim(1, 40);
  for (int trial = 0; trial < 50; ++trial) {
    const int rows = dim(rng), cols = dim(rng);
    std::vector<Triplet> t;
    std::uniform_int_distribution<int> rr(0, rows - 1), cc(0, cols - 1);
    for (int k = 0; k < rows * 2; ++k) t.push_back({rr(rng), cc(rng), val(rng)});
    const SparseMatrix a = SparseMatrix::from_triplets(rows, cols, t);
    const VecX x = VecX::Random(cols), y = VecX::Random(rows);
    const double lhs = y.dot(spmv(a, x));
    const double rhs = spmv_transpose(a, y).dot(x);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("omp spmv matches serial bitwise") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::vector<Triplet> t;
  const int n = 200;
  std::uniform_int_distribution<int> ii(0, n - 1);
  for (int k = 0; k < 3000; ++k) t.push_back({ii(rng), ii(rng), val(rng)});
  const SparseMatrix a = SparseMatrix::from_triplets(n, n, t);
  const VecX x = VecX::Random(n);
  const VecX y1 = spmv(a, x);
  const VecX y2 = spmv_serial(a, x);
  CHECK((y1 - y2).norm() == 0.0);
}

TEST_CASE("svd3 identity and uniform scale") {
  const Svd3Result r1 = svd3(Mat3::Identity());
  CHECK((r1.S - Vec3(1, 1, 1)).norm() < 1e-12);
  const Svd3Result r2 = svd3(2.0 * Mat3::Identity());
  CHECK((r2.S - Vec3(2, 2, 2)).norm() < 1e-12);
}

TEST_CASE("svd3 carries inversion on the third singular value") {
  Mat3 f = Vec3(1, 1, -1).asDiagonal();
  const Svd3Result r = svd3(f);
  CHECK(r.U.determinant() == doctest::Approx(1.0));
  CHECK(r.V.determinant() == doctest::Approx(1.0));
  CHECK(r.S[2] == doctest::Approx(-1.0));
  CHECK(r.S[0] >= r.S[1]);
  const Mat3 rec = r.U * r.S.asDiagonal() * r.V.transpose();
  CHECK((rec - f).norm() < 1e-10);
}

TEST_CASE("svd3 reconstruction on random matrices") {
  std::mt19937 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    Mat3 f;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) f(i, j) = g(rng);
    if (trial % 5 == 0) f.col(1) = f.col(0) * 1e-7;  // near singular
    const Svd3Result r = svd3(f);
    CHECK(r.U.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.V.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    const Mat3 rec = r.U * r.S.asDiagonal() * r.V.transpose();
    const double scale = std::max(1.0, f.norm());
    CHECK((rec - f).norm() / scale < 1e-10);
    CHECK(r.S[0] >= r.S[1]);
    CHECK(r.S[1] >= std::abs(r.S[2]));
  }
}

TEST_CASE("project_psd3 leaves positive definite input unchanged") {
  Mat3 m;
  m << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  CHECK((project_psd3(m) - m).norm() < 1e-12);
}

TEST_CASE("project_psd3 clamps negative eigenvalues") {
  const Mat3 m = Vec3(1, -2, 3).asDiagonal();
  const Mat3 p = project_psd3(m);
  Eigen::SelfAdjointEigenSolver<Mat3> eig(p);
  CHECK(eig.eigenvalues().minCoeff() == doctest::Approx(3e-10));
  CHECK(eig.eigenvalues().maxCoeff() == doctest::Approx(3.0));
}

TEST_CASE("project_psd3 lifts rank-1 null directions") {
  std::mt19937 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 v(g(rng), g(rng), g(rng));
    const Mat3 m = v * v.transpose();
    const Mat3 p = project_psd3(m);
    Eigen::SelfAdjointEigenSolver<Mat3> eig(p);
    CHECK(eig.eigenvalues().minCoeff() >= 0.0);
    // Zero eigenvalues lift to the floor, scaled by the top eigenvalue.
    CHECK(eig.eigenvalues().minCoeff() == doctest::Approx(1e-10 * v.squaredNorm()).epsilon(1e-6));
    CHECK((p - m).norm() <= 1e-9 * std::max(1.0, m.norm()));
  }
}
