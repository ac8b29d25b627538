#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nsdyn/solvers.h"

#include <random>

using namespace nsdyn;

namespace {

SparseMatrix dense_to_csr(const MatX& m) {
  std::vector<Triplet> t;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) t.push_back({i, j, m(i, j)});
  return SparseMatrix::from_triplets(static_cast<int>(m.rows()), static_cast<int>(m.cols()), t);
}

MatX random_spd(int n, std::mt19937& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  MatX a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  return a * a.transpose() + 0.1 * MatX::Identity(n, n);
}

LinearSolverConfig config(LinearMethod m, int iters, double tol = 1e-14) {
  LinearSolverConfig cfg;
  cfg.method = m;
  cfg.max_iterations = iters;
  cfg.tolerance = tol;
  return cfg;
}

}  // namespace

TEST_CASE("identity system solves in one iteration for every method") {
  const SparseMatrix a = SparseMatrix::identity(4);
  VecX b(4);
  b << 1, -2, 3, 0.5;
  for (LinearMethod m :
       {LinearMethod::Jacobi, LinearMethod::GaussSeidel, LinearMethod::PCG, LinearMethod::PCR}) {
    const LinearSolveResult r = solve_linear(a, b, VecX::Zero(4), config(m, 10, 1e-12));
    CHECK((r.solution - b).norm() < 1e-12);
    CHECK(r.iterations_used == 1);
    CHECK(r.residual_history.size() == static_cast<size_t>(r.iterations_used + 1));
  }
}

TEST_CASE("pcr solves the 2x2 example to the direct solution") {
  const SparseMatrix a =
      SparseMatrix::from_triplets(2, 2, {{0, 0, 4.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 3.0}});
  VecX b(2);
  b << 1, 2;
  const LinearSolveResult r = solve_linear(a, b, VecX::Zero(2), config(LinearMethod::PCR, 10));
  CHECK(r.solution[0] == doctest::Approx(1.0 / 11.0).epsilon(1e-8));
  CHECK(r.solution[1] == doctest::Approx(7.0 / 11.0).epsilon(1e-8));
}

TEST_CASE("pcr tolerates a singular diagonal system") {
  const SparseMatrix a = dense_to_csr((MatX(2, 2) << 1, 0, 0, 0).finished());
  VecX b(2);
  b << 1, 0;
  const LinearSolveResult r = solve_linear(a, b, VecX::Zero(2), config(LinearMethod::PCR, 20));
  CHECK(std::isfinite(r.solution[0]));
  CHECK(std::isfinite(r.solution[1]));
  CHECK(r.solution[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.residual_history.back() < 1e-12);
}

TEST_CASE("diagonal preconditioner entries") {
  CHECK((diagonal_preconditioner(SparseMatrix::identity(3)) - VecX::Ones(3)).norm() == 0.0);

  const SparseMatrix d = dense_to_csr((MatX(2, 2) << 4, 0, 0, 2).finished());
  const VecX inv = diagonal_preconditioner(d);
  CHECK(inv[0] == 0.25);
  CHECK(inv[1] == 0.5);

  const SparseMatrix z = dense_to_csr((MatX(2, 2) << 1, 0, 0, 0).finished());
  CHECK(diagonal_preconditioner(z)[1] == 1.0);
}

TEST_CASE("pcr preconditioned residual norm is non-increasing on SPSD systems") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 5 + trial;
    MatX m = random_spd(n, rng);
    if (trial % 3 == 0) {
      // Make it singular: zero out one eigen-direction.
      Eigen::SelfAdjointEigenSolver<MatX> eig(m);
      VecX ev = eig.eigenvalues();
      ev[0] = 0.0;
      m = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
    }
    const SparseMatrix a = dense_to_csr(m);
    const VecX b = VecX::Random(n);
    const LinearSolveResult r =
        solve_linear(a, b, VecX::Zero(n), config(LinearMethod::PCR, 2 * n, 0.0));
    for (size_t k = 1; k < r.precond_residual_history.size(); ++k)
      CHECK(r.precond_residual_history[k] <= r.precond_residual_history[k - 1] + 1e-12);
  }
}

TEST_CASE("pcg and pcr converge within the Krylov bound on SPD systems") {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 10 + 4 * trial;  // up to 50
    const MatX m = random_spd(n, rng);
    const SparseMatrix a = dense_to_csr(m);
    const VecX b = VecX::Random(n);
    const VecX direct = m.ldlt().solve(b);
    for (LinearMethod method : {LinearMethod::PCG, LinearMethod::PCR}) {
      const LinearSolveResult r =
          solve_linear(a, b, VecX::Zero(n), config(method, 2 * n, 1e-12));
      CHECK((r.solution - direct).norm() < 1e-8 * std::max(1.0, direct.norm()));
    }
  }
}

TEST_CASE("jacobi and gauss-seidel contract on diagonally dominant systems") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> off(-1.0, 1.0);
  const int n = 20;
  MatX m(n, n);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      m(i, j) = off(rng);
      sum += std::abs(m(i, j));
    }
    m(i, i) = sum + 1.0;
  }
  const MatX sym = 0.5 * (m + m.transpose()) + MatX::Identity(n, n) * n;
  const SparseMatrix a = dense_to_csr(sym);
  const VecX b = VecX::Random(n);
  for (LinearMethod method : {LinearMethod::Jacobi, LinearMethod::GaussSeidel}) {
    const LinearSolveResult r = solve_linear(a, b, VecX::Zero(n), config(method, 200, 1e-10));
    CHECK(r.residual_history.back() <= 1e-10);
    for (size_t k = 1; k < r.residual_history.size(); ++k)
      CHECK(r.residual_history[k] <= r.residual_history[k - 1] + 1e-12);
  }
}

TEST_CASE("consistent start leaves x0 unchanged") {
  std::mt19937 rng(17);
  const MatX m = random_spd(6, rng);
  const SparseMatrix a = dense_to_csr(m);
  const VecX x0 = VecX::Random(6);
  const VecX b = m * x0;
  for (LinearMethod method :
       {LinearMethod::Jacobi, LinearMethod::GaussSeidel, LinearMethod::PCG, LinearMethod::PCR}) {
    LinearSolverConfig cfg = config(method, 50, 1e-9);
    const LinearSolveResult r = solve_linear(a, b, x0, cfg);
    CHECK((r.solution - x0).norm() < 1e-12);
    CHECK(r.iterations_used == 0);
  }
}
