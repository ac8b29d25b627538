// Iterative symmetric linear solvers over SparseMatrix.
#pragma once

#include "nsdyn/linalg.h"

namespace nsdyn {

enum class LinearMethod { Jacobi, GaussSeidel, PCG, PCR };
enum class PreconditionerKind { None, Diagonal };

struct LinearSolverConfig {
  LinearMethod method = LinearMethod::PCR;
  int max_iterations = 40;
  double tolerance = 1e-10;  // absolute residual 2-norm
  PreconditionerKind preconditioner = PreconditionerKind::Diagonal;
};

struct LinearSolveResult {
  VecX solution;
  // True residual 2-norm per iteration, entry 0 is the initial residual.
  std::vector<double> residual_history;
  // M^-1-norm of the residual, tracked for the Krylov methods.
  std::vector<double> precond_residual_history;
  int iterations_used = 0;
  bool breakdown = false;
};

// Entries 1/A_ii; zero or negative diagonals fall back to 1.
VecX diagonal_preconditioner(const SparseMatrix& a);

// Solves A x = b for symmetric A starting from x0. Runs until the true
// residual drops below cfg.tolerance or the iteration budget is spent, and
// returns the best iterate seen (lowest true residual).
LinearSolveResult solve_linear(const SparseMatrix& a, const VecX& b, const VecX& x0,
                               const LinearSolverConfig& cfg);

}  // namespace nsdyn
