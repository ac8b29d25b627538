#include "nsdyn/solvers.h"

#include <cmath>
#include <stdexcept>

namespace nsdyn {

namespace {

constexpr double kBreakdownEps = 1e-300;

struct BestTracker {
  VecX x;
  double residual = std::numeric_limits<double>::infinity();
  void offer(const VecX& candidate, double r) {
    if (r < residual) {
      residual = r;
      x = candidate;
    }
  }
};

VecX apply_precond(const VecX& inv_diag, const VecX& v) {
  return inv_diag.size() ? VecX(inv_diag.cwiseProduct(v)) : v;
}

double precond_norm(const VecX& inv_diag, const VecX& r) {
  if (!inv_diag.size()) return r.norm();
  return std::sqrt(r.dot(inv_diag.cwiseProduct(r)));
}

LinearSolveResult solve_jacobi(const SparseMatrix& a, const VecX& b, const VecX& x0,
                               const LinearSolverConfig& cfg) {
  LinearSolveResult out;
  VecX inv_diag = diagonal_preconditioner(a);
  VecX x = x0;
  VecX r = b - spmv(a, x);
  BestTracker best;
  best.offer(x, r.norm());
  out.residual_history.push_back(r.norm());
  for (int it = 0; it < cfg.max_iterations && out.residual_history.back() > cfg.tolerance; ++it) {
    x += inv_diag.cwiseProduct(r);
    r = b - spmv(a, x);
    out.residual_history.push_back(r.norm());
    best.offer(x, r.norm());
    out.iterations_used = it + 1;
  }
  out.solution = best.x;
  return out;
}

LinearSolveResult solve_gauss_seidel(const SparseMatrix& a, const VecX& b, const VecX& x0,
                                     const LinearSolverConfig& cfg) {
  LinearSolveResult out;
  VecX x = x0;
  VecX r = b - spmv(a, x);
  BestTracker best;
  best.offer(x, r.norm());
  out.residual_history.push_back(r.norm());
  for (int it = 0; it < cfg.max_iterations && out.residual_history.back() > cfg.tolerance; ++it) {
    // Forward sweep in ascending row order.
    for (int row = 0; row < a.rows; ++row) {
      double sum = b[row];
      double diag = 0.0;
      for (int k = a.row_offsets[row]; k < a.row_offsets[row + 1]; ++k) {
        const int c = a.col_indices[k];
        if (c == row)
          diag = a.values[k];
        else
          sum -= a.values[k] * x[c];
      }
      if (std::abs(diag) > kBreakdownEps) x[row] = sum / diag;
    }
    r = b - spmv(a, x);
    out.residual_history.push_back(r.norm());
    best.offer(x, r.norm());
    out.iterations_used = it + 1;
  }
  out.solution = best.x;
  return out;
}

LinearSolveResult solve_pcg(const SparseMatrix& a, const VecX& b, const VecX& x0,
                            const LinearSolverConfig& cfg, const VecX& inv_diag) {
  LinearSolveResult out;
  VecX x = x0;
  VecX r = b - spmv(a, x);
  BestTracker best;
  best.offer(x, r.norm());
  out.residual_history.push_back(r.norm());
  out.precond_residual_history.push_back(precond_norm(inv_diag, r));

  VecX z = apply_precond(inv_diag, r);
  VecX p = z;
  double rz = r.dot(z);
  for (int it = 0; it < cfg.max_iterations && out.residual_history.back() > cfg.tolerance; ++it) {
    VecX ap = spmv(a, p);
    const double pap = p.dot(ap);
    if (std::abs(pap) < kBreakdownEps) {
      out.breakdown = true;
      break;
    }
    const double alpha = rz / pap;
    x += alpha * p;
    r -= alpha * ap;
    out.residual_history.push_back(r.norm());
    out.precond_residual_history.push_back(precond_norm(inv_diag, r));
    best.offer(x, r.norm());
    out.iterations_used = it + 1;
    z = apply_precond(inv_diag, r);
    const double rz_new = r.dot(z);
    if (std::abs(rz) < kBreakdownEps) {
      out.breakdown = true;
      break;
    }
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  out.solution = best.x;
  return out;
}

// Preconditioned conjugate residual. Minimizes the residual in the
// M^-1 norm over the Krylov space, so that norm is non-increasing; an
// observed increase means the recurrence hit its numerical floor and we
// stop, keeping the previous iterate.
LinearSolveResult solve_pcr(const SparseMatrix& a, const VecX& b, const VecX& x0,
                            const LinearSolverConfig& cfg, const VecX& inv_diag) {
  LinearSolveResult out;
  VecX x = x0;
  VecX r = b - spmv(a, x);
  BestTracker best;
  best.offer(x, r.norm());
  out.residual_history.push_back(r.norm());
  out.precond_residual_history.push_back(precond_norm(inv_diag, r));

  VecX z = apply_precond(inv_diag, r);
  VecX p = z;
  VecX az = spmv(a, z);
  VecX ap = az;
  double zaz = z.dot(az);
  for (int it = 0; it < cfg.max_iterations && out.residual_history.back() > cfg.tolerance; ++it) {
    VecX map = apply_precond(inv_diag, ap);
    const double denom = ap.dot(map);
    if (std::abs(denom) < kBreakdownEps) {
      out.breakdown = true;
      break;
    }
    const double alpha = zaz / denom;
    const VecX x_next = x + alpha * p;
    const VecX r_next = r - alpha * ap;
    const double pnorm = precond_norm(inv_diag, r_next);
    if (pnorm > out.precond_residual_history.back()) break;  // numerical floor
    x = x_next;
    r = r_next;
    out.residual_history.push_back(r.norm());
    out.precond_residual_history.push_back(pnorm);
    best.offer(x, r.norm());
    out.iterations_used = it + 1;
    z -= alpha * map;
    VecX az_new = spmv(a, z);
    const double zaz_new = z.dot(az_new);
    if (std::abs(zaz) < kBreakdownEps) {
      out.breakdown = true;
      break;
    }
    const double beta = zaz_new / zaz;
    p = z + beta * p;
    ap = az_new + beta * ap;
    zaz = zaz_new;
  }
  out.solution = best.x;
  return out;
}

}  // namespace

VecX diagonal_preconditioner(const SparseMatrix& a) {
  if (a.rows != a.cols) throw std::invalid_argument("diagonal_preconditioner: matrix not square");
  VecX d = a.diagonal();
  VecX inv(d.size());
  for (int i = 0; i < d.size(); ++i) inv[i] = d[i] > 0.0 ? 1.0 / d[i] : 1.0;
  return inv;
}

LinearSolveResult solve_linear(const SparseMatrix& a, const VecX& b, const VecX& x0,
                               const LinearSolverConfig& cfg) {
  if (a.rows != a.cols || b.size() != a.rows || x0.size() != a.cols)
    throw std::invalid_argument("solve_linear: dimension mismatch");
  if (cfg.max_iterations < 1) throw std::invalid_argument("solve_linear: max_iterations < 1");

  VecX inv_diag;
  if (cfg.preconditioner == PreconditionerKind::Diagonal) inv_diag = diagonal_preconditioner(a);

  switch (cfg.method) {
    case LinearMethod::Jacobi:
      return solve_jacobi(a, b, x0, cfg);
    case LinearMethod::GaussSeidel:
      return solve_gauss_seidel(a, b, x0, cfg);
    case LinearMethod::PCG:
      return solve_pcg(a, b, x0, cfg, inv_diag);
    case LinearMethod::PCR:
      return solve_pcr(a, b, x0, cfg, inv_diag);
  }
  throw std::logic_error("solve_linear: unknown method");
}

}  // namespace nsdyn
