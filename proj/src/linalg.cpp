#include "nsdyn/linalg.h"

#include <Eigen/SVD>
#include <algorithm>
#include <stdexcept>

namespace nsdyn {

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::vector<Triplet> entries) {
  for (const Triplet& t : entries) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw std::invalid_argument("sparse triplet out of range");
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_offsets.assign(rows + 1, 0);
  m.col_indices.reserve(entries.size());
  m.values.reserve(entries.size());

  for (size_t i = 0; i < entries.size();) {
    size_t j = i;
    double sum = 0.0;
    while (j < entries.size() && entries[j].row == entries[i].row &&
           entries[j].col == entries[i].col) {
      sum += entries[j].value;
      ++j;
    }
    m.col_indices.push_back(entries[i].col);
    m.values.push_back(sum);
    m.row_offsets[entries[i].row + 1]++;
    i = j;
  }
  for (int r = 0; r < rows; ++r) m.row_offsets[r + 1] += m.row_offsets[r];
  return m;
}

SparseMatrix SparseMatrix::identity(int n) {
  SparseMatrix m;
  m.rows = m.cols = n;
  m.row_offsets.resize(n + 1);
  m.col_indices.resize(n);
  m.values.assign(n, 1.0);
  for (int i = 0; i <= n; ++i) m.row_offsets[i] = i;
  for (int i = 0; i < n; ++i) m.col_indices[i] = i;
  return m;
}

VecX SparseMatrix::diagonal() const {
  VecX d = VecX::Zero(rows);
  for (int r = 0; r < rows; ++r)
    for (int k = row_offsets[r]; k < row_offsets[r + 1]; ++k)
      if (col_indices[k] == r) d[r] = values[k];
  return d;
}

bool SparseMatrix::valid() const {
  if (static_cast<int>(row_offsets.size()) != rows + 1) return false;
  if (row_offsets.front() != 0 || row_offsets.back() != nnz()) return false;
  for (int r = 0; r < rows; ++r) {
    if (row_offsets[r] > row_offsets[r + 1]) return false;
    for (int k = row_offsets[r]; k < row_offsets[r + 1]; ++k) {
      if (col_indices[k] < 0 || col_indices[k] >= cols) return false;
      if (k > row_offsets[r] && col_indices[k] <= col_indices[k - 1]) return false;
    }
  }
  return true;
}

VecX spmv(const SparseMatrix& a, const VecX& x) {
  if (x.size() != a.cols) throw std::invalid_argument("spmv: dimension mismatch");
  VecX y(a.rows);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < a.rows; ++r) {
    double sum = 0.0;
    for (int k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k)
      sum += a.values[k] * x[a.col_indices[k]];
    y[r] = sum;
  }
  return y;
}

VecX spmv_serial(const SparseMatrix& a, const VecX& x) {
  if (x.size() != a.cols) throw std::invalid_argument("spmv: dimension mismatch");
  VecX y(a.rows);
  for (int r = 0; r < a.rows; ++r) {
    double sum = 0.0;
    for (int k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k)
      sum += a.values[k] * x[a.col_indices[k]];
    y[r] = sum;
  }
  return y;
}

VecX spmv_transpose(const SparseMatrix& a, const VecX& x) {
  if (x.size() != a.rows) throw std::invalid_argument("spmv_transpose: dimension mismatch");
  VecX y = VecX::Zero(a.cols);
  for (int r = 0; r < a.rows; ++r) {
    const double xr = x[r];
    for (int k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k)
      y[a.col_indices[k]] += a.values[k] * xr;
  }
  return y;
}

Svd3Result svd3(const Mat3& f) {
  Eigen::JacobiSVD<Mat3> svd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Svd3Result r;
  r.U = svd.matrixU();
  r.V = svd.matrixV();
  r.S = svd.singularValues();
  // Push any reflection onto the third singular value so U, V stay rotations.
  if (r.U.determinant() < 0.0) {
    r.U.col(2) *= -1.0;
    r.S[2] *= -1.0;
  }
  if (r.V.determinant() < 0.0) {
    r.V.col(2) *= -1.0;
    r.S[2] *= -1.0;
  }
  return r;
}

Mat3 project_psd3(const Mat3& m) {
  Eigen::SelfAdjointEigenSolver<Mat3> eig(m);
  Vec3 ev = eig.eigenvalues();
  const double floor = 1e-10 * ev.cwiseAbs().maxCoeff();
  for (int i = 0; i < 3; ++i) ev[i] = std::max(ev[i], floor);
  return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace nsdyn
