// Small dense kernels and a compressed sparse row matrix.
#pragma once

#include <Eigen/Dense>
#include <vector>

namespace nsdyn {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using VecX = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using MatX = Eigen::MatrixXd;

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

// CSR matrix. Column indices are strictly increasing within each row and
// duplicate triplets are summed during construction.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_offsets;  // length rows + 1, non-decreasing
  std::vector<int> col_indices;
  std::vector<double> values;

  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> entries);
  static SparseMatrix identity(int n);

  int nnz() const { return static_cast<int>(values.size()); }
  VecX diagonal() const;
  bool valid() const;
};

// y = A x, rows computed independently (parallelized when OpenMP is enabled).
VecX spmv(const SparseMatrix& a, const VecX& x);
// Serial reference used by tests and the kernel benchmark.
VecX spmv_serial(const SparseMatrix& a, const VecX& x);
// y = A^T x. Serial; used for J^T products during assembly.
VecX spmv_transpose(const SparseMatrix& a, const VecX& x);

// Rotation-variant signed SVD: F = U diag(S) V^T with det(U) = det(V) = +1.
// An inversion (det F < 0) is carried as a negative third singular value.
struct Svd3Result {
  Mat3 U;
  Vec3 S;  // s1 >= s2 >= |s3|
  Mat3 V;
};

Svd3Result svd3(const Mat3& f);

// Eigen-decompose a symmetric matrix and clamp eigenvalues to a small
// positive floor scaled by the largest eigenvalue magnitude.
Mat3 project_psd3(const Mat3& m);

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

}  // namespace nsdyn
