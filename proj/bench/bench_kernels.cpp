// Compares the OpenMP kernels against their serial references:
//   - CSR sparse matrix-vector product on a 3D Laplacian stencil
//   - per-element material row assembly on a tet grid
#include "nsdyn/linalg.h"
#include "nsdyn/materials.h"

#include <chrono>
#include <cstdio>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace nsdyn;

namespace {

double seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

SparseMatrix laplacian3d(int n) {
  std::vector<Triplet> t;
  const auto id = [n](int x, int y, int z) { return (x * n + y) * n + z; };
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      for (int z = 0; z < n; ++z) {
        const int i = id(x, y, z);
        t.push_back({i, i, 6.0});
        if (x > 0) t.push_back({i, id(x - 1, y, z), -1.0});
        if (x < n - 1) t.push_back({i, id(x + 1, y, z), -1.0});
        if (y > 0) t.push_back({i, id(x, y - 1, z), -1.0});
        if (y < n - 1) t.push_back({i, id(x, y + 1, z), -1.0});
        if (z > 0) t.push_back({i, id(x, y, z - 1), -1.0});
        if (z < n - 1) t.push_back({i, id(x, y, z + 1), -1.0});
      }
  return SparseMatrix::from_triplets(n * n * n, n * n * n, std::move(t));
}

void bench_spmv() {
  const int n = 64;  // 262144 rows
  const SparseMatrix a = laplacian3d(n);
  VecX x = VecX::Random(a.cols);
  const int reps = 40;

  VecX y_serial, y_omp;
  double t0 = seconds();
  for (int r = 0; r < reps; ++r) y_serial = spmv_serial(a, x);
  const double serial = seconds() - t0;
  t0 = seconds();
  for (int r = 0; r < reps; ++r) y_omp = spmv(a, x);
  const double parallel = seconds() - t0;

  const bool match = (y_serial - y_omp).norm() == 0.0;
  std::printf("spmv      rows=%-8d reps=%d serial=%.3fs omp=%.3fs speedup=%.2fx exact=%s\n",
              a.rows, reps, serial, parallel, serial / parallel, match ? "yes" : "NO");
}

void bench_material_rows() {
  const int nx = 40, ny = 20, nz = 20;  // 96000 elements
  TetMeshElements mesh;
  mesh.material.model = MaterialModel::NeoHookean;
  mesh.material.young = 1e5;
  mesh.material.poisson = 0.45;
  mesh.prepare();

  std::vector<Vec3> rest;
  const auto vid = [&](int x, int y, int z) { return (x * (ny + 1) + y) * (nz + 1) + z; };
  for (int x = 0; x <= nx; ++x)
    for (int y = 0; y <= ny; ++y)
      for (int z = 0; z <= nz; ++z) rest.push_back(Vec3(x, y, z) * 0.01);
  const int tets[6][4] = {{0, 1, 5, 7}, {0, 5, 4, 7}, {0, 4, 6, 7},
                          {0, 6, 2, 7}, {0, 2, 3, 7}, {0, 3, 1, 7}};
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      for (int z = 0; z < nz; ++z) {
        const int c[8] = {vid(x, y, z),         vid(x + 1, y, z),
                          vid(x, y + 1, z),     vid(x + 1, y + 1, z),
                          vid(x, y, z + 1),     vid(x + 1, y, z + 1),
                          vid(x, y + 1, z + 1), vid(x + 1, y + 1, z + 1)};
        for (const auto& t : tets) {
          std::array<int, 4> idx = {c[t[0]], c[t[1]], c[t[2]], c[t[3]]};
          Mat3 dm;
          dm.col(0) = rest[idx[1]] - rest[idx[0]];
          dm.col(1) = rest[idx[2]] - rest[idx[0]];
          dm.col(2) = rest[idx[3]] - rest[idx[0]];
          if (dm.determinant() < 0.0) std::swap(idx[2], idx[3]);
          mesh.elements.push_back(
              make_tet_element(idx, rest[idx[0]], rest[idx[1]], rest[idx[2]], rest[idx[3]]));
        }
      }

  // Random deformation.
  std::mt19937 rng(7);
  std::normal_distribution<double> jitter(0.0, 0.001);
  std::vector<Vec3> positions = rest;
  for (Vec3& p : positions) p += Vec3(jitter(rng), jitter(rng), jitter(rng));

  std::vector<MaterialRows> serial_rows, omp_rows;
  double t0 = seconds();
  compute_material_rows_serial(mesh, positions, serial_rows);
  const double serial = seconds() - t0;
  t0 = seconds();
  compute_material_rows(mesh, positions, omp_rows);
  const double parallel = seconds() - t0;

  bool match = true;
  for (size_t i = 0; i < serial_rows.size(); ++i)
    if ((serial_rows[i].jac - omp_rows[i].jac).norm() != 0.0 ||
        (serial_rows[i].c - omp_rows[i].c).norm() != 0.0)
      match = false;
  std::printf("material  elems=%-7zu          serial=%.3fs omp=%.3fs speedup=%.2fx exact=%s\n",
              mesh.elements.size(), serial, parallel, serial / parallel, match ? "yes" : "NO");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP not enabled; comparing identical serial paths\n");
#endif
  bench_spmv();
  bench_material_rows();
  return 0;
}
