// Tetrahedral FEM elements in generalized compliance form.
#pragma once

#include "nsdyn/linalg.h"

#include <array>

namespace nsdyn {

struct TetElement {
  std::array<int, 4> verts{};  // indices into the mesh particle block
  Mat3 dm_inv = Mat3::Identity();
  double rest_volume = 0.0;
};

// Builds rest-shape data; throws if the element is inverted or degenerate.
TetElement make_tet_element(const std::array<int, 4>& verts, const Vec3& r0, const Vec3& r1,
                            const Vec3& r2, const Vec3& r3);

Mat3 deformation_gradient(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3,
                          const TetElement& elem);

struct NeoHookeanMaterial {
  double c1 = 0.0;
  double d1 = 0.0;
  double alpha = 1.0;
};

// C1 = mu/2, D1 = lambda/2, alpha = 1 + mu/lambda. Rejects nu >= 0.4999;
// nu = 0 degenerates to alpha = 1.
NeoHookeanMaterial lame_from_young_poisson(double young, double poisson);

// Isotropic Hookean stiffness in Voigt order [xx, yy, zz, yz, xz, xy] with
// engineering shear strains.
Mat6 isotropic_stiffness(double young, double poisson);

// dPsi/ds for Psi = C1 (I_C - 3) + D1 (J - alpha)^2 over principal stretches.
Vec3 neo_hookean_gradient(const Vec3& s, const NeoHookeanMaterial& mat);
Mat3 neo_hookean_hessian(const Vec3& s, const NeoHookeanMaterial& mat);
double neo_hookean_energy_density(const Vec3& s, const NeoHookeanMaterial& mat);

// E = (V_e * hessian)^-1 with an eigenvalue projection when the Hessian is
// indefinite. The diagonal-only approximation is selectable.
Mat3 compliance_block(double rest_volume, const Mat3& hessian, bool project_psd = true,
                      bool diagonal_approx = false);

// Rows d(s_i)/d(p_k) for the principal stretches, 3 x 12 over the four
// vertices. Repeated singular values use the u_i v_i^T rows unchanged.
Eigen::Matrix<double, 3, 12> strain_jacobian(const TetElement& elem, const Svd3Result& svd);

enum class MaterialModel { Linear, NeoHookean };

struct MaterialSpec {
  MaterialModel model = MaterialModel::NeoHookean;
  double young = 1e5;
  double poisson = 0.45;
  bool diagonal_compliance = false;
};

// One element's contribution to the Newton system: constraint vector c,
// Jacobian rows over the 4 vertices, and compliance block E.
struct MaterialRows {
  int dim = 3;  // 3 for principal stretches, 6 for Voigt strain
  Vec6 c = Vec6::Zero();
  Eigen::Matrix<double, 6, 12> jac = Eigen::Matrix<double, 6, 12>::Zero();
  Mat6 compliance = Mat6::Zero();
};

struct TetMeshElements {
  std::vector<TetElement> elements;
  MaterialSpec material;
  NeoHookeanMaterial nh;  // derived from young/poisson at build
  Mat6 stiffness = Mat6::Zero();
  Mat6 stiffness_inv = Mat6::Zero();

  void prepare();  // fills nh / stiffness from the material spec
};

// Co-rotational Cauchy strain in Voigt order and its full Jacobian
// (including the rotation variation) for the linear model.
MaterialRows linear_strain_rows(const TetElement& elem, const TetMeshElements& mesh,
                                const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3);

MaterialRows neo_hookean_rows(const TetElement& elem, const TetMeshElements& mesh, const Vec3& p0,
                              const Vec3& p1, const Vec3& p2, const Vec3& p3);

// Element strain energy, used by finite-difference force checks.
double element_energy(const TetElement& elem, const TetMeshElements& mesh, const Vec3& p0,
                      const Vec3& p1, const Vec3& p2, const Vec3& p3);

// Per-element rows for a whole mesh. `positions` holds the mesh particle
// positions. The parallel version distributes elements across threads and
// is bitwise identical to the serial reference.
void compute_material_rows(const TetMeshElements& mesh, const std::vector<Vec3>& positions,
                           std::vector<MaterialRows>& out);
void compute_material_rows_serial(const TetMeshElements& mesh, const std::vector<Vec3>& positions,
                                  std::vector<MaterialRows>& out);

}  // namespace nsdyn
