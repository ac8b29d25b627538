#include "nsdyn/materials.h"

#include <cmath>
#include <stdexcept>

namespace nsdyn {

TetElement make_tet_element(const std::array<int, 4>& verts, const Vec3& r0, const Vec3& r1,
                            const Vec3& r2, const Vec3& r3) {
  Mat3 dm;
  dm.col(0) = r1 - r0;
  dm.col(1) = r2 - r0;
  dm.col(2) = r3 - r0;
  const double det = dm.determinant();
  if (det <= 0.0) throw std::invalid_argument("tet element is degenerate or inverted at rest");
  TetElement e;
  e.verts = verts;
  e.dm_inv = dm.inverse();
  e.rest_volume = det / 6.0;
  return e;
}

Mat3 deformation_gradient(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3,
                          const TetElement& elem) {
  Mat3 ds;
  ds.col(0) = p1 - p0;
  ds.col(1) = p2 - p0;
  ds.col(2) = p3 - p0;
  return ds * elem.dm_inv;
}

NeoHookeanMaterial lame_from_young_poisson(double young, double poisson) {
  if (young <= 0.0) throw std::invalid_argument("Young's modulus must be positive");
  if (poisson < 0.0 || poisson >= 0.4999)
    throw std::invalid_argument("Poisson's ratio must lie in [0, 0.4999)");
  const double mu = young / (2.0 * (1.0 + poisson));
  const double lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
  NeoHookeanMaterial m;
  m.c1 = 0.5 * mu;
  m.d1 = 0.5 * lambda;
  m.alpha = lambda > 0.0 ? 1.0 + mu / lambda : 1.0;
  return m;
}

Mat6 isotropic_stiffness(double young, double poisson) {
  const double mu = young / (2.0 * (1.0 + poisson));
  const double lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
  Mat6 k = Mat6::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) k(i, j) = lambda;
    k(i, i) = lambda + 2.0 * mu;
    k(i + 3, i + 3) = mu;
  }
  return k;
}

Vec3 neo_hookean_gradient(const Vec3& s, const NeoHookeanMaterial& mat) {
  const double j = s[0] * s[1] * s[2];
  const Vec3 dj(s[1] * s[2], s[0] * s[2], s[0] * s[1]);
  return 2.0 * mat.c1 * s + 2.0 * mat.d1 * (j - mat.alpha) * dj;
}

Mat3 neo_hookean_hessian(const Vec3& s, const NeoHookeanMaterial& mat) {
  const double j = s[0] * s[1] * s[2];
  const double k0 = 2.0 * j - mat.alpha;
  const double k1 = mat.d1 * s[2] * k0;
  const double k2 = mat.d1 * s[1] * k0;
  const double k3 = mat.d1 * s[0] * k0;
  Mat3 h;
  h << mat.d1 * s[1] * s[1] * s[2] * s[2] + mat.c1, k1, k2,
       k1, mat.d1 * s[0] * s[0] * s[2] * s[2] + mat.c1, k3,
       k2, k3, mat.d1 * s[0] * s[0] * s[1] * s[1] + mat.c1;
  return 2.0 * h;
}

double neo_hookean_energy_density(const Vec3& s, const NeoHookeanMaterial& mat) {
  const double ic = s.squaredNorm();
  const double j = s[0] * s[1] * s[2];
  return mat.c1 * (ic - 3.0) + mat.d1 * (j - mat.alpha) * (j - mat.alpha);
}

Mat3 compliance_block(double rest_volume, const Mat3& hessian, bool project_psd,
                      bool diagonal_approx) {
  Mat3 h = hessian;
  if (project_psd) {
    Eigen::SelfAdjointEigenSolver<Mat3> eig(h);
    if (eig.eigenvalues().minCoeff() <= 0.0) h = project_psd3(h);
  }
  const Mat3 n = rest_volume * h;
  if (diagonal_approx) {
    Mat3 e = Mat3::Zero();
    for (int i = 0; i < 3; ++i) e(i, i) = n(i, i) > 0.0 ? 1.0 / n(i, i) : 0.0;
    return e;
  }
  const double det = n.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-300) {
    Mat3 e = Mat3::Zero();
    for (int i = 0; i < 3; ++i) e(i, i) = n(i, i) > 0.0 ? 1.0 / n(i, i) : 0.0;
    return e;
  }
  return n.inverse();
}

Eigen::Matrix<double, 3, 12> strain_jacobian(const TetElement& elem, const Svd3Result& svd) {
  Eigen::Matrix<double, 3, 12> jac = Eigen::Matrix<double, 3, 12>::Zero();
  for (int i = 0; i < 3; ++i) {
    const Vec3 u = svd.U.col(i);
    const Vec3 w = elem.dm_inv * svd.V.col(i);  // weights per moved vertex
    for (int k = 0; k < 3; ++k)
      jac.block<1, 3>(i, 3 * (k + 1)) = w[k] * u.transpose();
    jac.block<1, 3>(i, 0) = -(w[0] + w[1] + w[2]) * u.transpose();
  }
  return jac;
}

void TetMeshElements::prepare() {
  if (material.model == MaterialModel::NeoHookean) {
    nh = lame_from_young_poisson(material.young, material.poisson);
  } else {
    stiffness = isotropic_stiffness(material.young, material.poisson);
    stiffness_inv = stiffness.inverse();
  }
}

namespace {

inline Vec3 axial(const Mat3& m) {
  // Axial vector of the skew part: skew(a) = (m - m^T)/2.
  return Vec3(0.5 * (m(2, 1) - m(1, 2)), 0.5 * (m(0, 2) - m(2, 0)), 0.5 * (m(1, 0) - m(0, 1)));
}

inline Vec6 voigt(const Mat3& sym) {
  Vec6 v;
  v << sym(0, 0), sym(1, 1), sym(2, 2), 2.0 * sym(1, 2), 2.0 * sym(0, 2), 2.0 * sym(0, 1);
  return v;
}

}  // namespace

MaterialRows linear_strain_rows(const TetElement& elem, const TetMeshElements& mesh,
                                const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3) {
  const Mat3 f = deformation_gradient(p0, p1, p2, p3, elem);
  const Svd3Result svd = svd3(f);
  const Mat3 r = svd.U * svd.V.transpose();
  const Mat3 stretch = svd.V * svd.S.asDiagonal() * svd.V.transpose();

  MaterialRows out;
  out.dim = 6;
  const Vec6 strain = voigt(stretch - Mat3::Identity());
  out.c = elem.rest_volume * (mesh.stiffness * strain);
  out.compliance = mesh.stiffness_inv / elem.rest_volume;

  // G w = 2 axial(skew(R^T dF)) gives the rotation variation; fall back to a
  // frozen frame when two stretches sum to ~0 (inverted element).
  const Mat3 g = stretch.trace() * Mat3::Identity() - stretch;
  const bool rot_term = std::abs(g.determinant()) > 1e-12;
  const Mat3 g_inv = rot_term ? Mat3(g.inverse()) : Mat3::Zero();

  for (int k = 0; k < 4; ++k) {
    for (int d = 0; d < 3; ++d) {
      Mat3 df = Mat3::Zero();
      if (k == 0) {
        for (int c = 0; c < 3; ++c) df.row(d) -= elem.dm_inv.row(c);
      } else {
        df.row(d) = elem.dm_inv.row(k - 1);
      }
      const Mat3 rtdf = r.transpose() * df;
      Mat3 dstretch = rtdf;
      if (rot_term) {
        const Vec3 w = 2.0 * (g_inv * axial(rtdf));
        dstretch -= skew(w) * stretch;
      }
      const Mat3 sym = 0.5 * (dstretch + dstretch.transpose());
      out.jac.col(3 * k + d) = voigt(sym);
    }
  }
  return out;
}

MaterialRows neo_hookean_rows(const TetElement& elem, const TetMeshElements& mesh, const Vec3& p0,
                              const Vec3& p1, const Vec3& p2, const Vec3& p3) {
  const Mat3 f = deformation_gradient(p0, p1, p2, p3, elem);
  const Svd3Result svd = svd3(f);

  MaterialRows out;
  out.dim = 3;
  out.c.head<3>() = elem.rest_volume * neo_hookean_gradient(svd.S, mesh.nh);
  out.jac.topRows<3>() = strain_jacobian(elem, svd);
  const Mat3 h = neo_hookean_hessian(svd.S, mesh.nh);
  out.compliance.topLeftCorner<3, 3>() =
      compliance_block(elem.rest_volume, h, true, mesh.material.diagonal_compliance);
  return out;
}

double element_energy(const TetElement& elem, const TetMeshElements& mesh, const Vec3& p0,
                      const Vec3& p1, const Vec3& p2, const Vec3& p3) {
  const Mat3 f = deformation_gradient(p0, p1, p2, p3, elem);
  const Svd3Result svd = svd3(f);
  if (mesh.material.model == MaterialModel::NeoHookean)
    return elem.rest_volume * neo_hookean_energy_density(svd.S, mesh.nh);
  const Mat3 stretch = svd.V * svd.S.asDiagonal() * svd.V.transpose();
  const Vec6 strain = voigt(stretch - Mat3::Identity());
  return 0.5 * elem.rest_volume * strain.dot(mesh.stiffness * strain);
}

namespace {

inline MaterialRows element_rows(const TetMeshElements& mesh, const std::vector<Vec3>& p,
                                 const TetElement& e) {
  if (mesh.material.model == MaterialModel::NeoHookean)
    return neo_hookean_rows(e, mesh, p[e.verts[0]], p[e.verts[1]], p[e.verts[2]], p[e.verts[3]]);
  return linear_strain_rows(e, mesh, p[e.verts[0]], p[e.verts[1]], p[e.verts[2]], p[e.verts[3]]);
}

}  // namespace

void compute_material_rows(const TetMeshElements& mesh, const std::vector<Vec3>& positions,
                           std::vector<MaterialRows>& out) {
  out.resize(mesh.elements.size());
  const int n = static_cast<int>(mesh.elements.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out[i] = element_rows(mesh, positions, mesh.elements[i]);
}

void compute_material_rows_serial(const TetMeshElements& mesh, const std::vector<Vec3>& positions,
                                  std::vector<MaterialRows>& out) {
  out.resize(mesh.elements.size());
  for (size_t i = 0; i < mesh.elements.size(); ++i)
    out[i] = element_rows(mesh, positions, mesh.elements[i]);
}

}  // namespace nsdyn
