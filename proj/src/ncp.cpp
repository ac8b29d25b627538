#include "nsdyn/ncp.h"

#include <cmath>

namespace nsdyn {

PhiEval phi_n(double c, double lambda, double r, NcpKind kind) {
  PhiEval out;
  const double rl = r * lambda;
  if (kind == NcpKind::MinimumMap) {
    if (c <= rl) {
      out.value = c;
      out.d_constraint = 1.0;
      out.d_lambda = 0.0;
    } else {
      out.value = rl;
      out.d_constraint = 0.0;
      out.d_lambda = r;
    }
    return out;
  }
  const double root = std::sqrt(c * c + rl * rl);
  out.value = c + rl - root;
  if (root == 0.0) {
    out.d_constraint = 0.0;  // subgradient choice at the origin
    out.d_lambda = r;
  } else {
    out.d_constraint = 1.0 - c / root;
    out.d_lambda = (1.0 - rl / root) * r;
  }
  return out;
}

double friction_W(double vt, double lf, double mln, double r, NcpKind kind) {
  constexpr double kDegenerate = 1e-12;
  constexpr double kCap = 1e12;
  if (kind == NcpKind::MinimumMap) {
    if (vt <= r * (mln - lf)) return 0.0;
    if (mln <= kDegenerate) return kCap;
    return (vt - r * (mln - lf)) / mln;
  }
  // Fischer-Burmeister: W = v_next / lf_next from the fixed-point update.
  const double slack = mln - lf;
  const double root = std::sqrt(vt * vt + r * r * slack * slack);
  const double numer = root - r * slack;
  const double denom = vt + r * mln - root;
  if (denom <= kDegenerate) return kCap;
  return r * numer / denom;
}

}  // namespace nsdyn
