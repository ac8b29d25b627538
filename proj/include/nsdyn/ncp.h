// Complementarity functions with r-factor scaling.
#pragma once

namespace nsdyn {

enum class NcpKind { MinimumMap, FischerBurmeister };

struct PhiEval {
  double value = 0.0;
  double d_constraint = 0.0;  // d(phi)/dC
  double d_lambda = 0.0;      // d(phi)/d(lambda)
};

// Contact NCP function phi(C, r*lambda) with its partial derivatives.
// Fischer-Burmeister uses the subgradient choice (0, r) at the origin.
PhiEval phi_n(double c, double lambda, double r, NcpKind kind);

// Friction compliance W relating tangential speed and friction force
// magnitude. Requires mu*lambda_n > 0 (inactive rows are handled by the
// caller); near-degenerate denominators cap at 1e12 instead of dividing.
double friction_W(double tangential_speed, double lambda_f_norm, double mu_lambda_n, double r,
                  NcpKind kind);

}  // namespace nsdyn
