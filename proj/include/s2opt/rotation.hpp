#pragma once

#include "s2opt/grid.hpp"

namespace s2opt {

/// Euler angles in the zyz convention, radians.
struct EulerAngles {
  double alpha = 0.0;  // [0, 2pi)
  double beta = 0.0;   // [0, pi]
  double gamma = 0.0;  // [0, 2pi)
};

/// Coefficients of R_rho f, where (R_rho f)(w) = f(R_rho^-1 w) and
/// R_rho = Rz(alpha) Ry(beta) Rz(gamma):
///   f'_lm = sum_n e^{-i m alpha} d^l_{mn}(beta) e^{-i n gamma} f_ln.
HarmonicCoeffs rotate(const HarmonicCoeffs& coeffs, const EulerAngles& rho);

}  // namespace s2opt
