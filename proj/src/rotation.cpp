#include "s2opt/rotation.hpp"

#include <cmath>
#include <numbers>

#include "s2opt/error.hpp"
#include "s2opt/wigner.hpp"

namespace s2opt {

HarmonicCoeffs rotate(const HarmonicCoeffs& coeffs, const EulerAngles& rho) {
  require(rho.beta >= 0.0 && rho.beta <= std::numbers::pi + 1e-14, ErrorCode::invalid_parameter,
          "rotate: beta outside [0, pi]");
  const int L = coeffs.L;
  const auto d = wigner_d_all(L, rho.beta);
  HarmonicCoeffs out(L, coeffs.spin);
  for (int l = 0; l < L; ++l) {
    const int dim = 2 * l + 1;
    for (int m = -l; m <= l; ++m) {
      Complex acc = 0.0;
      for (int n = -l; n <= l; ++n) {
        acc += d[l][static_cast<std::size_t>(m + l) * dim + (n + l)] * std::polar(1.0, -n * rho.gamma) *
               coeffs.at(l, n);
      }
      out.at(l, m) = std::polar(1.0, -m * rho.alpha) * acc;
    }
  }
  return out;
}

}  // namespace s2opt
