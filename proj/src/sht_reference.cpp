#include <cmath>
#include <cstdlib>
#include <vector>

#include "s2opt/error.hpp"
#include "s2opt/sht.hpp"
#include "s2opt/wigner.hpp"

namespace s2opt::reference {
namespace {

// Y_lm(theta_t, 0) for every (l, m) on one ring.
std::vector<double> ring_harmonics(int L, int spin, double theta) {
  std::vector<double> table(HarmonicCoeffs::size_for(L), 0.0);
  std::vector<double> col(L);
  const double sign = (std::abs(spin) % 2 == 0) ? 1.0 : -1.0;
  for (int m = -(L - 1); m <= L - 1; ++m) {
    wigner_d_column(L, m, -spin, theta, col.data());
    for (int l = std::abs(m); l < L; ++l) {
      table[HarmonicCoeffs::index(l, m)] = sign * std::sqrt((2.0 * l + 1.0) / (4.0 * M_PI)) * col[l];
    }
  }
  return table;
}

}  // namespace

void sht_synthesize(const SphGrid& grid, int spin, std::span<const Complex> coeffs, std::span<Complex> map) {
  const int L = grid.L();
  check_spin(spin, L);
  require(coeffs.size() == HarmonicCoeffs::size_for(L) && map.size() == grid.size(), ErrorCode::dimension_error,
          "reference::sht_synthesize: buffer sizes do not match the grid");
  for (int t = 0; t < grid.n_theta(); ++t) {
    const auto ylm = ring_harmonics(L, spin, grid.thetas()[t]);
    for (int p = 0; p < grid.n_phi(); ++p) {
      const double phi = grid.phis()[p];
      Complex acc = 0.0;
      for (int l = std::abs(spin); l < L; ++l) {
        for (int m = -l; m <= l; ++m) {
          const auto i = HarmonicCoeffs::index(l, m);
          acc += coeffs[i] * ylm[i] * std::polar(1.0, m * phi);
        }
      }
      map[grid.index(t, p)] = acc;
    }
  }
}

void sht_analyze(const SphGrid& grid, int spin, std::span<const Complex> map, bool weighted,
                 std::span<Complex> coeffs) {
  const int L = grid.L();
  check_spin(spin, L);
  require(coeffs.size() == HarmonicCoeffs::size_for(L) && map.size() == grid.size(), ErrorCode::dimension_error,
          "reference::sht_analyze: buffer sizes do not match the grid");
  std::fill(coeffs.begin(), coeffs.end(), Complex{});
  for (int t = 0; t < grid.n_theta(); ++t) {
    const auto ylm = ring_harmonics(L, spin, grid.thetas()[t]);
    const double w = weighted ? grid.quad_weights()[t] : 1.0;
    for (int p = 0; p < grid.n_phi(); ++p) {
      const double phi = grid.phis()[p];
      const Complex v = map[grid.index(t, p)] * w;
      for (int l = std::abs(spin); l < L; ++l) {
        for (int m = -l; m <= l; ++m) {
          const auto i = HarmonicCoeffs::index(l, m);
          coeffs[i] += v * ylm[i] * std::polar(1.0, -m * phi);
        }
      }
    }
  }
}

Complex evaluate(const HarmonicCoeffs& coeffs, double theta, double phi) {
  const auto ylm = ring_harmonics(coeffs.L, coeffs.spin, theta);
  Complex acc = 0.0;
  for (int l = std::abs(coeffs.spin); l < coeffs.L; ++l) {
    for (int m = -l; m <= l; ++m) {
      const auto i = HarmonicCoeffs::index(l, m);
      acc += coeffs.coeffs[i] * ylm[i] * std::polar(1.0, m * phi);
    }
  }
  return acc;
}

}  // namespace s2opt::reference
