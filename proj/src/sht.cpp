#include "s2opt/sht.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>
#include <vector>

#include "fft_plans.hpp"
#include "s2opt/error.hpp"
#include "s2opt/wigner.hpp"

namespace s2opt {
namespace {

double spin_sign(int s) { return (std::abs(s) % 2 == 0) ? 1.0 : -1.0; }

// Bucket of longitude frequency m in an FFT of length n (n >= 2L-1).
int bucket(int m, int n) { return m >= 0 ? m : m + n; }

// norm[l] = (-1)^s sqrt((2l+1)/4pi)
std::vector<double> harmonic_norms(int L, int s) {
  std::vector<double> norm(L);
  for (int l = 0; l < L; ++l) norm[l] = spin_sign(s) * std::sqrt((2.0 * l + 1.0) / (4.0 * std::numbers::pi));
  return norm;
}

}  // namespace

void check_spin(int spin, int L) {
  require(std::abs(spin) < L, ErrorCode::spin_exceeds_bandlimit,
          "spin " + std::to_string(spin) + " requires bandlimit > " + std::to_string(std::abs(spin)));
}

void sht_synthesize(const SphGrid& grid, int spin, std::span<const Complex> coeffs, std::span<Complex> map) {
  const int L = grid.L();
  check_spin(spin, L);
  require(coeffs.size() == HarmonicCoeffs::size_for(L) && map.size() == grid.size(), ErrorCode::dimension_error,
          "sht_synthesize: buffer sizes do not match the grid");
  const int n_theta = grid.n_theta();
  const int n_phi = grid.n_phi();
  const auto norm = harmonic_norms(L, spin);
  const auto& thetas = grid.thetas();
  const auto& fft = grid.fft();

#pragma omp parallel
  {
    std::vector<double> dcol(L);
    std::vector<Complex> spectrum(n_phi);
#pragma omp for schedule(static)
    for (int t = 0; t < n_theta; ++t) {
      std::fill(spectrum.begin(), spectrum.end(), Complex{});
      for (int m = -(L - 1); m <= L - 1; ++m) {
        wigner_d_column(L, m, -spin, thetas[t], dcol.data());
        Complex acc = 0.0;
        for (int l = std::max(std::abs(m), std::abs(spin)); l < L; ++l) {
          acc += coeffs[HarmonicCoeffs::index(l, m)] * (norm[l] * dcol[l]);
        }
        spectrum[bucket(m, n_phi)] = acc;
      }
      fft.backward(spectrum.data(), map.data() + static_cast<std::size_t>(t) * n_phi);
    }
  }
}

void sht_analyze(const SphGrid& grid, int spin, std::span<const Complex> map, bool weighted,
                 std::span<Complex> coeffs) {
  const int L = grid.L();
  check_spin(spin, L);
  require(coeffs.size() == HarmonicCoeffs::size_for(L) && map.size() == grid.size(), ErrorCode::dimension_error,
          "sht_analyze: buffer sizes do not match the grid");
  const int n_theta = grid.n_theta();
  const int n_phi = grid.n_phi();
  const auto norm = harmonic_norms(L, spin);
  const auto& thetas = grid.thetas();
  const auto& q = grid.quad_weights();
  const auto& fft = grid.fft();

  // Longitude sums G_t(m) = sum_p f(t,p) e^{-i m phi_p}, one FFT per ring.
  std::vector<Complex> ring_spectra(grid.size());
#pragma omp parallel for schedule(static)
  for (int t = 0; t < n_theta; ++t) {
    fft.forward(map.data() + static_cast<std::size_t>(t) * n_phi, ring_spectra.data() + static_cast<std::size_t>(t) * n_phi);
  }

  std::fill(coeffs.begin(), coeffs.end(), Complex{});
#pragma omp parallel
  {
    std::vector<double> dcol(L);
#pragma omp for schedule(dynamic, 1)
    for (int m = -(L - 1); m <= L - 1; ++m) {
      const int k = bucket(m, n_phi);
      for (int t = 0; t < n_theta; ++t) {
        wigner_d_column(L, m, -spin, thetas[t], dcol.data());
        const Complex g = ring_spectra[static_cast<std::size_t>(t) * n_phi + k] * (weighted ? q[t] : 1.0);
        for (int l = std::max(std::abs(m), std::abs(spin)); l < L; ++l) {
          coeffs[HarmonicCoeffs::index(l, m)] += g * (norm[l] * dcol[l]);
        }
      }
    }
  }
}

HarmonicCoeffs sht_forward(const SphMap& map) {
  const auto& grid = *map.grid;
  check_spin(map.spin, grid.L());
  HarmonicCoeffs out(grid.L(), map.spin);
  sht_analyze(grid, map.spin, map.values, true, out.coeffs);
  return out;
}

SphMap sht_inverse(const HarmonicCoeffs& coeffs, const GridPtr& grid) {
  require(coeffs.L == grid->L(), ErrorCode::dimension_error,
          "sht_inverse: coefficient bandlimit " + std::to_string(coeffs.L) + " != grid bandlimit " +
              std::to_string(grid->L()));
  SphMap out(grid, coeffs.spin);
  sht_synthesize(*grid, coeffs.spin, coeffs.coeffs, out.values);
  return out;
}

SphMap sht_forward_adjoint(const HarmonicCoeffs& coeffs, const GridPtr& grid) {
  SphMap out = sht_inverse(coeffs, grid);
  const auto& q = grid->quad_weights();
  for (int t = 0; t < grid->n_theta(); ++t) {
    for (int p = 0; p < grid->n_phi(); ++p) out.at(t, p) *= q[t];
  }
  return out;
}

HarmonicCoeffs sht_inverse_adjoint(const SphMap& map) {
  const auto& grid = *map.grid;
  check_spin(map.spin, grid.L());
  HarmonicCoeffs out(grid.L(), map.spin);
  sht_analyze(grid, map.spin, map.values, false, out.coeffs);
  return out;
}

Complex spin_harmonic(int s, int l, int m, double theta, double phi) {
  if (l < std::abs(s) || l < std::abs(m)) return 0.0;
  std::vector<double> col(l + 1);
  wigner_d_column(l + 1, m, -s, theta, col.data());
  const double mag = spin_sign(s) * std::sqrt((2.0 * l + 1.0) / (4.0 * std::numbers::pi)) * col[l];
  return std::polar(1.0, m * phi) * mag;
}

}  // namespace s2opt
