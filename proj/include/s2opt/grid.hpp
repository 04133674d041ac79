#pragma once

// Sampling grid for bandlimited spin signals: L Gauss-Legendre colatitude
// rings and 2L-1 equispaced longitudes. The pair admits an exact quadrature
// for products of two bandlimit-L spin harmonics, so the forward transform
// is exact on bandlimited data.

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "s2opt/vector.hpp"

namespace s2opt {

namespace detail {
struct FftPlans;
}

class SphGrid {
public:
  /// Build the grid for bandlimit L (throws invalid-bandlimit for L < 1).
  static std::shared_ptr<const SphGrid> make(int L);

  int L() const noexcept { return L_; }
  int n_theta() const noexcept { return n_theta_; }
  int n_phi() const noexcept { return n_phi_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n_theta_) * n_phi_; }
  std::size_t index(int t, int p) const noexcept { return static_cast<std::size_t>(t) * n_phi_ + p; }

  const std::vector<double>& thetas() const noexcept { return thetas_; }
  const std::vector<double>& phis() const noexcept { return phis_; }
  /// Per-ring quadrature weight of one pixel (Gauss weight times 2pi/n_phi).
  const std::vector<double>& quad_weights() const noexcept { return quad_weights_; }
  /// Per-pixel solid angle in steradians, row-major like map values.
  const std::vector<double>& pixel_areas() const noexcept { return pixel_areas_; }
  double dphi() const noexcept;

  /// Index of the pixel whose centre is closest to (theta, phi).
  std::size_t nearest_pixel(double theta, double phi) const;

  const detail::FftPlans& fft() const noexcept { return *fft_; }

  SphGrid(const SphGrid&) = delete;
  SphGrid& operator=(const SphGrid&) = delete;
  ~SphGrid();

private:
  explicit SphGrid(int L);

  int L_;
  int n_theta_;
  int n_phi_;
  std::vector<double> thetas_;
  std::vector<double> phis_;
  std::vector<double> quad_weights_;
  std::vector<double> pixel_areas_;
  std::unique_ptr<detail::FftPlans> fft_;
};

using GridPtr = std::shared_ptr<const SphGrid>;

inline GridPtr make_grid(int L) { return SphGrid::make(L); }

/// Gauss-Legendre nodes (descending, in (-1, 1)) and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Sampled complex spin-s signal, values indexed (ring, column) row-major.
struct SphMap {
  GridPtr grid;
  int spin = 0;
  CVec values;

  SphMap() = default;
  SphMap(GridPtr g, int s);
  SphMap(GridPtr g, int s, CVec v);

  Complex& at(int t, int p) { return values[grid->index(t, p)]; }
  const Complex& at(int t, int p) const { return values[grid->index(t, p)]; }
};

/// Spin harmonic coefficients f_lm, 0 <= l < L, |m| <= l, flattened l^2 + l + m.
struct HarmonicCoeffs {
  int L = 0;
  int spin = 0;
  CVec coeffs;

  HarmonicCoeffs() = default;
  HarmonicCoeffs(int bandlimit, int s);
  HarmonicCoeffs(int bandlimit, int s, CVec c);

  static constexpr std::size_t index(int l, int m) noexcept {
    return static_cast<std::size_t>(l) * l + l + m;
  }
  static constexpr std::size_t size_for(int bandlimit) noexcept {
    return static_cast<std::size_t>(bandlimit) * bandlimit;
  }
  Complex& at(int l, int m) { return coeffs[index(l, m)]; }
  const Complex& at(int l, int m) const { return coeffs[index(l, m)]; }
};

}  // namespace s2opt
