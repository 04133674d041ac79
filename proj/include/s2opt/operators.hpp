#pragma once

// Linear operators with exact adjoints, and the measurement models built
// from them.
//
// A LinOp maps between flat complex vectors described by a Space. Pixel
// spaces hold SphMap values in grid scan order, harmonic spaces hold
// HarmonicCoeffs in l^2 + l + m order, wavelet spaces hold
// WaveletCoeffs::flatten output, and measurement spaces hold the kept
// pixels of a mask in scan order. All inner products are Euclidean.

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "s2opt/grid.hpp"
#include "s2opt/wavelet.hpp"

namespace s2opt {

enum class SpaceKind { pixel, harmonic, wavelet, measurement, generic };

struct Space {
  SpaceKind kind = SpaceKind::generic;
  int spin = 0;
  int L = 0;
  std::size_t size = 0;

  static Space pixel(const SphGrid& g, int spin) { return {SpaceKind::pixel, spin, g.L(), g.size()}; }
  static Space harmonic(int L, int spin) { return {SpaceKind::harmonic, spin, L, HarmonicCoeffs::size_for(L)}; }
  friend bool operator==(const Space&, const Space&) = default;
};

std::string describe(const Space& s);

/// Total number of LinOp apply/adjoint evaluations since the last reset,
/// nested evaluations inside compositions included.
std::uint64_t linop_evaluations() noexcept;
void reset_linop_evaluations() noexcept;

class LinOp {
public:
  using Kernel = std::function<void(std::span<const Complex>, std::span<Complex>)>;

  LinOp() = default;
  LinOp(std::string name, Space in, Space out, Kernel apply, Kernel adjoint);

  const std::string& name() const noexcept { return name_; }
  const Space& in() const noexcept { return in_; }
  const Space& out() const noexcept { return out_; }

  void apply(std::span<const Complex> x, std::span<Complex> y) const;
  void adjoint(std::span<const Complex> y, std::span<Complex> x) const;
  CVec apply(std::span<const Complex> x) const;
  CVec adjoint(std::span<const Complex> y) const;

  /// The operator with apply and adjoint swapped.
  LinOp adjoint_op() const;

private:
  std::string name_;
  Space in_;
  Space out_;
  std::shared_ptr<const Kernel> apply_;
  std::shared_ptr<const Kernel> adjoint_;
};

LinOp identity_op(const Space& s);
/// x -> a x.
LinOp scale_op(const Space& s, double a);

/// Pipeline in application order: compose({A, B, C}) x = C(B(A x)).
/// Throws composition-error if adjacent spaces differ.
LinOp compose(const std::vector<LinOp>& pipeline);

/// max over seeds of |<Ax, y> - <x, A^dag y>| / (||Ax|| ||y||), 0 when the
/// denominator vanishes.
double dot_test(const LinOp& op, int n_seeds, std::uint64_t seed = 0);

/// ||A||^2 by power iteration on A^dag A from a seeded random start. Stops
/// after max_iter steps or when the estimate changes by less than rel_tol.
double operator_norm_squared(const LinOp& op, int max_iter = 100, double rel_tol = 1e-8, std::uint64_t seed = 7);

// ---------------------------------------------------------------- masks

struct Mask {
  std::vector<std::uint8_t> keep;  // one flag per pixel
  std::size_t kept = 0;

  static Mask from_flags(std::vector<std::uint8_t> flags);
  static Mask all(std::size_t n);
  std::size_t size() const noexcept { return keep.size(); }
};

/// Removes round(fraction * npix) pixels chosen uniformly without replacement.
Mask random_mask(const SphGrid& grid, double fraction_masked, std::uint64_t seed);
/// Removes every pixel with |latitude| < half_width (radians).
Mask band_mask(const SphGrid& grid, double half_width);

CVec mask_apply(const SphMap& x, const Mask& mask);
SphMap mask_adjoint(std::span<const Complex> y, const Mask& mask, const GridPtr& grid, int spin);
LinOp mask_op(const GridPtr& grid, int spin, const Mask& mask);

// ---------------------------------------------------- harmonic scalings

struct HarmonicScaling {
  std::vector<double> b;  // per-l multiplier
  int L() const noexcept { return static_cast<int>(b.size()); }
};

HarmonicScaling gaussian_beam(double fwhm, int L);
/// sqrt((l+2)(l-1) / (l(l+1))) for l >= 2, zero below.
HarmonicScaling lensing_kernel(int L);
/// Elementwise sqrt of a non-negative scaling.
HarmonicScaling scaling_sqrt(const HarmonicScaling& s);

HarmonicCoeffs harmonic_scale_apply(const HarmonicCoeffs& f, const HarmonicScaling& s);
LinOp harmonic_scaling_op(int L, int spin, const HarmonicScaling& s, std::string name = "scale");
/// W: spin-0 convergence coefficients to spin-2 shear coefficients.
LinOp lensing_op(int L);

// ----------------------------------------------------- power spectra

/// (l+1)^-2 scaled so that sum_l (2l+1) C_l / 4pi = 1.
HarmonicScaling default_power_spectrum(int L);
/// Two-column "l value" text, l ascending from 0; needs at least L rows.
HarmonicScaling read_power_spectrum(const std::string& path, int L);
/// Per-pixel variance sum_l (2l+1) C_l / 4pi of a field with spectrum C_l.
double field_variance(const HarmonicScaling& cl);

// ------------------------------------------------- transform operators

LinOp sht_forward_op(const GridPtr& grid, int spin);
LinOp sht_inverse_op(const GridPtr& grid, int spin);
LinOp wavelet_analysis_op(const GridPtr& grid, std::shared_ptr<const WaveletKernels> kernels);
LinOp wavelet_synthesis_op(const GridPtr& grid, std::shared_ptr<const WaveletKernels> kernels);

// ------------------------------------------------ measurement models

/// D Y^-1 Theta Y: blur then mask a spin-0 map.
LinOp phi_masked_blur(const GridPtr& grid, const Mask& mask, double fwhm);
/// Y^-1 Theta Y: full-sky blur.
LinOp phi_blur(const GridPtr& grid, double fwhm);
/// D Y^-1 C^{1/2}: whitened coefficients to masked pixels.
LinOp phi_whitened_sky(const GridPtr& grid, const Mask& mask, const HarmonicScaling& cl);
/// D 2Y^-1 W 0Y: spin-0 convergence to masked spin-2 shear.
LinOp phi_lensing(const GridPtr& grid, const Mask& mask);

}  // namespace s2opt
