#pragma once

// Scale-discretized directional wavelets for spin-0 signals.
//
// Tiling: with s(t) = exp(-1/(1-t^2)) a smooth bump and
//   k(t) = int_t^1 s_lambda(u)/u du / int_{1/lambda}^1 s_lambda(u)/u du,
// the scaling kernel is Phi_l = sqrt(k(l/lambda^J0)) and the wavelet kernel
// at scale j is kappa_jl = sqrt(k(l/lambda^{j+1}) - k(l/lambda^j)), for
// J0 <= j <= J = ceil(log_lambda(L-1)). The squares telescope to
// k(l/lambda^{J+1}) = 1 for every l < L.
//
// Directionality: azimuthal weights s_ln for n in {-(N-1), -(N-3), ..., N-1}
// with sum_n |s_ln|^2 = 1 for every l >= 1. Directions are sampled at
// gamma_k = k pi / N, k = 0..N-1.
//
// Normalization: the slice for scale j and direction k is
//   W_jk(w) = sum_n e^{i n gamma_k} sum_lm (-1)^n kappa_jl conj(s_ln) f_lm  (-n)Y_lm(w),
// i.e. the directional convolution <f, R_(phi,theta,gamma_k) Psi_j> up to
// the constant sqrt(2 pi). Synthesis inverts the gamma sampling exactly and
// resums with the conjugate weights, so synthesis(analysis(f)) = f whenever
//   Phi_l^2 + sum_j kappa_jl^2 sum_n |s_ln|^2 = 1.

#include <span>
#include <vector>

#include "s2opt/grid.hpp"

namespace s2opt {

struct WaveletParams {
  int L = 1;
  double lambda = 2.0;
  int J0 = 0;
  int N = 1;
};

/// Largest scale index J = ceil(log_lambda(L - 1)), or 0 for L <= 2.
int max_wavelet_scale(int L, double lambda);

struct WaveletKernels {
  WaveletParams params;
  int J = 0;
  std::vector<double> scaling_ell;           // Phi_l, l < L
  std::vector<std::vector<double>> wav_ell;  // kappa_jl, j = J0..J
  std::vector<int> modes;                    // azimuthal indices n
  std::vector<std::vector<Complex>> directionality;  // s_ln, [l][mode index]

  int L() const noexcept { return params.L; }
  int n_scales() const noexcept { return static_cast<int>(wav_ell.size()); }
  int n_directions() const noexcept { return params.N; }
  /// Number of maps in a coefficient set (scaling + scales x directions).
  int n_slices() const noexcept { return 1 + n_scales() * n_directions(); }
};

/// Smooth tiling function k(t): 1 for t <= 1/lambda, 0 for t >= 1.
double tiling_k(double t, double lambda);

WaveletKernels build_kernels(const WaveletParams& params);

/// max over l of |1 - (Phi_l^2 + sum_j kappa_jl^2 sum_n |s_ln|^2)|.
double check_admissibility(const WaveletKernels& kernels);

/// Scaling map followed by one map per (scale, direction).
struct WaveletCoeffs {
  SphMap scaling;
  std::vector<SphMap> scales;  // index (j - J0) * N + k

  SphMap& slice(int scale_index, int direction, int N) { return scales[scale_index * N + direction]; }
  const SphMap& slice(int scale_index, int direction, int N) const { return scales[scale_index * N + direction]; }

  /// Concatenate scaling then scale slices into one vector.
  CVec flatten() const;
  static WaveletCoeffs unflatten(std::span<const Complex> flat, const GridPtr& grid, const WaveletKernels& kernels);
  static WaveletCoeffs zeros(const GridPtr& grid, const WaveletKernels& kernels);
};

WaveletCoeffs wavelet_analysis(const SphMap& map, const WaveletKernels& kernels);
SphMap wavelet_synthesis(const WaveletCoeffs& coeffs, const WaveletKernels& kernels);
SphMap wavelet_analysis_adjoint(const WaveletCoeffs& coeffs, const WaveletKernels& kernels);
WaveletCoeffs wavelet_synthesis_adjoint(const SphMap& map, const WaveletKernels& kernels);

/// Flat-buffer forms used by the operator layer. `coeffs` holds
/// n_slices() * grid.size() values in WaveletCoeffs::flatten order.
void wavelet_analysis(const SphGrid& grid, const WaveletKernels& k, std::span<const Complex> map, std::span<Complex> coeffs);
void wavelet_synthesis(const SphGrid& grid, const WaveletKernels& k, std::span<const Complex> coeffs, std::span<Complex> map);
void wavelet_analysis_adjoint(const SphGrid& grid, const WaveletKernels& k, std::span<const Complex> coeffs,
                              std::span<Complex> map);
void wavelet_synthesis_adjoint(const SphGrid& grid, const WaveletKernels& k, std::span<const Complex> map,
                               std::span<Complex> coeffs);

}  // namespace s2opt
