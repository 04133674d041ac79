#include "s2opt/wavelet.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "s2opt/error.hpp"
#include "s2opt/sht.hpp"

namespace s2opt {
namespace {

double bump(double x) { return std::abs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0; }

double stretched_bump(double u, double lambda) {
  return bump(2.0 * lambda / (lambda - 1.0) * (u - 1.0 / lambda) - 1.0);
}

double integrate_bump(double from, double lambda) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate([lambda](double u) { return stretched_bump(u, lambda) / u; }, from, 1.0,
                                              15, 1e-14);
}

double sign_of(int n) { return (std::abs(n) % 2 == 0) ? 1.0 : -1.0; }

std::size_t npix(const SphGrid& g) { return g.size(); }

void check_buffers(const SphGrid& grid, const WaveletKernels& k, std::size_t map_size, std::size_t coeff_size) {
  require(grid.L() == k.L(), ErrorCode::dimension_error,
          "wavelet: grid bandlimit " + std::to_string(grid.L()) + " != kernel bandlimit " + std::to_string(k.L()));
  require(map_size == grid.size() && coeff_size == static_cast<std::size_t>(k.n_slices()) * grid.size(),
          ErrorCode::dimension_error, "wavelet: buffer sizes do not match grid and kernels");
}

double gamma_angle(int k, int N) { return k * std::numbers::pi / N; }

}  // namespace

int max_wavelet_scale(int L, double lambda) {
  if (L <= 2) return 0;
  // Guard against log rounding when L-1 is an exact power of lambda.
  int J = static_cast<int>(std::ceil(std::log(L - 1.0) / std::log(lambda) - 1e-12));
  while (std::pow(lambda, J) < L - 1.0) ++J;
  return std::max(J, 0);
}

double tiling_k(double t, double lambda) {
  if (t <= 1.0 / lambda) return 1.0;
  if (t >= 1.0) return 0.0;
  return integrate_bump(t, lambda) / integrate_bump(1.0 / lambda, lambda);
}

WaveletKernels build_kernels(const WaveletParams& params) {
  require(params.L >= 1, ErrorCode::invalid_bandlimit, "wavelet: bandlimit must be >= 1");
  require(params.lambda > 1.0, ErrorCode::invalid_dilation, "wavelet: dilation must exceed 1");
  require(params.N >= 1 && params.N <= params.L, ErrorCode::invalid_parameter, "wavelet: need 1 <= N <= L");
  require(params.J0 >= 0, ErrorCode::invalid_parameter, "wavelet: J0 must be >= 0");
  const int L = params.L;
  const int N = params.N;
  const double lambda = params.lambda;

  WaveletKernels k;
  k.params = params;
  k.J = max_wavelet_scale(L, lambda);
  require(k.J >= params.J0, ErrorCode::invalid_parameter,
          "wavelet: J0 = " + std::to_string(params.J0) + " exceeds the largest scale " + std::to_string(k.J));

  k.scaling_ell.resize(L);
  for (int l = 0; l < L; ++l) k.scaling_ell[l] = std::sqrt(tiling_k(l / std::pow(lambda, params.J0), lambda));
  for (int j = params.J0; j <= k.J; ++j) {
    std::vector<double> kappa(L);
    for (int l = 0; l < L; ++l) {
      const double diff = tiling_k(l / std::pow(lambda, j + 1), lambda) - tiling_k(l / std::pow(lambda, j), lambda);
      kappa[l] = std::sqrt(std::max(diff, 0.0));
    }
    k.wav_ell.push_back(std::move(kappa));
  }

  for (int n = -(N - 1); n <= N - 1; n += 2) k.modes.push_back(n);
  const Complex eta = (N % 2 == 1) ? Complex(1.0, 0.0) : Complex(0.0, 1.0);
  k.directionality.assign(L, std::vector<Complex>(k.modes.size(), Complex{}));
  for (int l = 0; l < L; ++l) {
    const int gamma = ((N + l) % 2 == 1) ? std::min(N - 1, l) : std::min(N - 1, l - 1);
    if (gamma < 0) continue;
    for (std::size_t i = 0; i < k.modes.size(); ++i) {
      const int n = k.modes[i];
      if (std::abs(n) > gamma) continue;
      const double binom = boost::math::binomial_coefficient<double>(gamma, (gamma - n) / 2);
      k.directionality[l][i] = eta * std::sqrt(binom / std::pow(2.0, gamma));
    }
  }
  return k;
}

double check_admissibility(const WaveletKernels& k) {
  double worst = 0.0;
  for (int l = 0; l < k.L(); ++l) {
    double dir = 0.0;
    for (const auto& s : k.directionality[l]) dir += std::norm(s);
    double total = k.scaling_ell[l] * k.scaling_ell[l];
    for (const auto& kappa : k.wav_ell) total += kappa[l] * kappa[l] * dir;
    worst = std::max(worst, std::abs(1.0 - total));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Flat-buffer transforms.

void wavelet_analysis(const SphGrid& grid, const WaveletKernels& k, std::span<const Complex> map,
                      std::span<Complex> coeffs) {
  check_buffers(grid, k, map.size(), coeffs.size());
  const int L = k.L();
  const int N = k.n_directions();
  const std::size_t np = npix(grid);
  CVec flm(HarmonicCoeffs::size_for(L));
  sht_analyze(grid, 0, map, true, flm);

  CVec work(flm.size());
  for (int l = 0; l < L; ++l) {
    for (int m = -l; m <= l; ++m) work[HarmonicCoeffs::index(l, m)] = k.scaling_ell[l] * flm[HarmonicCoeffs::index(l, m)];
  }
  sht_synthesize(grid, 0, work, coeffs.subspan(0, np));

  CVec mode_map(np);
  for (int js = 0; js < k.n_scales(); ++js) {
    const auto& kappa = k.wav_ell[js];
    for (int d = 0; d < N; ++d) std::fill_n(coeffs.begin() + (1 + js * N + d) * np, np, Complex{});
    for (std::size_t i = 0; i < k.modes.size(); ++i) {
      const int n = k.modes[i];
      std::fill(work.begin(), work.end(), Complex{});
      for (int l = std::abs(n); l < L; ++l) {
        const Complex w = sign_of(n) * kappa[l] * std::conj(k.directionality[l][i]);
        for (int m = -l; m <= l; ++m) work[HarmonicCoeffs::index(l, m)] = w * flm[HarmonicCoeffs::index(l, m)];
      }
      sht_synthesize(grid, -n, work, mode_map);
      for (int d = 0; d < N; ++d) {
        const Complex phase = std::polar(1.0, n * gamma_angle(d, N));
        axpy(phase, mode_map, coeffs.subspan((1 + js * N + d) * np, np));
      }
    }
  }
}

void wavelet_synthesis(const SphGrid& grid, const WaveletKernels& k, std::span<const Complex> coeffs,
                       std::span<Complex> map) {
  check_buffers(grid, k, map.size(), coeffs.size());
  const int L = k.L();
  const int N = k.n_directions();
  const std::size_t np = npix(grid);
  CVec flm(HarmonicCoeffs::size_for(L));
  CVec work(flm.size());

  sht_analyze(grid, 0, coeffs.subspan(0, np), true, work);
  for (int l = 0; l < L; ++l) {
    for (int m = -l; m <= l; ++m) flm[HarmonicCoeffs::index(l, m)] = k.scaling_ell[l] * work[HarmonicCoeffs::index(l, m)];
  }

  CVec mode_map(np);
  for (int js = 0; js < k.n_scales(); ++js) {
    const auto& kappa = k.wav_ell[js];
    for (std::size_t i = 0; i < k.modes.size(); ++i) {
      const int n = k.modes[i];
      std::fill(mode_map.begin(), mode_map.end(), Complex{});
      for (int d = 0; d < N; ++d) {
        const Complex phase = std::polar(1.0 / N, -n * gamma_angle(d, N));
        axpy(phase, coeffs.subspan((1 + js * N + d) * np, np), mode_map);
      }
      sht_analyze(grid, -n, mode_map, true, work);
      for (int l = std::abs(n); l < L; ++l) {
        const Complex w = sign_of(n) * kappa[l] * k.directionality[l][i];
        for (int m = -l; m <= l; ++m) flm[HarmonicCoeffs::index(l, m)] += w * work[HarmonicCoeffs::index(l, m)];
      }
    }
  }
  sht_synthesize(grid, 0, flm, map);
}

void wavelet_analysis_adjoint(const SphGrid& grid, const WaveletKernels& k, std::span<const Complex> coeffs,
                              std::span<Complex> map) {
  check_buffers(grid, k, map.size(), coeffs.size());
  const int L = k.L();
  const int N = k.n_directions();
  const std::size_t np = npix(grid);
  CVec flm(HarmonicCoeffs::size_for(L));
  CVec work(flm.size());

  sht_analyze(grid, 0, coeffs.subspan(0, np), false, work);
  for (int l = 0; l < L; ++l) {
    for (int m = -l; m <= l; ++m) flm[HarmonicCoeffs::index(l, m)] = k.scaling_ell[l] * work[HarmonicCoeffs::index(l, m)];
  }

  CVec mode_map(np);
  for (int js = 0; js < k.n_scales(); ++js) {
    const auto& kappa = k.wav_ell[js];
    for (std::size_t i = 0; i < k.modes.size(); ++i) {
      const int n = k.modes[i];
      std::fill(mode_map.begin(), mode_map.end(), Complex{});
      for (int d = 0; d < N; ++d) {
        const Complex phase = std::polar(1.0, -n * gamma_angle(d, N));
        axpy(phase, coeffs.subspan((1 + js * N + d) * np, np), mode_map);
      }
      sht_analyze(grid, -n, mode_map, false, work);
      for (int l = std::abs(n); l < L; ++l) {
        const Complex w = sign_of(n) * kappa[l] * k.directionality[l][i];
        for (int m = -l; m <= l; ++m) flm[HarmonicCoeffs::index(l, m)] += w * work[HarmonicCoeffs::index(l, m)];
      }
    }
  }
  // Y^dag = quadrature weights times Y^-1.
  sht_synthesize(grid, 0, flm, map);
  const auto& q = grid.quad_weights();
  for (int t = 0; t < grid.n_theta(); ++t) {
    for (int p = 0; p < grid.n_phi(); ++p) map[grid.index(t, p)] *= q[t];
  }
}

void wavelet_synthesis_adjoint(const SphGrid& grid, const WaveletKernels& k, std::span<const Complex> map,
                               std::span<Complex> coeffs) {
  check_buffers(grid, k, map.size(), coeffs.size());
  const int L = k.L();
  const int N = k.n_directions();
  const std::size_t np = npix(grid);
  const auto& q = grid.quad_weights();
  const auto weight_rings = [&](std::span<Complex> m) {
    for (int t = 0; t < grid.n_theta(); ++t) {
      for (int p = 0; p < grid.n_phi(); ++p) m[grid.index(t, p)] *= q[t];
    }
  };

  CVec glm(HarmonicCoeffs::size_for(L));
  sht_analyze(grid, 0, map, false, glm);

  CVec work(glm.size());
  for (int l = 0; l < L; ++l) {
    for (int m = -l; m <= l; ++m) work[HarmonicCoeffs::index(l, m)] = k.scaling_ell[l] * glm[HarmonicCoeffs::index(l, m)];
  }
  sht_synthesize(grid, 0, work, coeffs.subspan(0, np));
  weight_rings(coeffs.subspan(0, np));

  CVec mode_map(np);
  for (int js = 0; js < k.n_scales(); ++js) {
    const auto& kappa = k.wav_ell[js];
    for (int d = 0; d < N; ++d) std::fill_n(coeffs.begin() + (1 + js * N + d) * np, np, Complex{});
    for (std::size_t i = 0; i < k.modes.size(); ++i) {
      const int n = k.modes[i];
      std::fill(work.begin(), work.end(), Complex{});
      for (int l = std::abs(n); l < L; ++l) {
        const Complex w = sign_of(n) * kappa[l] * std::conj(k.directionality[l][i]);
        for (int m = -l; m <= l; ++m) work[HarmonicCoeffs::index(l, m)] = w * glm[HarmonicCoeffs::index(l, m)];
      }
      sht_synthesize(grid, -n, work, mode_map);
      weight_rings(mode_map);
      for (int d = 0; d < N; ++d) {
        const Complex phase = std::polar(1.0 / N, n * gamma_angle(d, N));
        axpy(phase, mode_map, coeffs.subspan((1 + js * N + d) * np, np));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Typed wrappers.

CVec WaveletCoeffs::flatten() const {
  CVec flat;
  flat.reserve(scaling.values.size() * (1 + scales.size()));
  flat.insert(flat.end(), scaling.values.begin(), scaling.values.end());
  for (const auto& s : scales) flat.insert(flat.end(), s.values.begin(), s.values.end());
  return flat;
}

WaveletCoeffs WaveletCoeffs::unflatten(std::span<const Complex> flat, const GridPtr& grid, const WaveletKernels& k) {
  const std::size_t np = grid->size();
  require(flat.size() == static_cast<std::size_t>(k.n_slices()) * np, ErrorCode::dimension_error,
          "WaveletCoeffs: flat size does not match kernels");
  WaveletCoeffs c;
  c.scaling = SphMap(grid, 0, CVec(flat.begin(), flat.begin() + np));
  for (int s = 1; s < k.n_slices(); ++s) {
    c.scales.emplace_back(grid, 0, CVec(flat.begin() + s * np, flat.begin() + (s + 1) * np));
  }
  return c;
}

WaveletCoeffs WaveletCoeffs::zeros(const GridPtr& grid, const WaveletKernels& k) {
  WaveletCoeffs c;
  c.scaling = SphMap(grid, 0);
  c.scales.assign(k.n_slices() - 1, SphMap(grid, 0));
  return c;
}

namespace {
void check_spin0(const SphMap& m) {
  require(m.spin == 0, ErrorCode::unsupported_spin, "wavelet: only spin-0 dictionaries are supported");
}
void check_coeff_shape(const WaveletCoeffs& c, const WaveletKernels& k) {
  require(c.scaling.grid != nullptr && static_cast<int>(c.scales.size()) + 1 == k.n_slices(),
          ErrorCode::dimension_error, "wavelet: coefficient set does not match kernels");
  for (const auto& s : c.scales) {
    require(s.grid == c.scaling.grid, ErrorCode::dimension_error, "wavelet: slices live on different grids");
  }
}
}  // namespace

WaveletCoeffs wavelet_analysis(const SphMap& map, const WaveletKernels& k) {
  check_spin0(map);
  CVec flat(static_cast<std::size_t>(k.n_slices()) * map.grid->size());
  wavelet_analysis(*map.grid, k, map.values, flat);
  return WaveletCoeffs::unflatten(flat, map.grid, k);
}

SphMap wavelet_synthesis(const WaveletCoeffs& coeffs, const WaveletKernels& k) {
  check_coeff_shape(coeffs, k);
  SphMap out(coeffs.scaling.grid, 0);
  wavelet_synthesis(*out.grid, k, coeffs.flatten(), out.values);
  return out;
}

SphMap wavelet_analysis_adjoint(const WaveletCoeffs& coeffs, const WaveletKernels& k) {
  check_coeff_shape(coeffs, k);
  SphMap out(coeffs.scaling.grid, 0);
  wavelet_analysis_adjoint(*out.grid, k, coeffs.flatten(), out.values);
  return out;
}

WaveletCoeffs wavelet_synthesis_adjoint(const SphMap& map, const WaveletKernels& k) {
  check_spin0(map);
  CVec flat(static_cast<std::size_t>(k.n_slices()) * map.grid->size());
  wavelet_synthesis_adjoint(*map.grid, k, map.values, flat);
  return WaveletCoeffs::unflatten(flat, map.grid, k);
}

}  // namespace s2opt
