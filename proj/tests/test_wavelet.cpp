#include <cmath>
#include <numbers>

#include "doctest.h"
#include "s2opt/error.hpp"
#include "s2opt/sht.hpp"
#include "s2opt/wavelet.hpp"
#include "test_util.hpp"

using namespace s2opt;
using namespace s2opt::testing;

namespace {

SphMap random_bandlimited_map(const GridPtr& g, std::uint64_t seed) {
  return sht_inverse(random_coeffs(g->L(), 0, seed), g);
}

WaveletCoeffs random_wavelet_coeffs(const GridPtr& g, const WaveletKernels& k, std::uint64_t seed) {
  return WaveletCoeffs::unflatten(random_complex_vector(k.n_slices() * g->size(), seed), g, k);
}

}  // namespace

TEST_CASE("build_kernels admissibility and edge kernels") {
  const auto k = build_kernels({32, 2.0, 0, 1});
  CHECK(check_admissibility(k) < 1e-10);
  CHECK(k.J == 5);
  CHECK(k.scaling_ell[0] == doctest::Approx(1.0));
  for (const auto& kappa : k.wav_ell) CHECK(kappa[0] == 0.0);

  CHECK_THROWS_AS(build_kernels({32, 1.0, 0, 1}), Error);
  try {
    build_kernels({32, 0.5, 0, 1});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_dilation);
  }
  CHECK_THROWS_AS(build_kernels({8, 2.0, 4, 1}), Error);
  CHECK(check_admissibility(build_kernels({1, 2.0, 0, 1})) < 1e-12);
  for (double lambda : {1.5, 2.0, 3.0}) {
    for (int N : {1, 2, 3, 4}) CHECK(check_admissibility(build_kernels({40, lambda, 1, N})) < 1e-10);
  }
}

TEST_CASE("tiling function limits") {
  CHECK(tiling_k(0.0, 2.0) == 1.0);
  CHECK(tiling_k(0.5, 2.0) == 1.0);
  CHECK(tiling_k(1.0, 2.0) == 0.0);
  double prev = 1.0;
  for (double t = 0.5; t <= 1.0; t += 0.01) {
    const double v = tiling_k(t, 2.0);
    CHECK(v <= prev + 1e-15);
    prev = v;
  }
}

TEST_CASE("removing one scale breaks admissibility") {
  auto k = build_kernels({32, 2.0, 0, 1});
  std::fill(k.wav_ell[3].begin(), k.wav_ell[3].end(), 0.0);
  CHECK(check_admissibility(k) > 0.1);
}

TEST_CASE("directional weights are normalized over orientations") {
  const auto k = build_kernels({16, 2.0, 0, 3});
  REQUIRE(k.modes == std::vector<int>{-2, 0, 2});
  for (int l = 1; l < 16; ++l) {
    double energy = 0.0;
    for (const auto& s : k.directionality[l]) energy += std::norm(s);
    CHECK(std::abs(energy - 1.0) < 1e-10);
    // Parseval over the sampled orientations gamma_k = k pi / N.
    double sampled = 0.0;
    for (int d = 0; d < 3; ++d) {
      Complex resp = 0.0;
      for (std::size_t i = 0; i < k.modes.size(); ++i) {
        resp += k.directionality[l][i] * std::polar(1.0, k.modes[i] * d * std::numbers::pi / 3);
      }
      sampled += std::norm(resp);
    }
    CHECK(std::abs(sampled / 3 - 1.0) < 1e-10);
  }
}

TEST_CASE("analysis of zero and of a single-scale mode") {
  auto g = make_grid(32);
  const auto k = build_kernels({32, 2.0, 0, 1});
  const auto zero = wavelet_analysis(SphMap(g, 0), k);
  for (const auto& v : zero.flatten()) CHECK(v == Complex{});

  // l = 8 = 2^3 lies only in the support of scale j = 3.
  HarmonicCoeffs c(32, 0);
  c.at(8, 3) = 1.0;
  c.at(8, -2) = 0.5;
  const auto w = wavelet_analysis(sht_inverse(c, g), k);
  CHECK(max_abs(w.scaling.values) < 1e-12);
  for (int js = 0; js < k.n_scales(); ++js) {
    const double m = max_abs(w.scales[js].values);
    if (js == 3) {
      CHECK(m > 0.1);
    } else {
      CHECK(m < 1e-12);
    }
  }
}

TEST_CASE("exact synthesis for N = 1, 2, 3") {
  auto g = make_grid(32);
  for (int N : {1, 2, 3}) {
    const auto k = build_kernels({32, 2.0, 0, N});
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto f = random_bandlimited_map(g, seed);
      const auto back = wavelet_synthesis(wavelet_analysis(f, k), k);
      CHECK(relative_error(back.values, f.values) < 1e-8);
    }
  }
  const auto k = build_kernels({32, 2.0, 0, 1});
  for (const auto& v : wavelet_synthesis(WaveletCoeffs::zeros(g, k), k).values) CHECK(v == Complex{});
}

TEST_CASE("scaling band alone reproduces a low-degree map") {
  auto g = make_grid(32);
  const auto k = build_kernels({32, 2.0, 2, 1});
  HarmonicCoeffs c(32, 0);
  c.at(0, 0) = 1.0;
  c.at(1, -1) = 0.3;
  c.at(2, 2) = -0.7;
  const auto f = sht_inverse(c, g);
  auto w = wavelet_analysis(f, k);
  for (auto& s : w.scales) std::fill(s.values.begin(), s.values.end(), Complex{});
  CHECK(relative_error(wavelet_synthesis(w, k).values, f.values) < 1e-8);
}

TEST_CASE("wavelet adjoint dot tests") {
  auto g = make_grid(16);
  for (int N : {1, 3}) {
    const auto k = build_kernels({16, 2.0, 0, N});
    double worst_a = 0.0;
    double worst_s = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const SphMap x(g, 0, random_complex_vector(g->size(), seed));
      const auto w = random_wavelet_coeffs(g, k, 1000 + seed);
      const auto Ax = wavelet_analysis(x, k).flatten();
      const auto Aw = wavelet_analysis_adjoint(w, k);
      const auto wf = w.flatten();
      worst_a = std::max(worst_a, adjoint_residual(dot(Ax, wf), dot(x.values, Aw.values), norm2(Ax) * norm2(wf)));

      const auto Sw = wavelet_synthesis(w, k);
      const auto Sx = wavelet_synthesis_adjoint(x, k).flatten();
      worst_s = std::max(worst_s, adjoint_residual(dot(Sw.values, x.values), dot(wf, Sx), norm2(Sw.values) * norm2(x.values)));
    }
    CHECK(worst_a < 1e-10);
    CHECK(worst_s < 1e-10);
  }
  const auto k = build_kernels({16, 2.0, 0, 1});
  for (const auto& v : wavelet_analysis_adjoint(WaveletCoeffs::zeros(g, k), k).values) CHECK(v == Complex{});
  for (const auto& v : wavelet_synthesis_adjoint(SphMap(g, 0), k).flatten()) CHECK(v == Complex{});
}

TEST_CASE("overcomplete dictionary: analysis adjoint is not synthesis") {
  auto g = make_grid(16);
  const auto k = build_kernels({16, 2.0, 0, 1});
  const auto w = random_wavelet_coeffs(g, k, 5);
  CHECK(relative_error(wavelet_analysis_adjoint(w, k).values, wavelet_synthesis(w, k).values) > 1e-3);
}

TEST_CASE("Psi^dag Psi is self-adjoint positive semidefinite") {
  auto g = make_grid(12);
  const auto k = build_kernels({12, 2.0, 0, 2});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto u = random_wavelet_coeffs(g, k, seed);
    const auto v = random_wavelet_coeffs(g, k, 50 + seed);
    const auto gram = [&](const WaveletCoeffs& c) { return wavelet_synthesis_adjoint(wavelet_synthesis(c, k), k).flatten(); };
    const auto Gu = gram(u);
    const auto Gv = gram(v);
    CHECK(std::abs(dot(u.flatten(), Gv) - dot(Gu, v.flatten())) < 1e-10 * norm2(Gu) * norm2(v.flatten()));
    const Complex q = dot(u.flatten(), Gu);
    CHECK(q.real() >= -1e-12);
    CHECK(std::abs(q.imag()) < 1e-10 * std::abs(q));
  }
}

TEST_CASE("linearity and energy bookkeeping") {
  auto g = make_grid(24);
  const auto k = build_kernels({24, 2.0, 0, 1});
  const auto f = random_bandlimited_map(g, 1);
  const auto h = random_bandlimited_map(g, 2);
  const Complex a(0.3, -1.2), b(2.0, 0.5);
  SphMap comb(g, 0);
  for (std::size_t i = 0; i < comb.values.size(); ++i) comb.values[i] = a * f.values[i] + b * h.values[i];
  const auto lhs = wavelet_analysis(comb, k).flatten();
  const auto wf = wavelet_analysis(f, k).flatten();
  const auto wh = wavelet_analysis(h, k).flatten();
  CVec rhs(lhs.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = a * wf[i] + b * wh[i];
  CHECK(max_abs(subtract(lhs, rhs)) < 1e-12 * max_abs(rhs) * 10);

  // Per-degree energy of the input equals the summed energy of the bands.
  const auto flm = sht_forward(f);
  const auto w = wavelet_analysis(f, k);
  std::vector<double> band_energy(24, 0.0);
  const auto accumulate = [&](const SphMap& band) {
    const auto c = sht_forward(band);
    for (int l = 0; l < 24; ++l) {
      for (int m = -l; m <= l; ++m) band_energy[l] += std::norm(c.at(l, m));
    }
  };
  accumulate(w.scaling);
  for (const auto& s : w.scales) accumulate(s);
  for (int l = 0; l < 24; ++l) {
    double e = 0.0;
    for (int m = -l; m <= l; ++m) e += std::norm(flm.at(l, m));
    CHECK(std::abs(e - band_energy[l]) < 1e-8 * std::max(1.0, e));
  }
}

TEST_CASE("real signals give real directional coefficients") {
  auto g = make_grid(16);
  const auto smooth = sht_inverse(random_real_field_coeffs(16, 4), g);
  for (int N : {1, 2, 3}) {
    const auto k = build_kernels({16, 2.0, 0, N});
    const auto w = wavelet_analysis(smooth, k).flatten();
    double imag = 0.0;
    for (const auto& v : w) imag = std::max(imag, std::abs(v.imag()));
    CHECK(imag < 1e-10 * max_abs(w));
  }
}

TEST_CASE("wavelet shape errors") {
  auto g = make_grid(16);
  const auto k = build_kernels({12, 2.0, 0, 1});
  CHECK_THROWS_AS(wavelet_analysis(SphMap(g, 0), k), Error);
  const auto k16 = build_kernels({16, 2.0, 0, 1});
  CHECK_THROWS_AS(wavelet_analysis(SphMap(g, 2), k16), Error);
  auto w = WaveletCoeffs::zeros(g, k16);
  w.scales.pop_back();
  CHECK_THROWS_AS(wavelet_synthesis(w, k16), Error);
}
