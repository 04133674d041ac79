#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "s2opt/error.hpp"
#include "s2opt/operators.hpp"
#include "s2opt/rotation.hpp"
#include "s2opt/sht.hpp"
#include "test_util.hpp"

using namespace s2opt;
using namespace s2opt::testing;

TEST_CASE("mask gather and scatter") {
  auto g = make_grid(8);
  const auto all = Mask::all(g->size());
  const SphMap x(g, 0, random_complex_vector(g->size(), 1));
  CHECK(mask_apply(x, all) == x.values);

  const auto m = random_mask(*g, 0.5, 3);
  CHECK(m.kept == g->size() - static_cast<std::size_t>(std::llround(0.5 * g->size())));
  const auto y = mask_apply(x, m);
  CHECK(y.size() == m.kept);
  const auto back = mask_adjoint(y, m, g, 0);
  for (std::size_t i = 0; i < g->size(); ++i) CHECK(back.values[i] == (m.keep[i] ? x.values[i] : Complex{}));
  // Projector: applying D^dag D twice equals once.
  CHECK(mask_adjoint(mask_apply(back, m), m, g, 0).values == back.values);

  CHECK(dot_test(mask_op(g, 0, m), 20) < 1e-10);
  CHECK_THROWS_AS(mask_adjoint(CVec(m.kept + 1), m, g, 0), Error);
  CHECK_THROWS_AS(mask_apply(SphMap(make_grid(4), 0), m), Error);
  CHECK_THROWS_AS(random_mask(*g, 1.5, 0), Error);
}

TEST_CASE("random masks are reproducible and band masks remove the equator") {
  auto g = make_grid(16);
  CHECK(random_mask(*g, 0.3, 9).keep == random_mask(*g, 0.3, 9).keep);
  CHECK(random_mask(*g, 0.3, 9).keep != random_mask(*g, 0.3, 10).keep);
  const auto band = band_mask(*g, 0.2);
  for (int t = 0; t < g->n_theta(); ++t) {
    const bool removed = std::abs(std::numbers::pi / 2 - g->thetas()[t]) < 0.2;
    CHECK(band.keep[g->index(t, 0)] == (removed ? 0 : 1));
  }
}

TEST_CASE("gaussian beam profile") {
  const auto b = gaussian_beam(0.1, 32);
  CHECK(b.b[0] == 1.0);
  const double sigma = 0.1 / std::sqrt(8.0 * std::log(2.0));
  CHECK(b.b[10] == doctest::Approx(std::exp(-110.0 * sigma * sigma / 2)).epsilon(1e-14));
  for (int l = 1; l < 32; ++l) CHECK(b.b[l] < b.b[l - 1]);
  CHECK_THROWS_AS(gaussian_beam(0.0, 8), Error);
  CHECK_THROWS_AS(gaussian_beam(-1.0, 8), Error);
}

TEST_CASE("lensing kernel") {
  const auto w = lensing_kernel(256);
  CHECK(w.b[0] == 0.0);
  CHECK(w.b[1] == 0.0);
  CHECK(w.b[2] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  for (int l = 3; l < 256; ++l) CHECK(w.b[l] > w.b[l - 1]);
  CHECK(w.b[255] < 1.0);
  CHECK(1.0 - w.b[255] < 1e-4);
}

TEST_CASE("harmonic scalings") {
  const int L = 16;
  const auto f = random_coeffs(L, 0, 2);
  HarmonicScaling ones{std::vector<double>(L, 1.0)};
  CHECK(harmonic_scale_apply(f, ones).coeffs == f.coeffs);

  const auto b = gaussian_beam(0.3, L);
  const auto root = scaling_sqrt(b);
  const auto twice = harmonic_scale_apply(harmonic_scale_apply(f, root), root);
  CHECK(relative_error(twice.coeffs, harmonic_scale_apply(f, b).coeffs) < 1e-12);
  CHECK(dot_test(harmonic_scaling_op(L, 0, b), 20) < 1e-12);
  CHECK_THROWS_AS(harmonic_scale_apply(random_coeffs(8, 0, 1), b), Error);

  // Diagonal in l: scalings commute with each other and with rotations.
  const auto w = lensing_kernel(L);
  const auto bw = harmonic_scale_apply(harmonic_scale_apply(f, b), w);
  const auto wb = harmonic_scale_apply(harmonic_scale_apply(f, w), b);
  CHECK(relative_error(bw.coeffs, wb.coeffs) < 1e-12);
  const EulerAngles rho{0.4, 1.1, -0.7};
  const auto rs = rotate(harmonic_scale_apply(f, b), rho);
  const auto sr = harmonic_scale_apply(rotate(f, rho), b);
  CHECK(relative_error(rs.coeffs, sr.coeffs) < 1e-10);
}

TEST_CASE("compose checks shapes and orders adjoints") {
  auto g = make_grid(8);
  const auto Y = sht_forward_op(g, 0);
  const auto Yi = sht_inverse_op(g, 0);
  const auto I = identity_op(Y.in());
  const auto x = random_complex_vector(g->size(), 4);
  CHECK(compose({I}).apply(x) == x);
  CHECK_THROWS_AS(compose({Y, Y}), Error);
  try {
    compose({Yi, Yi});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::composition_error);
  }
  CHECK_THROWS_AS(compose({sht_forward_op(g, 0), sht_inverse_op(g, 2)}), Error);
  CHECK_THROWS_AS(compose({}), Error);

  // compose({A, B}) = B A, and its adjoint is A^dag B^dag.
  const auto s = scale_op(Y.out(), 3.0);
  const auto c = compose({Y, s});
  const auto direct = scaled(Y.apply(x), 3.0);
  CHECK(relative_error(c.apply(x), direct) < 1e-14);
  CHECK(c.adjoint_op().adjoint_op().apply(x) == c.apply(x));
}

TEST_CASE("dot test flags a wrong adjoint") {
  auto g = make_grid(16);
  const auto Y = sht_forward_op(g, 0);
  const auto Yi = sht_inverse_op(g, 0);
  CHECK(dot_test(Y, 20) < 1e-10);
  CHECK(dot_test(Yi, 20) < 1e-10);
  const LinOp corrupted("Y with inverse as adjoint", Y.in(), Y.out(),
                        [&](std::span<const Complex> x, std::span<Complex> y) { Y.apply(x, y); },
                        [&](std::span<const Complex> y, std::span<Complex> x) { Yi.apply(y, x); });
  CHECK(dot_test(corrupted, 5) > 1e-3);
  const Space sp{SpaceKind::generic, 0, 0, 6};
  CHECK(dot_test(scale_op(sp, 0.0), 3) == 0.0);
}

TEST_CASE("measurement models pass the adjoint test") {
  auto g = make_grid(32);
  const auto m = random_mask(*g, 0.5, 1);
  CHECK(dot_test(phi_masked_blur(g, m, 0.2), 20) < 1e-10);
  CHECK(dot_test(phi_blur(g, 0.2), 20) < 1e-10);
  CHECK(dot_test(phi_whitened_sky(g, m, default_power_spectrum(32)), 20) < 1e-10);
  CHECK(dot_test(phi_lensing(g, m), 20) < 1e-10);
  auto k = std::make_shared<const WaveletKernels>(build_kernels({32, 2.0, 0, 2}));
  CHECK(dot_test(wavelet_analysis_op(g, k), 5) < 1e-10);
  CHECK(dot_test(wavelet_synthesis_op(g, k), 5) < 1e-10);
}

TEST_CASE("lensing operator output is a spin-2 map without l < 2 content") {
  auto g = make_grid(16);
  const auto phi = phi_lensing(g, Mask::all(g->size()));
  CHECK(phi.out().spin == 2);
  const auto x = sht_inverse(random_real_field_coeffs(16, 7), g);
  const SphMap shear(g, 2, phi.apply(x.values));
  const auto c = sht_forward(shear);
  for (int l = 0; l < 2; ++l) {
    for (int m = -l; m <= l; ++m) CHECK(std::abs(c.at(l, m)) < 1e-12);
  }
  CHECK(norm2(c.coeffs) > 1.0);
  // Round trip through the grid preserves the spin-2 coefficients.
  const auto expected = harmonic_scale_apply(sht_forward(x), lensing_kernel(16));
  CHECK(relative_error(c.coeffs, expected.coeffs) < 1e-10);
}

TEST_CASE("whitened sky variance matches the spectrum") {
  auto g = make_grid(16);
  const auto cl = default_power_spectrum(16);
  CHECK(field_variance(cl) == doctest::Approx(1.0).epsilon(1e-14));
  const auto phi = phi_whitened_sky(g, Mask::all(g->size()), cl);
  RVec var(g->size(), 0.0);
  const int R = 100;
  for (int r = 0; r < R; ++r) {
    const auto y = phi.apply(random_complex_vector(phi.in().size, 500 + r));
    for (std::size_t i = 0; i < y.size(); ++i) var[i] += std::norm(y[i]) / R;
  }
  double mean = 0.0;
  for (double v : var) mean += v / static_cast<double>(var.size());
  CHECK(std::abs(mean - field_variance(cl)) < 0.05 * field_variance(cl));
}

TEST_CASE("power spectrum tables") {
  const std::string path = "test_cl_table.txt";
  {
    std::ofstream out(path);
    out << "# l C_l\n0 1.0\n1 0.5\n2 0.25\n3 0.125\n";
  }
  const auto cl = read_power_spectrum(path, 3);
  CHECK(cl.b == std::vector<double>{1.0, 0.5, 0.25});
  CHECK_THROWS_AS(read_power_spectrum(path, 5), Error);
  {
    std::ofstream out(path);
    out << "0 1.0\n2 0.5\n";
  }
  CHECK_THROWS_AS(read_power_spectrum(path, 2), Error);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_power_spectrum("does-not-exist.txt", 2), Error);
}

TEST_CASE("evaluation counter") {
  auto g = make_grid(8);
  const auto phi = phi_blur(g, 0.3);
  reset_linop_evaluations();
  phi.apply(random_complex_vector(g->size(), 1));
  CHECK(linop_evaluations() == 4);
}
