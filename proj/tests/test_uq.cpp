#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "dense_oracle.hpp"
#include "doctest.h"
#include "s2opt/error.hpp"
#include "s2opt/sht.hpp"
#include "s2opt/uq.hpp"
#include "test_util.hpp"

using namespace s2opt;
using namespace s2opt::testing;

namespace {

Space vec_space(std::size_t n) { return Space{SpaceKind::generic, 0, 0, n}; }

CredibleThreshold eps_only(double eps) { return {0.5, eps, 0.0, 1}; }

// Real masked-blur problem at bandlimit L with a Gaussian prior; x_map is
// the dense normal-equations solution.
struct GaussianInstance {
  GridPtr grid;
  Problem p;
  CVec x_map;
};

GaussianInstance gaussian_instance(int L, std::uint64_t seed) {
  GaussianInstance g;
  g.grid = make_grid(L);
  const Mask mask = random_mask(*g.grid, 0.5, seed);
  g.p.domain = Domain::real;
  g.p.phi = phi_masked_blur(g.grid, mask, 0.3);
  const CVec truth = sht_inverse(random_real_field_coeffs(L, seed + 1), g.grid).values;
  g.p.y = g.p.phi.apply(truth);
  g.p.sigma = 0.1 * norm2(g.p.y) / std::sqrt(static_cast<double>(g.p.y.size()));
  const auto n = random_real_vector(g.p.y.size(), seed + 2);
  for (std::size_t i = 0; i < g.p.y.size(); ++i) g.p.y[i] += g.p.sigma * n[i];
  g.p.reg = Regularizer::l2_squared({}, g.grid->size());
  g.p.lambda = 0.5;
  g.x_map = wiener_solution(g.p.phi, g.p.y, g.p.sigma, g.p.lambda);
  for (auto& v : g.x_map) v = v.real();
  return g;
}

// Masked-blur problem with a wavelet-analysis l1 prior.
struct LassoInstance {
  GridPtr grid;
  Problem p;
  CVec x_map;
};

LassoInstance lasso_instance(int L, std::uint64_t seed) {
  LassoInstance s;
  s.grid = make_grid(L);
  auto k = std::make_shared<const WaveletKernels>(build_kernels({L, 2.0, 0, 1}));
  const Mask mask = random_mask(*s.grid, 0.5, seed);
  s.p.domain = Domain::real;
  s.p.phi = phi_masked_blur(s.grid, mask, 0.3);
  s.x_map = sht_inverse(random_real_field_coeffs(L, seed + 1), s.grid).values;
  s.p.y = s.p.phi.apply(s.x_map);
  s.p.sigma = 0.2 * norm2(s.p.y) / std::sqrt(static_cast<double>(s.p.y.size()));
  s.p.reg = Regularizer::analysis_l1(wavelet_analysis_op(s.grid, k), wavelet_area_weights(*s.grid, *k, 1.0));
  s.p.lambda = 1.0;
  return s;
}

Region ring_block(const SphGrid& g, int ring, int p0, int count) {
  Region r;
  for (int p = p0; p < p0 + count; ++p) r.pixels.push_back(g.index(ring, p));
  return r;
}

}  // namespace

TEST_CASE("credible threshold closed form") {
  const auto t = hpd_threshold(0.0, 1, 0.3);
  CHECK(t.epsilon_prime == doctest::Approx(std::sqrt(16.0 * std::log(10.0)) + 1.0).epsilon(1e-15));
  double prev = std::numeric_limits<double>::infinity();
  for (double a : {0.01, 0.05, 0.1, 0.32, 0.5, 0.9}) {
    const auto ta = hpd_threshold(12.5, 300, a);
    CHECK(ta.epsilon_prime < prev);
    CHECK(ta.epsilon_prime > ta.h_map);
    prev = ta.epsilon_prime;
  }
  for (double bad : {0.0, 1.0, -0.2, 1.5}) {
    try {
      hpd_threshold(0.0, 1, bad);
      FAIL("expected invalid-alpha");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invalid_alpha);
    }
  }
  CHECK_THROWS_AS(hpd_threshold(0.0, 0, 0.1), Error);
}

TEST_CASE("two-dimensional Gaussian HPD region is contained in the approximate region") {
  // h(x) = x1^2 / (2 s1^2) + x2^2 / (2 s2^2). The posterior mass of
  // {h <= e} is found by polar quadrature in whitened coordinates and the
  // exact threshold by bisection on that mass.
  const double s1 = 0.7, s2 = 2.3;
  auto mass_below = [](double e) {
    // In whitened coordinates h = r^2 / 2; midpoint rule in r.
    const int n = 20000;
    const double rmax = std::sqrt(2.0 * e);
    double m = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = (i + 0.5) * rmax / n;
      m += r * std::exp(-0.5 * r * r) * rmax / n;
    }
    return m;
  };
  for (double alpha : {0.32, 0.05, 0.01}) {
    double lo = 0.0, hi = 100.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mass_below(mid) < 1.0 - alpha ? lo : hi) = mid;
    }
    const double exact = 0.5 * (lo + hi);
    const auto t = hpd_threshold(0.0, 2, alpha);
    CHECK(exact < t.epsilon_prime);
    CHECK(mass_below(t.epsilon_prime) >= 1.0 - alpha);
    // Containment along both axes of the original coordinates.
    for (double s : {s1, s2}) CHECK(std::sqrt(2.0 * exact) * s < std::sqrt(2.0 * t.epsilon_prime) * s);
  }
}

TEST_CASE("hypothesis test verdicts") {
  auto g = gaussian_instance(8, 11);
  const double h_map = posterior_potential(g.p, g.x_map);
  const auto t = hpd_threshold(h_map, g.p.real_dimension(), 0.01);
  CHECK(hypothesis_test(g.p, g.x_map, t) == Verdict::indeterminate);
  const CredibleThreshold below{0.01, h_map - 1.0, h_map, t.N};
  CHECK(hypothesis_test(g.p, g.x_map, below) == Verdict::significant);
}

TEST_CASE("feature removal verdict flips once with source amplitude") {
  // Identity observation of a compact source in noise; the surrogate fills
  // the source cap with the surrounding annulus mean.
  const int L = 16;
  const auto grid = make_grid(L);
  const double theta0 = 0.5 * std::numbers::pi, phi0 = 1.0, radius = 0.35;
  const auto caps = make_cap_partition(*grid, {{theta0, phi0}}, radius);
  const Region background = annulus(*grid, theta0, phi0, radius, 2.0 * radius);
  const auto noise = random_real_vector(grid->size(), 5);
  std::vector<Verdict> verdicts;
  for (double amp : {0.0, 0.05, 0.2, 1.0, 5.0, 20.0}) {
    Problem p;
    p.domain = Domain::real;
    p.phi = identity_op(Space::pixel(*grid, 0));
    p.sigma = 0.1;
    p.y.resize(grid->size());
    for (std::size_t i = 0; i < p.y.size(); ++i) p.y[i] = p.sigma * noise[i];
    for (auto i : caps.regions[0].pixels) p.y[i] += amp;
    p.reg = Regularizer::l2_squared({}, grid->size());
    p.lambda = 1.0;
    CVec x_map(p.y.size());
    const double shrink = 1.0 / (1.0 + 2.0 * p.lambda * p.sigma * p.sigma);
    for (std::size_t i = 0; i < x_map.size(); ++i) x_map[i] = shrink * p.y[i];
    const auto t = hpd_threshold(posterior_potential(p, x_map), p.real_dimension(), 0.01);
    verdicts.push_back(hypothesis_test(p, feature_removal_surrogate(x_map, caps.regions[0], background), t));
  }
  CHECK(verdicts.front() == Verdict::indeterminate);
  CHECK(verdicts.back() == Verdict::significant);
  CHECK(std::is_sorted(verdicts.begin(), verdicts.end(),
                       [](Verdict a, Verdict b) { return a == Verdict::indeterminate && b == Verdict::significant; }));
}

TEST_CASE("rectangular partitions") {
  const auto g = make_grid(8);
  const auto whole = make_rect_partition(*g, 1, 1);
  REQUIRE(whole.regions.size() == 1);
  CHECK(whole.regions[0].pixels.size() == g->size());

  const auto pix = make_rect_partition(*g, g->n_theta(), g->n_phi());
  CHECK(pix.regions.size() == g->size());
  for (const auto& r : pix.regions) CHECK(r.pixels.size() == 1);

  const auto odd = make_rect_partition(*g, 3, 4);  // 8 rings, 15 columns
  CHECK(odd.regions.size() == 12);
  std::set<std::size_t> seen;
  std::size_t total = 0;
  for (const auto& r : odd.regions) {
    total += r.pixels.size();
    seen.insert(r.pixels.begin(), r.pixels.end());
  }
  CHECK(total == g->size());
  CHECK(seen.size() == g->size());
  CHECK(odd.regions.back().pixels.size() == 4u * 6u);  // remainders absorbed

  try {
    make_rect_partition(*g, 0, 2);
    FAIL("expected invalid-parameter");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_parameter);
  }
}

TEST_CASE("cap partitions") {
  const auto g = make_grid(64);
  const double r = 0.2;
  const double exact = 2.0 * std::numbers::pi * (1.0 - std::cos(r));
  const std::vector<std::pair<double, double>> centres{{0.5, 0.3}, {1.2, 2.0}, {1.57, 4.0}, {2.4, 1.1}};
  const auto caps = make_cap_partition(*g, centres, r);
  double amin = 1e9, amax = 0.0;
  for (const auto& reg : caps.regions) {
    const double a = region_area(*g, reg);
    CHECK(std::abs(a - exact) < 0.05 * exact);
    amin = std::min(amin, a);
    amax = std::max(amax, a);
  }
  CHECK(amax - amin < 0.05 * amin);

  const auto singles = make_cap_partition(*g, {{0.7, 0.7}, {2.0, 3.0}}, 0.0);
  for (const auto& reg : singles.regions) CHECK(reg.pixels.size() == 1);
  CHECK(singles.regions[0].pixels[0] == g->nearest_pixel(0.7, 0.7));

  const auto anti = make_cap_partition(*g, {{0.9, 1.0}, {std::numbers::pi - 0.9, 1.0 + std::numbers::pi}}, 0.3);
  CHECK(anti.regions.size() == 2);

  try {
    make_cap_partition(*g, {{1.0, 1.0}, {1.1, 1.0}}, 0.2);
    FAIL("expected overlap-error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::overlap_error);
  }
}

TEST_CASE("level-set bisection on scalar toys") {
  auto sq = [](double x) { return x * x; };
  BisectionOptions o;
  const auto iv = bisect_level_set(sq, 4.0, 0.3, 1.0, o);
  CHECK(std::abs(iv.lower + 2.0) < 1e-6);
  CHECK(std::abs(iv.upper - 2.0) < 1e-6);
  CHECK(sq(iv.lower) <= 4.0);
  CHECK(sq(iv.upper) <= 4.0);
  CHECK(4.0 - sq(iv.upper) <= 1e-9 * 4.0);
  CHECK(iv.evaluations >= std::log2(iv.length() / 1e-6));

  // Infeasible start: the minimum is found first.
  const auto shifted = bisect_level_set([](double x) { return (x - 7.0) * (x - 7.0); }, 1.0, 0.0, 1.0, o);
  CHECK(std::abs(shifted.lower - 6.0) < 1e-6);
  CHECK(std::abs(shifted.upper - 8.0) < 1e-6);

  try {
    bisect_level_set([](double x) { return x < 0.0 ? x * x : 0.0; }, 1.0, 0.0, 1.0, o);
    FAIL("expected unbounded-interval");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unbounded_interval);
    CHECK(std::string(e.what()).find("above") != std::string::npos);
  }
  try {
    bisect_level_set([](double x) { return x * x + 5.0; }, 4.0, 0.0, 1.0, o);
    FAIL("expected empty-interval");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::empty_interval);
  }
}

TEST_CASE("analytic Gaussian interval examples") {
  LinearizedRegion r;
  r.a = {0.0};
  r.b = {1.0};
  auto iv = lci_gaussian_analytic(r, eps_only(4.0));
  CHECK(iv.lower == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(iv.upper == doctest::Approx(2.0).epsilon(1e-14));

  r.a = {1.0};
  iv = lci_gaussian_analytic(r, eps_only(4.0));
  CHECK(iv.lower == doctest::Approx(-3.0).epsilon(1e-14));
  CHECK(iv.upper == doctest::Approx(1.0).epsilon(1e-14));

  r.b = {0.0};
  r.c = {2.0};
  r.d = {0.0};
  try {
    lci_gaussian_analytic(r, eps_only(4.0));
    FAIL("expected unbounded-interval");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unbounded_interval);
  }

  r.b = {1.0};
  try {
    lci_gaussian_analytic(r, eps_only(-1.0));
    FAIL("expected empty-interval");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::empty_interval);
  }
}

TEST_CASE("precompute trivial cases") {
  const std::size_t n = 6;
  Problem p;
  p.phi = identity_op(vec_space(n));
  p.y = {1.0, -2.0, 3.0, 0.5, 0.0, 4.0};
  p.reg = Regularizer::l2_squared({}, n);
  p.lambda = 1.0;
  const CVec zero(n);
  Region all;
  for (std::size_t i = 0; i < n; ++i) all.pixels.push_back(i);
  auto r = lci_precompute(p, zero, all);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(r.a[i] == -p.y[i]);
    CHECK(r.c[i] == Complex{});
  }

  const CVec x{0.3, 0.1, -0.2, 0.7, 0.9, 1.1};
  r = lci_precompute(p, x, Region{{3}});
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(r.b[i] == Complex(i == 3 ? 1.0 : 0.0));
    CHECK(r.d[i] == Complex(i == 3 ? 1.0 : 0.0));
  }

  try {
    lci_precompute(p, x, Region{});
    FAIL("expected invalid-region");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_region);
  }
  try {
    lci_bisection(p, x, Region{}, eps_only(10.0));
    FAIL("expected invalid-region");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_region);
  }
  CHECK_THROWS_AS(lci_precompute(p, CVec(n + 1), Region{{0}}), Error);
}

TEST_CASE("linearized objective reproduces the full objective") {
  auto g = gaussian_instance(8, 3);
  auto s = lasso_instance(8, 4);
  const Region region = ring_block(*g.grid, 3, 2, 5);
  for (const auto* pr : {&g.p, &s.p}) {
    const CVec& x = pr == &g.p ? g.x_map : s.x_map;
    const auto r = lci_precompute(*pr, x, region);
    for (double xi : {-3.0, -0.4, 0.0, 0.25, 1.7, 12.0}) {
      const double full = posterior_potential(*pr, surrogate(x, region, xi));
      CHECK(std::abs(r.evaluate(xi) - full) <= 1e-10 * full);
    }
  }
}

TEST_CASE("precompute applies each operator twice") {
  auto s = lasso_instance(8, 5);
  const Region region = ring_block(*s.grid, 4, 0, 3);
  CVec probe(s.x_map.size(), 1.0);
  reset_linop_evaluations();
  s.p.phi.apply(probe);
  const auto phi_cost = linop_evaluations();
  reset_linop_evaluations();
  s.p.reg.transform()->apply(probe);
  const auto k_cost = linop_evaluations();
  reset_linop_evaluations();
  const auto r = lci_precompute(s.p, s.x_map, region);
  CHECK(linop_evaluations() == 2 * phi_cost + 2 * k_cost);

  const auto t = hpd_threshold(posterior_potential(s.p, s.x_map), s.p.real_dimension(), 0.01);
  reset_linop_evaluations();
  lci_lasso(r, t, true);
  CHECK(linop_evaluations() == 0);
}

TEST_CASE("analytic Gaussian intervals match full bisection") {
  auto g = gaussian_instance(8, 21);
  const double h_map = posterior_potential(g.p, g.x_map);
  const auto t = hpd_threshold(h_map, g.p.real_dimension(), 0.01);
  const auto part = make_rect_partition(*g.grid, 4, 5);
  for (std::size_t k = 0; k < part.regions.size(); k += 3) {
    const auto& region = part.regions[k];
    const auto r = lci_precompute(g.p, g.x_map, region);
    reset_linop_evaluations();
    const auto ana = lci_gaussian_analytic(r, t);
    CHECK(linop_evaluations() == 0);
    CHECK(ana.evaluations == 0);

    BisectionOptions o;
    const auto bis = lci_bisection(g.p, g.x_map, region, t, o);
    CHECK(std::abs(ana.lower - bis.lower) < 1e-6);
    CHECK(std::abs(ana.upper - bis.upper) < 1e-6);

    const double tol = 1e-6 * r.range;
    CHECK(bis.evaluations >= std::log2(bis.length() / tol));
    for (double xi : {bis.lower, bis.upper}) {
      const double h = posterior_potential(g.p, surrogate(g.x_map, region, xi));
      CHECK(h <= t.epsilon_prime);
      CHECK(h >= t.epsilon_prime - 1e-9 * t.epsilon_prime);
    }
    CHECK(posterior_potential(g.p, surrogate(g.x_map, region, bis.lower - 10 * tol)) > t.epsilon_prime);
    CHECK(posterior_potential(g.p, surrogate(g.x_map, region, bis.upper + 10 * tol)) > t.epsilon_prime);
  }
}

TEST_CASE("lasso intervals") {
  SUBCASE("region invisible to the prior reduces to the data quadratic") {
    LinearizedRegion r;
    r.prior = PriorForm::l1;
    r.a = {1.0};
    r.b = {1.0};
    r.c = {0.5, -0.5};
    r.d = {0.0, 0.0};
    // (1 + xi)^2 + 1 <= 5
    const auto iv = lci_lasso(r, eps_only(5.0), false);
    CHECK(iv.lower == doctest::Approx(-3.0).epsilon(1e-14));
    CHECK(iv.upper == doctest::Approx(1.0).epsilon(1e-14));
    const auto ref = lci_lasso(r, eps_only(5.0), true);
    CHECK(std::abs(ref.lower + 3.0) < 1e-8);
    CHECK(std::abs(ref.upper - 1.0) < 1e-8);
  }
  SUBCASE("disjoint supports: analytic equals refined") {
    LinearizedRegion r;
    r.prior = PriorForm::l1;
    r.a = {0.3, -1.0, 0.2};
    r.b = {1.0, 0.5, 0.0};
    r.c = {1.5, 0.0, -0.7, 0.0};
    r.d = {0.0, 2.0, 0.0, -1.0};
    r.prior_w = {0.8, 0.8, 0.8, 0.8};
    const auto ana = lci_lasso(r, eps_only(9.0), false);
    const auto ref = lci_lasso(r, eps_only(9.0), true);
    CHECK(std::abs(ana.lower - ref.lower) < 1e-8);
    CHECK(std::abs(ana.upper - ref.upper) < 1e-8);
    CHECK(r.evaluate(ana.upper) == doctest::Approx(9.0).epsilon(1e-12));
    CHECK(r.evaluate(ana.lower) == doctest::Approx(9.0).epsilon(1e-12));
  }
  SUBCASE("overlapping supports on a wavelet prior") {
    auto s = lasso_instance(8, 6);
    const auto t = hpd_threshold(posterior_potential(s.p, s.x_map), s.p.real_dimension(), 0.05);
    const double tol_h = 1e-9 * t.epsilon_prime;
    for (int ring : {1, 4, 6}) {
      const Region region = ring_block(*s.grid, ring, 3, 4);
      const auto r = lci_precompute(s.p, s.x_map, region);
      const auto ana = lci_lasso(r, t, false);
      const auto ref = lci_lasso(r, t, true);
      const double tol = 1e-6 * r.range;
      CHECK(ref.lower <= ana.lower + 1e-12);
      CHECK(ref.upper >= ana.upper - 1e-12);
      CHECK(ref.lower >= r.centre - 1e3 * r.range);
      CHECK(ref.upper <= r.centre + 1e3 * r.range);
      for (double xi : {ref.lower, ref.upper}) {
        const double h = r.evaluate(xi);
        CHECK(h <= t.epsilon_prime);
        CHECK(h >= t.epsilon_prime - tol_h);
      }
      CHECK(r.evaluate(ref.lower - 10 * tol) > t.epsilon_prime);
      CHECK(r.evaluate(ref.upper + 10 * tol) > t.epsilon_prime);
      const auto bis = lci_bisection(s.p, s.x_map, region, t);
      CHECK(std::abs(bis.lower - ref.lower) < 10 * tol);
      CHECK(std::abs(bis.upper - ref.upper) < 10 * tol);
    }
  }
}

TEST_CASE("interval lengths dilute as the dimension grows") {
  // Identity observation with a Gaussian prior; a four-pixel region on the
  // equator keeps its size while the grid refines.
  std::vector<double> lengths;
  for (int L : {8, 16, 32}) {
    const auto grid = make_grid(L);
    Problem p;
    p.domain = Domain::real;
    p.phi = identity_op(Space::pixel(*grid, 0));
    p.sigma = 0.2;
    p.y = random_real_vector(grid->size(), 77);
    for (auto& v : p.y) v *= p.sigma;
    p.reg = Regularizer::l2_squared({}, grid->size());
    p.lambda = 1.0;
    CVec x_map(p.y.size());
    for (std::size_t i = 0; i < x_map.size(); ++i) x_map[i] = p.y[i] / (1.0 + 2.0 * p.lambda * p.sigma * p.sigma);
    const auto t = hpd_threshold(posterior_potential(p, x_map), p.real_dimension(), 0.05);
    const auto r = lci_precompute(p, x_map, ring_block(*grid, grid->n_theta() / 2, 0, 4));
    lengths.push_back(lci_gaussian_analytic(r, t).length());
  }
  CHECK(lengths[0] <= lengths[1]);
  CHECK(lengths[1] <= lengths[2]);
}

TEST_CASE("interval maps over partitions") {
  auto g = gaussian_instance(8, 31);
  const auto t = hpd_threshold(posterior_potential(g.p, g.x_map), g.p.real_dimension(), 0.05);
  const auto part = make_rect_partition(*g.grid, 4, 5);
  const auto ana = compute_lci_map(g.p, g.x_map, part, t, LciMethod::gaussian_analytic);
  const auto bis = compute_lci_map(g.p, g.x_map, part, t, LciMethod::bisection);
  CHECK(std::string(to_string(ana.method)) == "gaussian-analytic");
  // Flattening a region can push h above the threshold for every xi; both
  // methods must then agree that the interval is empty.
  std::size_t ok = 0;
  for (std::size_t k = 0; k < part.regions.size(); ++k) {
    CHECK(ana.errors[k].empty() == bis.errors[k].empty());
    if (!ana.errors[k].empty()) {
      CHECK(ana.errors[k].find("empty-interval") == 0);
      continue;
    }
    ++ok;
    CHECK(ana.intervals[k].lower <= ana.intervals[k].upper);
    CHECK(std::abs(ana.intervals[k].lower - bis.intervals[k].lower) < 1e-6);
    CHECK(std::abs(ana.intervals[k].upper - bis.intervals[k].upper) < 1e-6);
  }
  CHECK(ok >= part.regions.size() / 2);
  const auto m = lci_length_map(g.grid, part, ana);
  for (std::size_t k = 0; k < part.regions.size(); ++k)
    for (auto i : part.regions[k].pixels) {
      if (ana.errors[k].empty()) CHECK(m.values[i].real() == ana.intervals[k].length());
      else CHECK(std::isnan(m.values[i].real()));
    }

  // Caps leave uncovered pixels as NaN; a lasso method on a Gaussian prior
  // is reported per region rather than thrown.
  const auto caps = make_cap_partition(*g.grid, {{1.0, 1.0}}, 0.3);
  const auto wrong = compute_lci_map(g.p, g.x_map, caps, t, LciMethod::lasso_analytic);
  CHECK(!wrong.errors[0].empty());
  const auto cm = lci_length_map(g.grid, caps, wrong);
  CHECK(std::all_of(cm.values.begin(), cm.values.end(), [](Complex v) { return std::isnan(v.real()); }));
}

TEST_CASE("imaginary component intervals keep the real part") {
  const std::size_t n = 4;
  Problem p;
  p.phi = identity_op(vec_space(n));
  p.y = {Complex(1.0, 2.0), Complex(0.0, -1.0), Complex(0.5, 0.5), Complex(-1.0, 0.0)};
  p.reg = Regularizer::l2_squared({}, n);
  p.lambda = 0.5;
  CVec x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = p.y[i] / 2.0;  // (A'A + 2 lambda) x = A'y
  const auto sur = surrogate(x, Region{{0}}, 3.0, SurrogateComponent::imag);
  CHECK(sur[0] == Complex(0.5, 3.0));
  const auto t = hpd_threshold(posterior_potential(p, x), p.real_dimension(), 0.1);
  CHECK(t.N == 2 * n);
  const auto r = lci_precompute(p, x, Region{{0}}, SurrogateComponent::imag);
  const auto ana = lci_gaussian_analytic(r, t);
  const auto bis = lci_bisection(p, x, Region{{0}}, t, {}, SurrogateComponent::imag);
  CHECK(std::abs(ana.lower - bis.lower) < 1e-6);
  CHECK(std::abs(ana.upper - bis.upper) < 1e-6);
  // Per-pixel objective in the imaginary part: (v - 2)^2/2 + v^2/2 with the
  // real part fixed; centred on 1.
  CHECK(0.5 * (ana.lower + ana.upper) == doctest::Approx(1.0).epsilon(1e-12));
}
