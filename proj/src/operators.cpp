#include "s2opt/operators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "s2opt/error.hpp"
#include "s2opt/random.hpp"
#include "s2opt/sht.hpp"

namespace s2opt {

namespace {

std::atomic<std::uint64_t> g_evaluations{0};

const char* kind_name(SpaceKind k) {
  switch (k) {
    case SpaceKind::pixel: return "pixel";
    case SpaceKind::harmonic: return "harmonic";
    case SpaceKind::wavelet: return "wavelet";
    case SpaceKind::measurement: return "measurement";
    case SpaceKind::generic: return "generic";
  }
  return "?";
}

void check_size(std::size_t got, std::size_t want, const std::string& what) {
  require(got == want, ErrorCode::dimension_error,
          what + ": expected length " + std::to_string(want) + ", got " + std::to_string(got));
}

}  // namespace

std::string describe(const Space& s) {
  std::ostringstream os;
  os << kind_name(s.kind) << "(spin=" << s.spin << ", L=" << s.L << ", n=" << s.size << ")";
  return os.str();
}

std::uint64_t linop_evaluations() noexcept { return g_evaluations.load(std::memory_order_relaxed); }
void reset_linop_evaluations() noexcept { g_evaluations.store(0, std::memory_order_relaxed); }

LinOp::LinOp(std::string name, Space in, Space out, Kernel apply, Kernel adjoint)
    : name_(std::move(name)),
      in_(in),
      out_(out),
      apply_(std::make_shared<const Kernel>(std::move(apply))),
      adjoint_(std::make_shared<const Kernel>(std::move(adjoint))) {}

void LinOp::apply(std::span<const Complex> x, std::span<Complex> y) const {
  check_size(x.size(), in_.size, name_ + " apply input");
  check_size(y.size(), out_.size, name_ + " apply output");
  g_evaluations.fetch_add(1, std::memory_order_relaxed);
  (*apply_)(x, y);
}

void LinOp::adjoint(std::span<const Complex> y, std::span<Complex> x) const {
  check_size(y.size(), out_.size, name_ + " adjoint input");
  check_size(x.size(), in_.size, name_ + " adjoint output");
  g_evaluations.fetch_add(1, std::memory_order_relaxed);
  (*adjoint_)(y, x);
}

CVec LinOp::apply(std::span<const Complex> x) const {
  CVec y(out_.size);
  apply(x, y);
  return y;
}

CVec LinOp::adjoint(std::span<const Complex> y) const {
  CVec x(in_.size);
  adjoint(y, x);
  return x;
}

LinOp LinOp::adjoint_op() const {
  LinOp r;
  r.name_ = name_ + "^dag";
  r.in_ = out_;
  r.out_ = in_;
  r.apply_ = adjoint_;
  r.adjoint_ = apply_;
  return r;
}

LinOp identity_op(const Space& s) {
  auto copy = [](std::span<const Complex> x, std::span<Complex> y) { std::copy(x.begin(), x.end(), y.begin()); };
  return LinOp("I", s, s, copy, copy);
}

LinOp scale_op(const Space& s, double a) {
  auto mul = [a](std::span<const Complex> x, std::span<Complex> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i];
  };
  return LinOp("scale", s, s, mul, mul);
}

LinOp compose(const std::vector<LinOp>& pipeline) {
  require(!pipeline.empty(), ErrorCode::composition_error, "empty pipeline");
  std::string name = pipeline.back().name();
  for (std::size_t i = 1; i < pipeline.size(); ++i) {
    const auto& prev = pipeline[i - 1];
    const auto& next = pipeline[i];
    require(prev.out() == next.in(), ErrorCode::composition_error,
            prev.name() + " produces " + describe(prev.out()) + " but " + next.name() + " expects " +
                describe(next.in()));
  }
  for (std::size_t i = pipeline.size() - 1; i-- > 0;) name += " " + pipeline[i].name();
  if (pipeline.size() == 1) return pipeline.front();

  auto ops = std::make_shared<const std::vector<LinOp>>(pipeline);
  auto fwd = [ops](std::span<const Complex> x, std::span<Complex> y) {
    CVec cur(x.begin(), x.end());
    for (std::size_t i = 0; i + 1 < ops->size(); ++i) cur = (*ops)[i].apply(cur);
    ops->back().apply(cur, y);
  };
  auto adj = [ops](std::span<const Complex> y, std::span<Complex> x) {
    CVec cur(y.begin(), y.end());
    for (std::size_t i = ops->size(); i-- > 1;) cur = (*ops)[i].adjoint(cur);
    ops->front().adjoint(cur, x);
  };
  return LinOp(name, pipeline.front().in(), pipeline.back().out(), fwd, adj);
}

double dot_test(const LinOp& op, int n_seeds, std::uint64_t seed) {
  double worst = 0.0;
  for (int k = 0; k < n_seeds; ++k) {
    const std::uint64_t s = seed + 2 * static_cast<std::uint64_t>(k);
    const CVec x = random_complex_vector(op.in().size, s);
    const CVec y = random_complex_vector(op.out().size, s + 1);
    const CVec Ax = op.apply(x);
    const CVec Aty = op.adjoint(y);
    const double denom = norm2(Ax) * norm2(y);
    if (denom == 0.0) continue;
    worst = std::max(worst, std::abs(dot(Ax, y) - dot(x, Aty)) / denom);
  }
  return worst;
}

double operator_norm_squared(const LinOp& op, int max_iter, double rel_tol, std::uint64_t seed) {
  CVec v = random_complex_vector(op.in().size, seed);
  double n = norm2(v);
  if (n == 0.0) return 0.0;
  for (auto& c : v) c /= n;
  double est = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    CVec w = op.adjoint(op.apply(v));
    const double next = norm2(w);
    if (next == 0.0) return 0.0;
    for (auto& c : w) c /= next;
    v = std::move(w);
    const bool done = it > 0 && std::abs(next - est) <= rel_tol * next;
    est = next;
    if (done) break;
  }
  return est;
}

// ---------------------------------------------------------------- masks

Mask Mask::from_flags(std::vector<std::uint8_t> flags) {
  Mask m;
  m.kept = static_cast<std::size_t>(std::count_if(flags.begin(), flags.end(), [](auto f) { return f != 0; }));
  m.keep = std::move(flags);
  return m;
}

Mask Mask::all(std::size_t n) { return from_flags(std::vector<std::uint8_t>(n, 1)); }

Mask random_mask(const SphGrid& grid, double fraction_masked, std::uint64_t seed) {
  require(fraction_masked >= 0.0 && fraction_masked <= 1.0, ErrorCode::invalid_parameter,
          "mask fraction must lie in [0, 1]");
  const std::size_t n = grid.size();
  const auto removed = static_cast<std::size_t>(std::llround(fraction_masked * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng(seed, 0x6d61736bULL);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.next_u64() % i;
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::uint8_t> flags(n, 1);
  for (std::size_t i = 0; i < removed; ++i) flags[order[i]] = 0;
  return Mask::from_flags(std::move(flags));
}

Mask band_mask(const SphGrid& grid, double half_width) {
  std::vector<std::uint8_t> flags(grid.size(), 1);
  for (int t = 0; t < grid.n_theta(); ++t) {
    const double lat = std::numbers::pi / 2 - grid.thetas()[t];
    if (std::abs(lat) < half_width) {
      for (int p = 0; p < grid.n_phi(); ++p) flags[grid.index(t, p)] = 0;
    }
  }
  return Mask::from_flags(std::move(flags));
}

namespace {

void mask_gather(const Mask& mask, std::span<const Complex> x, std::span<Complex> y) {
  std::size_t k = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mask.keep[i]) y[k++] = x[i];
  }
}

void mask_scatter(const Mask& mask, std::span<const Complex> y, std::span<Complex> x) {
  std::size_t k = 0;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = mask.keep[i] ? y[k++] : Complex{};
}

}  // namespace

CVec mask_apply(const SphMap& x, const Mask& mask) {
  check_size(x.values.size(), mask.size(), "mask_apply");
  CVec y(mask.kept);
  mask_gather(mask, x.values, y);
  return y;
}

SphMap mask_adjoint(std::span<const Complex> y, const Mask& mask, const GridPtr& grid, int spin) {
  check_size(mask.size(), grid->size(), "mask_adjoint grid");
  check_size(y.size(), mask.kept, "mask_adjoint");
  SphMap x(grid, spin);
  mask_scatter(mask, y, x.values);
  return x;
}

LinOp mask_op(const GridPtr& grid, int spin, const Mask& mask) {
  check_size(mask.size(), grid->size(), "mask_op");
  auto m = std::make_shared<const Mask>(mask);
  const Space out{SpaceKind::measurement, spin, grid->L(), mask.kept};
  return LinOp(
      "D", Space::pixel(*grid, spin), out,
      [m](std::span<const Complex> x, std::span<Complex> y) { mask_gather(*m, x, y); },
      [m](std::span<const Complex> y, std::span<Complex> x) { mask_scatter(*m, y, x); });
}

// ---------------------------------------------------- harmonic scalings

HarmonicScaling gaussian_beam(double fwhm, int L) {
  require(fwhm > 0.0 && std::isfinite(fwhm), ErrorCode::invalid_parameter, "beam FWHM must be positive");
  require(L >= 1, ErrorCode::invalid_bandlimit, "L must be >= 1");
  const double sigma = fwhm / std::sqrt(8.0 * std::log(2.0));
  HarmonicScaling s;
  s.b.resize(L);
  for (int l = 0; l < L; ++l) s.b[l] = std::exp(-0.5 * l * (l + 1.0) * sigma * sigma);
  return s;
}

HarmonicScaling lensing_kernel(int L) {
  require(L >= 1, ErrorCode::invalid_bandlimit, "L must be >= 1");
  HarmonicScaling s;
  s.b.assign(L, 0.0);
  for (int l = 2; l < L; ++l) {
    const double ld = l;
    s.b[l] = std::sqrt((ld + 2.0) * (ld - 1.0) / (ld * (ld + 1.0)));
  }
  return s;
}

HarmonicScaling scaling_sqrt(const HarmonicScaling& s) {
  HarmonicScaling r;
  r.b.resize(s.b.size());
  for (std::size_t l = 0; l < s.b.size(); ++l) {
    require(s.b[l] >= 0.0, ErrorCode::invalid_parameter, "sqrt of a negative multiplier");
    r.b[l] = std::sqrt(s.b[l]);
  }
  return r;
}

namespace {

void scale_coeffs(const std::vector<double>& b, std::span<const Complex> x, std::span<Complex> y) {
  const int L = static_cast<int>(b.size());
  for (int l = 0; l < L; ++l) {
    for (int m = -l; m <= l; ++m) {
      const auto i = HarmonicCoeffs::index(l, m);
      y[i] = b[l] * x[i];
    }
  }
}

}  // namespace

HarmonicCoeffs harmonic_scale_apply(const HarmonicCoeffs& f, const HarmonicScaling& s) {
  require(f.L == s.L(), ErrorCode::dimension_error, "scaling bandlimit differs from coefficients");
  HarmonicCoeffs r(f.L, f.spin);
  scale_coeffs(s.b, f.coeffs, r.coeffs);
  return r;
}

LinOp harmonic_scaling_op(int L, int spin, const HarmonicScaling& s, std::string name) {
  require(s.L() == L, ErrorCode::dimension_error, "scaling bandlimit differs from operator bandlimit");
  auto b = std::make_shared<const std::vector<double>>(s.b);
  auto k = [b](std::span<const Complex> x, std::span<Complex> y) { scale_coeffs(*b, x, y); };
  const Space h = Space::harmonic(L, spin);
  return LinOp(std::move(name), h, h, k, k);
}

// ----------------------------------------------------- power spectra

HarmonicScaling default_power_spectrum(int L) {
  require(L >= 1, ErrorCode::invalid_bandlimit, "L must be >= 1");
  HarmonicScaling cl;
  cl.b.resize(L);
  for (int l = 0; l < L; ++l) cl.b[l] = 1.0 / ((l + 1.0) * (l + 1.0));
  const double v = field_variance(cl);
  for (auto& c : cl.b) c /= v;
  return cl;
}

HarmonicScaling read_power_spectrum(const std::string& path, int L) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::config_error, "cannot open power spectrum " + path);
  HarmonicScaling cl;
  std::string line;
  int expected = 0;
  while (std::getline(in, line) && expected < L) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream row(line);
    int l = -1;
    double v = 0.0;
    require(static_cast<bool>(row >> l >> v), ErrorCode::format_error, "bad power spectrum row: " + line);
    require(l == expected, ErrorCode::format_error, "power spectrum rows must list l = 0, 1, 2, ... in order");
    require(v >= 0.0 && std::isfinite(v), ErrorCode::format_error, "power spectrum values must be >= 0");
    cl.b.push_back(v);
    ++expected;
  }
  require(expected == L, ErrorCode::format_error,
          "power spectrum has " + std::to_string(expected) + " rows, need " + std::to_string(L));
  return cl;
}

double field_variance(const HarmonicScaling& cl) {
  double v = 0.0;
  for (int l = 0; l < cl.L(); ++l) v += (2.0 * l + 1.0) * cl.b[l];
  return v / (4.0 * std::numbers::pi);
}

// ------------------------------------------------- transform operators

LinOp sht_forward_op(const GridPtr& grid, int spin) {
  check_spin(spin, grid->L());
  const SphGrid* g = grid.get();
  return LinOp(
      std::to_string(spin) + "Y", Space::pixel(*grid, spin), Space::harmonic(grid->L(), spin),
      [grid, g, spin](std::span<const Complex> x, std::span<Complex> c) { sht_analyze(*g, spin, x, true, c); },
      [grid, g, spin](std::span<const Complex> c, std::span<Complex> x) {
        sht_synthesize(*g, spin, c, x);
        for (int t = 0; t < g->n_theta(); ++t) {
          const double q = g->quad_weights()[t];
          for (int p = 0; p < g->n_phi(); ++p) x[g->index(t, p)] *= q;
        }
      });
}

LinOp sht_inverse_op(const GridPtr& grid, int spin) {
  check_spin(spin, grid->L());
  const SphGrid* g = grid.get();
  return LinOp(
      std::to_string(spin) + "Y^-1", Space::harmonic(grid->L(), spin), Space::pixel(*grid, spin),
      [grid, g, spin](std::span<const Complex> c, std::span<Complex> x) { sht_synthesize(*g, spin, c, x); },
      [grid, g, spin](std::span<const Complex> x, std::span<Complex> c) { sht_analyze(*g, spin, x, false, c); });
}

namespace {

Space wavelet_space(const SphGrid& g, const WaveletKernels& k) {
  return {SpaceKind::wavelet, 0, g.L(), static_cast<std::size_t>(k.n_slices()) * g.size()};
}

}  // namespace

LinOp wavelet_analysis_op(const GridPtr& grid, std::shared_ptr<const WaveletKernels> kernels) {
  const SphGrid* g = grid.get();
  return LinOp(
      "Psi^-1", Space::pixel(*grid, 0), wavelet_space(*grid, *kernels),
      [grid, g, kernels](std::span<const Complex> x, std::span<Complex> w) { wavelet_analysis(*g, *kernels, x, w); },
      [grid, g, kernels](std::span<const Complex> w, std::span<Complex> x) {
        wavelet_analysis_adjoint(*g, *kernels, w, x);
      });
}

LinOp wavelet_synthesis_op(const GridPtr& grid, std::shared_ptr<const WaveletKernels> kernels) {
  const SphGrid* g = grid.get();
  return LinOp(
      "Psi", wavelet_space(*grid, *kernels), Space::pixel(*grid, 0),
      [grid, g, kernels](std::span<const Complex> w, std::span<Complex> x) { wavelet_synthesis(*g, *kernels, w, x); },
      [grid, g, kernels](std::span<const Complex> x, std::span<Complex> w) {
        wavelet_synthesis_adjoint(*g, *kernels, x, w);
      });
}

// ------------------------------------------------ measurement models

LinOp phi_masked_blur(const GridPtr& grid, const Mask& mask, double fwhm) {
  const int L = grid->L();
  return compose({sht_forward_op(grid, 0), harmonic_scaling_op(L, 0, gaussian_beam(fwhm, L), "Theta"),
                  sht_inverse_op(grid, 0), mask_op(grid, 0, mask)});
}

LinOp phi_blur(const GridPtr& grid, double fwhm) {
  const int L = grid->L();
  return compose({sht_forward_op(grid, 0), harmonic_scaling_op(L, 0, gaussian_beam(fwhm, L), "Theta"),
                  sht_inverse_op(grid, 0)});
}

LinOp phi_whitened_sky(const GridPtr& grid, const Mask& mask, const HarmonicScaling& cl) {
  const int L = grid->L();
  return compose({harmonic_scaling_op(L, 0, scaling_sqrt(cl), "C^1/2"), sht_inverse_op(grid, 0),
                  mask_op(grid, 0, mask)});
}

LinOp lensing_op(int L) {
  require(L >= 3, ErrorCode::invalid_bandlimit, "lensing operator needs L >= 3");
  // Real kernel zero for l < 2, so the same scaling is its own adjoint.
  auto w = std::make_shared<const std::vector<double>>(lensing_kernel(L).b);
  auto k = [w](std::span<const Complex> x, std::span<Complex> y) { scale_coeffs(*w, x, y); };
  return LinOp("W", Space::harmonic(L, 0), Space::harmonic(L, 2), k, k);
}

LinOp phi_lensing(const GridPtr& grid, const Mask& mask) {
  const int L = grid->L();
  return compose({sht_forward_op(grid, 0), lensing_op(L), sht_inverse_op(grid, 2), mask_op(grid, 2, mask)});
}

}  // namespace s2opt
