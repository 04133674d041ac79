#include "s2opt/priors.hpp"

#include <algorithm>
#include <cmath>

#include "s2opt/error.hpp"

namespace s2opt {

RVec area_weights(const SphGrid& grid, double p) {
  require(p >= 1.0, ErrorCode::nonconvex_order, "norm order p must be >= 1");
  RVec w(grid.pixel_areas());
  for (auto& a : w) a = std::pow(a, 1.0 / p);
  return w;
}

RVec wavelet_area_weights(const SphGrid& grid, const WaveletKernels& kernels, double p) {
  const RVec one = area_weights(grid, p);
  RVec w;
  w.reserve(one.size() * kernels.n_slices());
  for (int s = 0; s < kernels.n_slices(); ++s) w.insert(w.end(), one.begin(), one.end());
  return w;
}

double weighted_lp_norm(std::span<const Complex> x, std::span<const double> w, double p) {
  require(p >= 1.0, ErrorCode::nonconvex_order, "norm order p must be >= 1");
  require(w.empty() || w.size() == x.size(), ErrorCode::dimension_error, "weight length differs from vector");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = (w.empty() ? 1.0 : w[i]) * std::abs(x[i]);
    acc += p == 1.0 ? v : (p == 2.0 ? v * v : std::pow(v, p));
  }
  return p == 1.0 ? acc : std::pow(acc, 1.0 / p);
}

double weighted_lp_norm(const SphMap& x, std::span<const double> w, double p) {
  return weighted_lp_norm(x.values, w, p);
}

double wavelet_space_norm(const WaveletCoeffs& alpha, const std::vector<RVec>& weights, double p) {
  require(p >= 1.0, ErrorCode::nonconvex_order, "norm order p must be >= 1");
  require(weights.size() == 1 + alpha.scales.size(), ErrorCode::dimension_error, "need one weight map per slice");
  double acc = std::pow(weighted_lp_norm(alpha.scaling, weights[0], p), p);
  for (std::size_t s = 0; s < alpha.scales.size(); ++s) {
    acc += std::pow(weighted_lp_norm(alpha.scales[s], weights[s + 1], p), p);
  }
  return std::pow(acc, 1.0 / p);
}

namespace {

// Coefficients of the theta and phi forward differences for each pixel.
struct GradientStencil {
  RVec a_theta;  // per pixel, multiplies x[t+1,p] - x[t,p]
  RVec a_phi;    // per pixel, multiplies x[t,p+1] - x[t,p]
};

GradientStencil make_stencil(const SphGrid& g, std::span<const double> w) {
  GradientStencil s{RVec(g.size(), 0.0), RVec(g.size(), 0.0)};
  const auto& th = g.thetas();
  for (int t = 0; t < g.n_theta(); ++t) {
    const double dth = t + 1 < g.n_theta() ? th[t + 1] - th[t] : 0.0;
    const double metric = 1.0 / (g.dphi() * std::sin(th[t]));
    for (int p = 0; p < g.n_phi(); ++p) {
      const auto i = g.index(t, p);
      const double wi = w.empty() ? 1.0 : w[i];
      s.a_theta[i] = dth > 0.0 ? wi / dth : 0.0;
      s.a_phi[i] = wi * metric;
    }
  }
  return s;
}

void gradient_apply(const SphGrid& g, const GradientStencil& s, std::span<const Complex> x, std::span<Complex> out) {
  const std::size_t n = g.size();
  const int nt = g.n_theta();
  const int np = g.n_phi();
#pragma omp parallel for schedule(static)
  for (int t = 0; t < nt; ++t) {
    for (int p = 0; p < np; ++p) {
      const auto i = g.index(t, p);
      out[i] = t + 1 < nt ? s.a_theta[i] * (x[g.index(t + 1, p)] - x[i]) : Complex{};
      out[n + i] = s.a_phi[i] * (x[g.index(t, (p + 1) % np)] - x[i]);
    }
  }
}

void gradient_adjoint(const SphGrid& g, const GradientStencil& s, std::span<const Complex> v, std::span<Complex> x) {
  const std::size_t n = g.size();
  const int nt = g.n_theta();
  const int np = g.n_phi();
#pragma omp parallel for schedule(static)
  for (int t = 0; t < nt; ++t) {
    for (int p = 0; p < np; ++p) {
      const auto i = g.index(t, p);
      Complex acc = -s.a_phi[i] * v[n + i];
      const auto left = g.index(t, (p + np - 1) % np);
      acc += s.a_phi[left] * v[n + left];
      if (t + 1 < nt) acc -= s.a_theta[i] * v[i];
      if (t > 0) {
        const auto up = g.index(t - 1, p);
        acc += s.a_theta[up] * v[up];
      }
      x[i] = acc;
    }
  }
}

void project_groups(std::span<Complex> p, double tau, std::span<const double> w, std::size_t n_groups, int group_size) {
  for (std::size_t gi = 0; gi < n_groups; ++gi) {
    const double radius = tau * (w.empty() ? 1.0 : w[gi]);
    double r2 = 0.0;
    for (int c = 0; c < group_size; ++c) r2 += std::norm(p[gi + c * n_groups]);
    if (r2 > radius * radius) {
      const double f = radius / std::sqrt(r2);
      for (int c = 0; c < group_size; ++c) p[gi + c * n_groups] *= f;
    }
  }
}

}  // namespace

SphGradient spherical_gradient(const SphMap& x) {
  require(x.spin == 0, ErrorCode::unsupported_spin, "gradient is defined for spin-0 maps");
  const auto& g = *x.grid;
  const auto s = make_stencil(g, {});
  CVec out(2 * g.size());
  gradient_apply(g, s, x.values, out);
  SphGradient r{SphMap(x.grid, 0), SphMap(x.grid, 0)};
  std::copy(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(g.size()), r.theta.values.begin());
  std::copy(out.begin() + static_cast<std::ptrdiff_t>(g.size()), out.end(), r.phi.values.begin());
  return r;
}

double tv_norm(const SphMap& x, std::span<const double> w) {
  const auto grad = spherical_gradient(x);
  require(w.empty() || w.size() == x.values.size(), ErrorCode::dimension_error, "weight length differs from map");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    acc += (w.empty() ? 1.0 : w[i]) * std::sqrt(std::norm(grad.theta.values[i]) + std::norm(grad.phi.values[i]));
  }
  return acc;
}

LinOp weighted_gradient_op(const GridPtr& grid, std::span<const double> w) {
  require(w.empty() || w.size() == grid->size(), ErrorCode::dimension_error, "weight length differs from grid");
  auto s = std::make_shared<const GradientStencil>(make_stencil(*grid, w));
  const Space out{SpaceKind::generic, 0, grid->L(), 2 * grid->size()};
  return LinOp(
      "grad", Space::pixel(*grid, 0), out,
      [grid, s](std::span<const Complex> x, std::span<Complex> v) { gradient_apply(*grid, *s, x, v); },
      [grid, s](std::span<const Complex> v, std::span<Complex> x) { gradient_adjoint(*grid, *s, v, x); });
}

void prox_l1_weighted(std::span<const Complex> z, double tau, std::span<const double> w, std::span<Complex> out) {
  require(w.empty() || w.size() == z.size(), ErrorCode::dimension_error, "weight length differs from vector");
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double thr = tau * (w.empty() ? 1.0 : w[i]);
    const double a = std::abs(z[i]);
    out[i] = a > thr ? z[i] * ((a - thr) / a) : Complex{};
  }
}

CVec prox_l1_weighted(std::span<const Complex> z, double tau, std::span<const double> w) {
  CVec out(z.size());
  prox_l1_weighted(z, tau, w, out);
  return out;
}

void project_l2_ball(std::span<const Complex> z, std::span<const Complex> center, double radius,
                     std::span<Complex> out) {
  require(radius > 0.0, ErrorCode::invalid_radius, "ball radius must be positive");
  require(center.size() == z.size(), ErrorCode::dimension_error, "ball centre length differs from vector");
  double r2 = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) r2 += std::norm(z[i] - center[i]);
  const double r = std::sqrt(r2);
  const double f = r <= radius ? 1.0 : radius / r;
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = center[i] + f * (z[i] - center[i]);
}

CVec project_l2_ball(std::span<const Complex> z, std::span<const Complex> center, double radius) {
  CVec out(z.size());
  project_l2_ball(z, center, radius, out);
  return out;
}

CVec prox_l2_squared(std::span<const Complex> z, double tau, std::span<const Complex> c, double sigma) {
  require(c.size() == z.size(), ErrorCode::dimension_error, "data length differs from vector");
  const double r = tau / (sigma * sigma);
  CVec out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = (z[i] + r * c[i]) / (1.0 + r);
  return out;
}

ProxResult prox_group_l1_composed(std::span<const Complex> z, double tau, const LinOp& K, double K_norm_sq,
                                  std::span<const double> w, std::size_t n_groups, int group_size,
                                  const ProxOptions& opts) {
  require(z.size() == K.in().size, ErrorCode::dimension_error, "prox input length differs from operator");
  require(n_groups * group_size == K.out().size, ErrorCode::dimension_error, "group layout differs from operator");
  ProxResult res;
  res.x.assign(z.begin(), z.end());
  if (tau == 0.0 || K_norm_sq <= 0.0) return res;
  const double step = 1.0 / K_norm_sq;
  const std::size_t m = K.out().size;

  CVec p(m), q(m), p_prev(m);
  CVec a(z.size()), a_prev(z.size()), aq(z.size());  // a = K^dag p, aq = K^dag q
  CVec u(z.begin(), z.end()), u_prev;
  double t = 1.0;
  res.converged = false;
  for (int it = 1; it <= opts.max_iter; ++it) {
    for (std::size_t i = 0; i < z.size(); ++i) u[i] = z[i] - aq[i];
    const CVec Ku = K.apply(u);
    p_prev.swap(p);
    for (std::size_t i = 0; i < m; ++i) p[i] = q[i] + step * Ku[i];
    project_groups(p, tau, w, n_groups, group_size);
    a_prev.swap(a);
    K.adjoint(p, a);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    t = t_next;
    for (std::size_t i = 0; i < m; ++i) q[i] = p[i] + beta * (p[i] - p_prev[i]);
    for (std::size_t i = 0; i < z.size(); ++i) aq[i] = a[i] + beta * (a[i] - a_prev[i]);

    u_prev = res.x;
    for (std::size_t i = 0; i < z.size(); ++i) res.x[i] = z[i] - a[i];
    res.iterations = it;
    double diff = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) diff += std::norm(res.x[i] - u_prev[i]);
    if (it > 1 && std::sqrt(diff) <= opts.tol * std::max(norm2(res.x), 1e-300)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

ProxResult prox_tv(const SphMap& z, double tau, std::span<const double> w, const ProxOptions& opts) {
  require(z.spin == 0, ErrorCode::unsupported_spin, "TV is defined for spin-0 maps");
  const auto K = weighted_gradient_op(z.grid, w);
  return prox_group_l1_composed(z.values, tau, K, operator_norm_squared(K), {}, z.grid->size(), 2, opts);
}

const char* to_string(RegKind kind) {
  switch (kind) {
    case RegKind::weighted_l1: return "weighted-l1";
    case RegKind::analysis_l1: return "wavelet-l1";
    case RegKind::tv: return "tv";
    case RegKind::l2_squared: return "l2-squared";
  }
  return "?";
}

Regularizer Regularizer::weighted_l1(RVec weights) {
  Regularizer r;
  r.kind_ = RegKind::weighted_l1;
  r.n_ = weights.size();
  r.n_groups_ = weights.size();
  r.w_ = std::move(weights);
  return r;
}

Regularizer Regularizer::analysis_l1(LinOp K, RVec weights) {
  require(weights.empty() || weights.size() == K.out().size, ErrorCode::dimension_error,
          "weight length differs from transform output");
  Regularizer r;
  r.kind_ = RegKind::analysis_l1;
  r.n_ = K.in().size;
  r.n_groups_ = K.out().size;
  r.w_ = weights.empty() ? RVec(K.out().size, 1.0) : std::move(weights);
  r.K_norm_sq_ = operator_norm_squared(K);
  r.K_ = std::move(K);
  return r;
}

Regularizer Regularizer::total_variation(const GridPtr& grid) {
  Regularizer r;
  r.kind_ = RegKind::tv;
  r.n_ = grid->size();
  r.n_groups_ = grid->size();
  r.group_size_ = 2;
  r.w_ = RVec(grid->size(), 1.0);
  LinOp K = weighted_gradient_op(grid, area_weights(*grid, 1.0));
  r.K_norm_sq_ = operator_norm_squared(K);
  r.K_ = std::move(K);
  return r;
}

Regularizer Regularizer::l2_squared(RVec weights, std::size_t n) {
  require(weights.empty() || weights.size() == n, ErrorCode::dimension_error, "weight length differs from size");
  Regularizer r;
  r.kind_ = RegKind::l2_squared;
  r.n_ = n;
  r.n_groups_ = n;
  r.w_ = weights.empty() ? RVec(n, 1.0) : std::move(weights);
  return r;
}

double Regularizer::outer_value(std::span<const Complex> v) const {
  double acc = 0.0;
  if (kind_ == RegKind::l2_squared) {
    for (std::size_t i = 0; i < v.size(); ++i) acc += w_[i] * std::norm(v[i]);
    return acc;
  }
  for (std::size_t gi = 0; gi < n_groups_; ++gi) {
    double r2 = 0.0;
    for (int c = 0; c < group_size_; ++c) r2 += std::norm(v[gi + c * n_groups_]);
    acc += (w_.empty() ? 1.0 : w_[gi]) * std::sqrt(r2);
  }
  return acc;
}

void Regularizer::outer_prox(std::span<const Complex> v, double tau, std::span<Complex> out) const {
  if (kind_ == RegKind::l2_squared) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / (1.0 + 2.0 * tau * w_[i]);
    return;
  }
  for (std::size_t gi = 0; gi < n_groups_; ++gi) {
    const double thr = tau * (w_.empty() ? 1.0 : w_[gi]);
    double r2 = 0.0;
    for (int c = 0; c < group_size_; ++c) r2 += std::norm(v[gi + c * n_groups_]);
    const double r = std::sqrt(r2);
    const double f = r > thr ? (r - thr) / r : 0.0;
    for (int c = 0; c < group_size_; ++c) out[gi + c * n_groups_] = f * v[gi + c * n_groups_];
  }
}

double Regularizer::value(std::span<const Complex> x) const {
  require(x.size() == n_, ErrorCode::dimension_error, "regularizer input length mismatch");
  if (!K_) return outer_value(x);
  return outer_value(K_->apply(x));
}

bool Regularizer::prox(std::span<const Complex> z, double tau, std::span<Complex> out) const {
  require(z.size() == n_ && out.size() == n_, ErrorCode::dimension_error, "prox length mismatch");
  if (!K_) {
    outer_prox(z, tau, out);
    return true;
  }
  auto r = prox_group_l1_composed(z, tau, *K_, K_norm_sq_, w_, n_groups_, group_size_, inner);
  std::copy(r.x.begin(), r.x.end(), out.begin());
  return r.converged;
}

}  // namespace s2opt
