#include "s2opt/uq.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "s2opt/error.hpp"
#include "s2opt/vector.hpp"

namespace s2opt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double data_term_of(const Problem& p, std::span<const Complex> z) {
  const CVec r = subtract(p.effective_operator().apply(z), p.y);
  double f = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) f += (p.data_weights.empty() ? 1.0 : p.data_weights[i]) * std::norm(r[i]);
  return f / (2.0 * p.sigma * p.sigma);
}

void check_region(const Region& region, std::size_t n) {
  require(!region.pixels.empty(), ErrorCode::invalid_region, "region is empty");
  for (auto i : region.pixels) require(i < n, ErrorCode::invalid_region, "region pixel outside the map");
}

double component(Complex v, SurrogateComponent part) { return part == SurrogateComponent::real ? v.real() : v.imag(); }

double region_mean(std::span<const Complex> x, const Region& r, SurrogateComponent part) {
  double s = 0.0;
  for (auto i : r.pixels) s += component(x[i], part);
  return s / static_cast<double>(r.pixels.size());
}

double dynamic_range(std::span<const Complex> x, SurrogateComponent part) {
  double lo = kInf, hi = -kInf;
  for (const auto& v : x) {
    lo = std::min(lo, component(v, part));
    hi = std::max(hi, component(v, part));
  }
  if (x.empty()) return 1.0;
  if (hi > lo) return hi - lo;
  const double m = std::max(std::abs(lo), std::abs(hi));
  return m > 0.0 ? m : 1.0;
}

double angular_distance(double t1, double p1, double t2, double p2) {
  const double x1 = std::sin(t1) * std::cos(p1), y1 = std::sin(t1) * std::sin(p1), z1 = std::cos(t1);
  const double x2 = std::sin(t2) * std::cos(p2), y2 = std::sin(t2) * std::sin(p2), z2 = std::cos(t2);
  const double cx = y1 * z2 - z1 * y2, cy = z1 * x2 - x1 * z2, cz = x1 * y2 - y1 * x2;
  return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), x1 * x2 + y1 * y2 + z1 * z2);
}

struct Range {
  double lo, hi;
};

// {xi in [lo, hi] : A xi^2 + B xi + C <= 0}; lo/hi may be infinite.
std::optional<Range> quadratic_sublevel(double A, double B, double C, double lo, double hi) {
  double r1, r2;
  if (A > 0.0) {
    const double disc = B * B - 4.0 * A * C;
    if (disc < 0.0) return std::nullopt;
    const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
    if (q == 0.0) {
      r1 = r2 = 0.0;
    } else {
      r1 = q / A;
      r2 = C / q;
    }
    if (r1 > r2) std::swap(r1, r2);
  } else if (B == 0.0) {
    if (C > 0.0) return std::nullopt;
    r1 = -kInf;
    r2 = kInf;
  } else if (B > 0.0) {
    r1 = -kInf;
    r2 = -C / B;
  } else {
    r1 = -C / B;
    r2 = kInf;
  }
  const double a = std::max(r1, lo), b = std::min(r2, hi);
  if (a > b) return std::nullopt;
  return Range{a, b};
}

struct Coefficients {
  double A = 0.0, B = 0.0, C = 0.0;  // data plus any quadratic prior
  double D = 0.0;                    // sum_g w_g ||d_g|| (l1 priors)
  double Cc = 0.0;                   // sum_g w_g ||c_g|| (l1 priors)
};

double weight_at(const RVec& w, std::size_t i) { return w.empty() ? 1.0 : w[i]; }

Coefficients coefficients(const LinearizedRegion& r) {
  Coefficients k;
  const std::size_t m = std::max(r.a.size(), r.b.size());
  for (std::size_t i = 0; i < m; ++i) {
    const Complex a = i < r.a.size() ? r.a[i] : Complex{};
    const Complex b = i < r.b.size() ? r.b[i] : Complex{};
    const double u = weight_at(r.data_w, i);
    k.A += u * std::norm(b);
    k.B += 2.0 * u * (std::conj(a) * b).real();
    k.C += u * std::norm(a);
  }
  const std::size_t n = std::max(r.c.size(), r.d.size());
  if (r.prior == PriorForm::l2_squared) {
    for (std::size_t i = 0; i < n; ++i) {
      const Complex c = i < r.c.size() ? r.c[i] : Complex{};
      const Complex d = i < r.d.size() ? r.d[i] : Complex{};
      const double w = weight_at(r.prior_w, i);
      k.A += w * std::norm(d);
      k.B += 2.0 * w * (std::conj(c) * d).real();
      k.C += w * std::norm(c);
    }
    return k;
  }
  const int gs = r.prior == PriorForm::l1 ? 1 : r.group_size;
  const std::size_t ng = r.n_groups > 0 ? r.n_groups : n / static_cast<std::size_t>(gs);
  for (std::size_t g = 0; g < ng; ++g) {
    double c2 = 0.0, d2 = 0.0;
    for (int j = 0; j < gs; ++j) {
      const std::size_t i = g + j * ng;
      if (i < r.c.size()) c2 += std::norm(r.c[i]);
      if (i < r.d.size()) d2 += std::norm(r.d[i]);
    }
    k.Cc += weight_at(r.prior_w, g) * std::sqrt(c2);
    k.D += weight_at(r.prior_w, g) * std::sqrt(d2);
  }
  return k;
}

// Sublevel set of A xi^2 + B xi + C + D |xi| <= eps as one interval.
std::optional<Range> abs_quadratic_sublevel(double A, double B, double C, double D, double eps) {
  const auto pos = quadratic_sublevel(A, B + D, C - eps, 0.0, kInf);
  const auto neg = quadratic_sublevel(A, B - D, C - eps, -kInf, 0.0);
  if (pos && neg) return Range{neg->lo, pos->hi};
  if (pos) return pos;
  return neg;
}

double golden_minimum(const std::function<double(double)>& h, double lo, double hi, double tol, int& evals) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = h(x1), f2 = h(x2);
  evals += 2;
  while (hi - lo > tol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = h(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = h(x2);
    }
    ++evals;
  }
  return f1 <= f2 ? x1 : x2;
}

// Bisect between a feasible and an infeasible point until both the xi gap
// and the threshold gap are within tolerance. Returns the feasible end.
double refine_edge(const std::function<double(double)>& h, double eps, double feasible, double hf, double infeasible,
                   double tol_xi, double tol_h, int& evals, int max_evals) {
  while (evals < max_evals) {
    if (std::abs(infeasible - feasible) <= tol_xi && eps - hf <= tol_h) break;
    const double m = 0.5 * (feasible + infeasible);
    if (m == feasible || m == infeasible) break;
    const double hm = h(m);
    ++evals;
    if (hm <= eps) {
      feasible = m;
      hf = hm;
    } else {
      infeasible = m;
    }
  }
  return feasible;
}

}  // namespace

double posterior_potential(const Problem& p, std::span<const Complex> z) {
  p.validate();
  require(z.size() == p.variable_size(), ErrorCode::dimension_error, "variable length mismatch");
  const double f = data_term_of(p, z);
  if (p.formulation == Formulation::constrained) return f <= p.delta * (1.0 + 1e-6) ? p.reg.value(z) : kInf;
  return f + (p.lambda == 0.0 ? 0.0 : p.lambda * p.reg.value(z));
}

// Natural logarithm throughout.
CredibleThreshold hpd_threshold(double h_map, std::size_t N, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::invalid_alpha, "alpha must lie in (0, 1)");
  require(N >= 1, ErrorCode::invalid_parameter, "dimension must be at least 1");
  const double n = static_cast<double>(N);
  return {alpha, h_map + std::sqrt(16.0 * n * std::log(3.0 / alpha)) + n, h_map, N};
}

const char* to_string(Verdict v) { return v == Verdict::significant ? "significant" : "indeterminate"; }

Verdict hypothesis_test(const Problem& p, std::span<const Complex> x_sur, const CredibleThreshold& t) {
  return posterior_potential(p, x_sur) > t.epsilon_prime ? Verdict::significant : Verdict::indeterminate;
}

Partition make_rect_partition(const SphGrid& grid, int n_theta_blocks, int n_phi_blocks) {
  require(n_theta_blocks >= 1 && n_phi_blocks >= 1, ErrorCode::invalid_parameter, "block counts must be positive");
  require(n_theta_blocks <= grid.n_theta() && n_phi_blocks <= grid.n_phi(), ErrorCode::invalid_parameter,
          "more blocks than pixels along an axis");
  const int bt = grid.n_theta() / n_theta_blocks, bp = grid.n_phi() / n_phi_blocks;
  Partition part{PartitionKind::rectangular, grid.size(), {}};
  part.regions.reserve(static_cast<std::size_t>(n_theta_blocks) * n_phi_blocks);
  for (int i = 0; i < n_theta_blocks; ++i) {
    const int t0 = i * bt, t1 = i + 1 == n_theta_blocks ? grid.n_theta() : t0 + bt;
    for (int j = 0; j < n_phi_blocks; ++j) {
      const int p0 = j * bp, p1 = j + 1 == n_phi_blocks ? grid.n_phi() : p0 + bp;
      Region r;
      for (int t = t0; t < t1; ++t)
        for (int p = p0; p < p1; ++p) r.pixels.push_back(grid.index(t, p));
      part.regions.push_back(std::move(r));
    }
  }
  return part;
}

Region annulus(const SphGrid& grid, double theta, double phi, double r_inner, double r_outer) {
  Region r;
  for (int t = 0; t < grid.n_theta(); ++t)
    for (int p = 0; p < grid.n_phi(); ++p) {
      const double dist = angular_distance(theta, phi, grid.thetas()[t], grid.phis()[p]);
      if (dist > r_inner && dist <= r_outer) r.pixels.push_back(grid.index(t, p));
    }
  return r;
}

Partition make_cap_partition(const SphGrid& grid, const std::vector<std::pair<double, double>>& centres,
                             double radius) {
  require(radius >= 0.0 && std::isfinite(radius), ErrorCode::invalid_parameter, "cap radius must be non-negative");
  require(!centres.empty(), ErrorCode::invalid_parameter, "no cap centres");
  Partition part{PartitionKind::cap, grid.size(), {}};
  std::vector<int> owner(grid.size(), -1);
  for (std::size_t k = 0; k < centres.size(); ++k) {
    const auto [theta, phi] = centres[k];
    Region r = annulus(grid, theta, phi, -1.0, radius);
    const std::size_t nearest = grid.nearest_pixel(theta, phi);
    if (!std::binary_search(r.pixels.begin(), r.pixels.end(), nearest)) {
      r.pixels.insert(std::lower_bound(r.pixels.begin(), r.pixels.end(), nearest), nearest);
    }
    for (auto i : r.pixels) {
      require(owner[i] < 0, ErrorCode::overlap_error,
              "caps " + std::to_string(owner[i]) + " and " + std::to_string(k) + " share a pixel");
      owner[i] = static_cast<int>(k);
    }
    part.regions.push_back(std::move(r));
  }
  return part;
}

double region_area(const SphGrid& grid, const Region& r) {
  double a = 0.0;
  for (auto i : r.pixels) a += grid.pixel_areas()[i];
  return a;
}

CVec feature_removal_surrogate(std::span<const Complex> x, const Region& feature, const Region& background) {
  check_region(feature, x.size());
  check_region(background, x.size());
  Complex mean{};
  for (auto i : background.pixels) mean += x[i];
  mean /= static_cast<double>(background.pixels.size());
  CVec out(x.begin(), x.end());
  for (auto i : feature.pixels) out[i] = mean;
  return out;
}

CVec surrogate(std::span<const Complex> x, const Region& region, double xi, SurrogateComponent part) {
  check_region(region, x.size());
  CVec out(x.begin(), x.end());
  for (auto i : region.pixels)
    out[i] = part == SurrogateComponent::real ? Complex(xi, x[i].imag()) : Complex(x[i].real(), xi);
  return out;
}

double LinearizedRegion::data_term(double xi) const {
  double s = 0.0;
  const std::size_t m = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < m; ++i) {
    const Complex v = (i < a.size() ? a[i] : Complex{}) + xi * (i < b.size() ? b[i] : Complex{});
    s += weight_at(data_w, i) * std::norm(v);
  }
  return s;
}

double LinearizedRegion::prior_term(double xi) const {
  const std::size_t n = std::max(c.size(), d.size());
  auto v = [&](std::size_t i) { return (i < c.size() ? c[i] : Complex{}) + xi * (i < d.size() ? d[i] : Complex{}); };
  double s = 0.0;
  if (prior == PriorForm::l2_squared) {
    for (std::size_t i = 0; i < n; ++i) s += weight_at(prior_w, i) * std::norm(v(i));
    return s;
  }
  const int gs = prior == PriorForm::l1 ? 1 : group_size;
  const std::size_t ng = n_groups > 0 ? n_groups : n / static_cast<std::size_t>(gs);
  for (std::size_t g = 0; g < ng; ++g) {
    double r2 = 0.0;
    for (int j = 0; j < gs; ++j) r2 += std::norm(v(g + j * ng));
    s += weight_at(prior_w, g) * std::sqrt(r2);
  }
  return s;
}

LinearizedRegion lci_precompute(const Problem& p, std::span<const Complex> x_map, const Region& region,
                                SurrogateComponent part) {
  p.validate();
  require(p.setting == Setting::analysis && p.formulation == Formulation::unconstrained,
          ErrorCode::invalid_parameter, "linearized intervals need an unconstrained analysis problem");
  require(x_map.size() == p.variable_size(), ErrorCode::dimension_error, "map length differs from the variable");
  check_region(region, x_map.size());

  CVec base(x_map.begin(), x_map.end());
  CVec ind(x_map.size());
  const Complex unit = part == SurrogateComponent::real ? Complex(1.0, 0.0) : Complex(0.0, 1.0);
  for (auto i : region.pixels) {
    base[i] = part == SurrogateComponent::real ? Complex(0.0, x_map[i].imag()) : Complex(x_map[i].real(), 0.0);
    ind[i] = unit;
  }

  LinearizedRegion r;
  const LinOp A = p.effective_operator();
  r.a = subtract(A.apply(base), p.y);
  r.b = A.apply(ind);
  r.data_w.resize(r.a.size());
  for (std::size_t i = 0; i < r.a.size(); ++i)
    r.data_w[i] = weight_at(p.data_weights, i) / (2.0 * p.sigma * p.sigma);

  if (const auto& K = p.reg.transform()) {
    r.c = K->apply(base);
    r.d = K->apply(ind);
  } else {
    r.c = std::move(base);
    r.d = std::move(ind);
  }
  r.n_groups = p.reg.n_groups();
  r.group_size = p.reg.group_size();
  r.prior = p.reg.kind() == RegKind::l2_squared ? PriorForm::l2_squared
            : r.group_size == 1                 ? PriorForm::l1
                                                : PriorForm::group_l1;
  r.prior_w.assign(r.n_groups, p.lambda);
  const RVec& w = p.reg.weights();
  for (std::size_t g = 0; g < r.n_groups && !w.empty(); ++g) r.prior_w[g] *= w[g];
  r.centre = region_mean(x_map, region, part);
  r.range = dynamic_range(x_map, part);
  return r;
}

const char* to_string(LciMethod m) {
  switch (m) {
    case LciMethod::bisection: return "bisection";
    case LciMethod::gaussian_analytic: return "gaussian-analytic";
    case LciMethod::lasso_analytic: return "lasso-analytic";
    case LciMethod::lasso_refined: return "lasso-hybrid";
  }
  return "?";
}

Interval bisect_level_set(const std::function<double(double)>& h, double eps, double start, double range,
                          const BisectionOptions& o) {
  require(range > 0.0 && std::isfinite(range), ErrorCode::invalid_parameter, "range must be positive");
  const double tol_xi = o.tol_xi > 0.0 ? o.tol_xi : 1e-6 * range;
  const double tol_h = o.tol_h_rel * std::abs(eps);
  const double G = o.guard_factor * range;
  const double guard_lo = start - G, guard_hi = start + G;

  Interval out;
  int& evals = out.evaluations;
  double centre = start;
  double hc = h(centre);
  ++evals;
  if (!(hc <= eps)) {
    centre = golden_minimum(h, guard_lo, guard_hi, tol_xi, evals);
    hc = h(centre);
    ++evals;
    require(hc <= eps, ErrorCode::empty_interval, "objective stays above the threshold inside the guard bracket");
  }

  double ends[2];
  for (int side = 0; side < 2; ++side) {
    const double dir = side == 0 ? -1.0 : 1.0;
    const double edge = side == 0 ? centre - guard_lo : guard_hi - centre;
    double prev = 0.0, hprev = hc, step = std::min(1e-2 * range, edge);
    for (;;) {
      require(evals < o.max_evaluations, ErrorCode::numerical_failure, "interval search exceeded its budget");
      const double x = centre + dir * step;
      const double hx = h(x);
      ++evals;
      if (!(hx <= eps)) {
        ends[side] = refine_edge(h, eps, centre + dir * prev, hprev, x, tol_xi, tol_h, evals, o.max_evaluations);
        break;
      }
      require(step < edge, ErrorCode::unbounded_interval,
              std::string("no threshold crossing ") + (side == 0 ? "below" : "above") + " the region mean");
      prev = step;
      hprev = hx;
      step = std::min(2.0 * step, edge);
    }
  }
  out.lower = ends[0];
  out.upper = ends[1];
  return out;
}

Interval lci_bisection(const Problem& p, std::span<const Complex> x_map, const Region& region,
                       const CredibleThreshold& t, const BisectionOptions& o, SurrogateComponent part) {
  require(x_map.size() == p.variable_size(), ErrorCode::dimension_error, "map length differs from the variable");
  check_region(region, x_map.size());
  auto h = [&](double xi) { return posterior_potential(p, surrogate(x_map, region, xi, part)); };
  return bisect_level_set(h, t.epsilon_prime, region_mean(x_map, region, part), dynamic_range(x_map, part), o);
}

Interval lci_gaussian_analytic(const LinearizedRegion& r, const CredibleThreshold& t, double guard_factor) {
  require(r.prior == PriorForm::l2_squared, ErrorCode::invalid_parameter, "analytic Gaussian interval needs an l2 prior");
  const auto k = coefficients(r);
  require(k.A > 0.0, ErrorCode::unbounded_interval, "objective does not depend on the region intensity");
  const auto s = quadratic_sublevel(k.A, k.B, k.C - t.epsilon_prime, -kInf, kInf);
  require(s.has_value(), ErrorCode::empty_interval, "threshold lies below the quadratic's minimum");
  const double G = guard_factor * r.range;
  return {std::max(s->lo, r.centre - G), std::min(s->hi, r.centre + G), 0};
}

Interval lci_lasso(const LinearizedRegion& r, const CredibleThreshold& t, bool refine, const BisectionOptions& o) {
  require(r.prior != PriorForm::l2_squared, ErrorCode::invalid_parameter, "lasso interval needs an l1 prior");
  const auto k = coefficients(r);
  const double eps = t.epsilon_prime;
  const double G = o.guard_factor * r.range;
  const double guard_lo = r.centre - G, guard_hi = r.centre + G;

  // ||c + xi d|| <= ||c|| + |xi| ||d||: exact for disjoint supports, and an
  // upper bound on h, so its sublevel set lies inside the true interval.
  const auto inner = abs_quadratic_sublevel(k.A, k.B, k.C + k.Cc, k.D, eps);
  if (!refine) {
    require(inner.has_value(), ErrorCode::empty_interval, "threshold lies below the objective's minimum");
    require(std::isfinite(inner->lo) && std::isfinite(inner->hi), ErrorCode::unbounded_interval,
            "objective does not grow with the region intensity");
    return {std::max(inner->lo, guard_lo), std::min(inner->hi, guard_hi), 0};
  }

  // ||c + xi d|| >= |xi| ||d|| - ||c|| gives a lower bound on h and an outer bracket.
  const auto outer = abs_quadratic_sublevel(k.A, k.B, k.C - k.Cc, k.D, eps);
  require(outer.has_value(), ErrorCode::empty_interval, "threshold lies below the objective's minimum");
  const double olo = std::max(outer->lo, guard_lo), ohi = std::min(outer->hi, guard_hi);

  auto h = [&](double xi) { return r.evaluate(xi); };
  const double tol_xi = o.tol_xi > 0.0 ? o.tol_xi : 1e-6 * r.range;
  const double tol_h = o.tol_h_rel * std::abs(eps);
  Interval out;
  int& evals = out.evaluations;

  double flo, fhi, hlo, hhi;
  bool seeded = false;
  if (inner) {
    flo = std::max(inner->lo, olo);
    fhi = std::min(inner->hi, ohi);
    hlo = h(flo);
    hhi = h(fhi);
    evals += 2;
    seeded = flo <= fhi && hlo <= eps && hhi <= eps;
  }
  if (!seeded) {
    flo = fhi = golden_minimum(h, olo, ohi, tol_xi, evals);
    hlo = hhi = h(flo);
    ++evals;
    require(hlo <= eps, ErrorCode::empty_interval, "threshold lies below the objective's minimum");
  }

  const double hol = h(olo), hoh = h(ohi);
  evals += 2;
  require(hol > eps && hoh > eps, ErrorCode::unbounded_interval,
          std::string("no threshold crossing ") + (hol <= eps ? "below" : "above") + " inside the guard bracket");
  out.lower = refine_edge(h, eps, flo, hlo, olo, tol_xi, tol_h, evals, o.max_evaluations);
  out.upper = refine_edge(h, eps, fhi, hhi, ohi, tol_xi, tol_h, evals, o.max_evaluations);
  return out;
}

LciMap compute_lci_map(const Problem& p, std::span<const Complex> x_map, const Partition& partition,
                       const CredibleThreshold& t, LciMethod method, const BisectionOptions& o,
                       SurrogateComponent part) {
  p.validate();
  require(x_map.size() == p.variable_size(), ErrorCode::dimension_error, "map length differs from the variable");
  LciMap out;
  out.method = method;
  out.part = part;
  const auto n = static_cast<std::ptrdiff_t>(partition.regions.size());
  out.intervals.assign(partition.regions.size(), Interval{kNaN, kNaN, 0});
  out.errors.assign(partition.regions.size(), std::string());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Region& region = partition.regions[static_cast<std::size_t>(i)];
    try {
      Interval iv;
      switch (method) {
        case LciMethod::bisection:
          iv = lci_bisection(p, x_map, region, t, o, part);
          break;
        case LciMethod::gaussian_analytic:
          iv = lci_gaussian_analytic(lci_precompute(p, x_map, region, part), t, o.guard_factor);
          break;
        case LciMethod::lasso_analytic:
        case LciMethod::lasso_refined:
          iv = lci_lasso(lci_precompute(p, x_map, region, part), t, method == LciMethod::lasso_refined, o);
          break;
      }
      out.intervals[static_cast<std::size_t>(i)] = iv;
    } catch (const std::exception& e) {
      out.errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  return out;
}

SphMap lci_length_map(const GridPtr& grid, const Partition& partition, const LciMap& lci) {
  require(partition.n_pixels == grid->size(), ErrorCode::dimension_error, "partition built for another grid");
  require(lci.intervals.size() == partition.regions.size(), ErrorCode::dimension_error,
          "interval count differs from region count");
  SphMap m(grid, 0, CVec(grid->size(), Complex(kNaN, 0.0)));
  for (std::size_t k = 0; k < partition.regions.size(); ++k) {
    const double len = lci.errors[k].empty() ? lci.intervals[k].length() : kNaN;
    for (auto i : partition.regions[k].pixels) m.values[i] = len;
  }
  return m;
}

}  // namespace s2opt
