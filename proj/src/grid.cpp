#include "s2opt/grid.hpp"

#include <cmath>
#include <numbers>

#include "fft_plans.hpp"
#include "s2opt/error.hpp"

namespace s2opt {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  if (n == 1) {
    weights[0] = 2.0;
    return;
  }
  // P_n(x) and its derivative by the three-term recurrence.
  const auto legendre = [n](double x, double& deriv) {
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    deriv = n * (x * p1 - p0) / (x * x - 1.0);
    return p1;
  };
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      const double dx = legendre(x, dp) / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre(x, dp);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = x;
    nodes[n - 1 - i] = -x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

SphGrid::SphGrid(int L) : L_(L), n_theta_(L), n_phi_(2 * L - 1) {
  std::vector<double> x;
  std::vector<double> w;
  gauss_legendre(n_theta_, x, w);

  const double two_pi = 2.0 * std::numbers::pi;
  thetas_.resize(n_theta_);
  quad_weights_.resize(n_theta_);
  for (int t = 0; t < n_theta_; ++t) {
    thetas_[t] = std::acos(x[t]);
    quad_weights_[t] = w[t] * two_pi / n_phi_;
  }
  phis_.resize(n_phi_);
  for (int p = 0; p < n_phi_; ++p) phis_[p] = two_pi * p / n_phi_;

  // Cell boundaries at ring midpoints; the polar caps belong to the end rings.
  pixel_areas_.resize(size());
  const double dphi_v = two_pi / n_phi_;
  for (int t = 0; t < n_theta_; ++t) {
    const double upper = (t == 0) ? 0.0 : 0.5 * (thetas_[t - 1] + thetas_[t]);
    const double lower = (t == n_theta_ - 1) ? std::numbers::pi : 0.5 * (thetas_[t] + thetas_[t + 1]);
    const double area = dphi_v * (std::cos(upper) - std::cos(lower));
    for (int p = 0; p < n_phi_; ++p) pixel_areas_[index(t, p)] = area;
  }

  fft_ = std::make_unique<detail::FftPlans>(n_phi_);
}

SphGrid::~SphGrid() = default;

std::shared_ptr<const SphGrid> SphGrid::make(int L) {
  require(L >= 1, ErrorCode::invalid_bandlimit, "bandlimit must be >= 1, got " + std::to_string(L));
  return std::shared_ptr<const SphGrid>(new SphGrid(L));
}

double SphGrid::dphi() const noexcept { return 2.0 * std::numbers::pi / n_phi_; }

std::size_t SphGrid::nearest_pixel(double theta, double phi) const {
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  std::size_t best = 0;
  double best_dot = -2.0;
  for (int t = 0; t < n_theta_; ++t) {
    const double ct2 = std::cos(thetas_[t]);
    const double st2 = std::sin(thetas_[t]);
    for (int p = 0; p < n_phi_; ++p) {
      const double d = ct * ct2 + st * st2 * std::cos(phi - phis_[p]);
      if (d > best_dot) {
        best_dot = d;
        best = index(t, p);
      }
    }
  }
  return best;
}

SphMap::SphMap(GridPtr g, int s) : grid(std::move(g)), spin(s), values(grid->size(), Complex{}) {}

SphMap::SphMap(GridPtr g, int s, CVec v) : grid(std::move(g)), spin(s), values(std::move(v)) {
  require(values.size() == grid->size(), ErrorCode::dimension_error, "SphMap: value count does not match grid");
}

HarmonicCoeffs::HarmonicCoeffs(int bandlimit, int s)
    : L(bandlimit), spin(s), coeffs(size_for(bandlimit), Complex{}) {}

HarmonicCoeffs::HarmonicCoeffs(int bandlimit, int s, CVec c) : L(bandlimit), spin(s), coeffs(std::move(c)) {
  require(coeffs.size() == size_for(bandlimit), ErrorCode::dimension_error,
          "HarmonicCoeffs: coefficient count does not match bandlimit");
}

}  // namespace s2opt
