#pragma once

// MAP-based uncertainty quantification.
//
// The approximate HPD region is C' = {x : h(x) <= eps'} with
//   eps' = h(x_map) + sqrt(16 N ln(3/alpha)) + N,
// N the number of real degrees of freedom. Local credible intervals replace
// one region of x_map by a uniform real intensity xi and find the extreme
// xi that keep the surrogate inside C'. Because every operator is linear,
// h along that line is
//   h(xi) = sum_i u_i |a_i + xi b_i|^2 + lambda phi(c + xi d)
// with a, b in measurement space and c, d in the regularizer's transform
// space; LinearizedRegion stores these four vectors once per region.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "s2opt/grid.hpp"
#include "s2opt/solvers.hpp"

namespace s2opt {

struct CredibleThreshold {
  double alpha = 0.0;
  double epsilon_prime = 0.0;
  double h_map = 0.0;
  std::size_t N = 0;
};

/// h(z): f + lambda g when unconstrained; g inside the data ball and +inf
/// outside it when constrained.
double posterior_potential(const Problem& p, std::span<const Complex> z);

/// Throws invalid-alpha unless 0 < alpha < 1, invalid-parameter for N < 1.
CredibleThreshold hpd_threshold(double h_map, std::size_t N, double alpha);

enum class Verdict { significant, indeterminate };
const char* to_string(Verdict v);

/// significant iff h(x_sur) > eps'.
Verdict hypothesis_test(const Problem& p, std::span<const Complex> x_sur, const CredibleThreshold& t);

// ------------------------------------------------------------ partitions

struct Region {
  std::vector<std::size_t> pixels;  // ascending
};

enum class PartitionKind { rectangular, cap };

struct Partition {
  PartitionKind kind = PartitionKind::rectangular;
  std::size_t n_pixels = 0;
  std::vector<Region> regions;
};

/// Blocks of rings x columns; the last block in each direction absorbs the
/// remainder.
Partition make_rect_partition(const SphGrid& grid, int n_theta_blocks, int n_phi_blocks);

/// One cap of angular radius `radius` around each centre (theta, phi). A cap
/// always contains the pixel nearest its centre. Throws overlap-error if two
/// caps share a pixel, invalid-parameter for radius < 0.
Partition make_cap_partition(const SphGrid& grid, const std::vector<std::pair<double, double>>& centres, double radius);

/// Pixels with angular distance in (r_inner, r_outer] from the centre.
Region annulus(const SphGrid& grid, double theta, double phi, double r_inner, double r_outer);

/// Sum of pixel areas of a region.
double region_area(const SphGrid& grid, const Region& r);

/// x with `feature` replaced by the mean of x over `background`.
CVec feature_removal_surrogate(std::span<const Complex> x, const Region& feature, const Region& background);

// ----------------------------------------------------- local intervals

enum class SurrogateComponent { real, imag };

/// x with the region set to xi in the chosen component, other component kept.
CVec surrogate(std::span<const Complex> x, const Region& region, double xi,
               SurrogateComponent part = SurrogateComponent::real);

enum class PriorForm { l1, group_l1, l2_squared };

struct LinearizedRegion {
  CVec a, b;        // measurement space
  RVec data_w;      // omega_i / (2 sigma^2)
  CVec c, d;        // transform space of the regularizer
  RVec prior_w;     // lambda w_g per group
  PriorForm prior = PriorForm::l2_squared;
  std::size_t n_groups = 0;
  int group_size = 1;
  double centre = 0.0;  // region mean of x_map
  double range = 1.0;   // dynamic range of x_map, sets tolerances and guard

  double data_term(double xi) const;
  double prior_term(double xi) const;
  /// Exact h(xi) from the stored vectors.
  double evaluate(double xi) const { return data_term(xi) + prior_term(xi); }
};

/// a, b, c, d for one region with two applications of Phi and two of the
/// regularizer's transform. Requires the analysis setting.
LinearizedRegion lci_precompute(const Problem& p, std::span<const Complex> x_map, const Region& region,
                                SurrogateComponent part = SurrogateComponent::real);

enum class LciMethod { bisection, gaussian_analytic, lasso_analytic, lasso_refined };
const char* to_string(LciMethod m);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  int evaluations = 0;  // objective evaluations spent
  double length() const { return upper - lower; }
};

struct BisectionOptions {
  double tol_xi = 0.0;       // absolute; <= 0 selects 1e-6 x range
  double tol_h_rel = 1e-9;   // tol_h = tol_h_rel x eps'
  double guard_factor = 1e3; // bracket guard = guard_factor x range
  int max_evaluations = 100000;
};

/// Interval {xi : h(xi) <= eps} of a convex scalar function, by bracket
/// growth from `start` and bisection. `range` sets the tolerance and guard
/// scales. Throws unbounded-interval naming the open direction, or
/// empty-interval if min h > eps.
Interval bisect_level_set(const std::function<double(double)>& h, double eps, double start, double range,
                          const BisectionOptions& o = {});

/// Full-objective bisection: every step re-applies the operators.
Interval lci_bisection(const Problem& p, std::span<const Complex> x_map, const Region& region,
                       const CredibleThreshold& t, const BisectionOptions& o = {},
                       SurrogateComponent part = SurrogateComponent::real);

/// Closed-form roots for Gaussian fidelity and squared-l2 prior, clipped to
/// centre +- guard_factor x range.
Interval lci_gaussian_analytic(const LinearizedRegion& r, const CredibleThreshold& t, double guard_factor = 1e3);

/// l1 prior. Analytic interval assumes c and d have disjoint support; with
/// refine, bisection on the exact linearized objective between the
/// Minkowski inner and outer brackets.
Interval lci_lasso(const LinearizedRegion& r, const CredibleThreshold& t, bool refine, const BisectionOptions& o = {});

struct LciMap {
  LciMethod method = LciMethod::bisection;
  SurrogateComponent part = SurrogateComponent::real;
  std::vector<Interval> intervals;
  std::vector<std::string> errors;  // empty string when the region succeeded
};

/// Intervals for every region. Regions run in parallel; a failing region
/// records its error and gets NaN bounds.
LciMap compute_lci_map(const Problem& p, std::span<const Complex> x_map, const Partition& partition,
                       const CredibleThreshold& t, LciMethod method, const BisectionOptions& o = {},
                       SurrogateComponent part = SurrogateComponent::real);

/// Interval length broadcast to region pixels, NaN outside every region.
SphMap lci_length_map(const GridPtr& grid, const Partition& partition, const LciMap& lci);

}  // namespace s2opt
