#pragma once

// Sphere-weighted norms, regularizers and proximal operators.
//
// Weights approximate the continuous measure: w_t = area_t^{1/p}, so that
// ||w o x||_p^p ~ int |x|^p dOmega.
//
// A Regularizer has the form g(x) = phi(K x) with K an optional linear map
// and phi separable over groups of K's output:
//   weighted l1:  phi(v) = sum_g w_g ||v_g||_2
//   l2 squared:   phi(v) = sum_i w_i |v_i|^2
// Group g of size c holds entries g, g + n_groups, ..., g + (c-1) n_groups.

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "s2opt/grid.hpp"
#include "s2opt/operators.hpp"
#include "s2opt/wavelet.hpp"

namespace s2opt {

/// area_t^{1/p} per pixel (throws nonconvex-order for p < 1).
RVec area_weights(const SphGrid& grid, double p);
/// area_weights repeated once per wavelet slice, in flatten order.
RVec wavelet_area_weights(const SphGrid& grid, const WaveletKernels& kernels, double p);

double weighted_lp_norm(std::span<const Complex> x, std::span<const double> w, double p);
double weighted_lp_norm(const SphMap& x, std::span<const double> w, double p);
/// (sum over slices of ||w_s o alpha_s||_p^p)^{1/p}; one weight map per slice.
double wavelet_space_norm(const WaveletCoeffs& alpha, const std::vector<RVec>& weights, double p);

struct SphGradient {
  SphMap theta;
  SphMap phi;
};

/// Forward differences: d/dtheta between adjacent rings (zero on the last
/// ring) and (1/sin theta) d/dphi with periodic wrap.
SphGradient spherical_gradient(const SphMap& x);
/// sum_t w_t sqrt(|g_theta|^2 + |g_phi|^2).
double tv_norm(const SphMap& x, std::span<const double> w);
/// x -> (w o g_theta, w o g_phi), stacked theta block then phi block.
LinOp weighted_gradient_op(const GridPtr& grid, std::span<const double> w);

/// Complex soft threshold: z_i max(0, 1 - tau w_i / |z_i|). Empty w means 1.
void prox_l1_weighted(std::span<const Complex> z, double tau, std::span<const double> w, std::span<Complex> out);
CVec prox_l1_weighted(std::span<const Complex> z, double tau, std::span<const double> w = {});

/// Euclidean projection onto {u : ||u - center|| <= radius}.
void project_l2_ball(std::span<const Complex> z, std::span<const Complex> center, double radius,
                     std::span<Complex> out);
CVec project_l2_ball(std::span<const Complex> z, std::span<const Complex> center, double radius);

/// prox of tau/(2 sigma^2) ||u - c||^2.
CVec prox_l2_squared(std::span<const Complex> z, double tau, std::span<const Complex> c, double sigma);

struct ProxOptions {
  int max_iter = 500;
  double tol = 1e-8;
};

struct ProxResult {
  CVec x;
  int iterations = 0;
  bool converged = true;
};

/// argmin_u tau sum_g w_g ||(K u)_g|| + 1/2 ||u - z||^2 by accelerated
/// projected gradient on the dual, step 1/||K||^2.
ProxResult prox_group_l1_composed(std::span<const Complex> z, double tau, const LinOp& K, double K_norm_sq,
                                  std::span<const double> w, std::size_t n_groups, int group_size,
                                  const ProxOptions& opts = {});

/// prox of tau * TV with area weights w (spin-0 maps).
ProxResult prox_tv(const SphMap& z, double tau, std::span<const double> w, const ProxOptions& opts = {});

enum class RegKind { weighted_l1, analysis_l1, tv, l2_squared };

const char* to_string(RegKind kind);

class Regularizer {
public:
  /// g(x) = sum_i w_i |x_i| over the optimization variable itself.
  static Regularizer weighted_l1(RVec weights);
  /// g(x) = sum_i w_i |(K x)_i|, e.g. K = Psi^-1 for the analysis setting.
  static Regularizer analysis_l1(LinOp K, RVec weights);
  /// Isotropic area-weighted total variation of a spin-0 map.
  static Regularizer total_variation(const GridPtr& grid);
  /// g(x) = sum_i w_i |x_i|^2; empty weights mean 1.
  static Regularizer l2_squared(RVec weights, std::size_t n);

  RegKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return n_; }
  /// 1 for l1 and TV, 2 for squared l2.
  int homogeneity() const noexcept { return kind_ == RegKind::l2_squared ? 2 : 1; }

  double value(std::span<const Complex> x) const;
  /// out = prox_{tau g}(z). Returns false if an inner iteration hit its cap.
  bool prox(std::span<const Complex> z, double tau, std::span<Complex> out) const;

  /// Linear part K, absent when K is the identity.
  const std::optional<LinOp>& transform() const noexcept { return K_; }
  double transform_norm_sq() const noexcept { return K_norm_sq_; }
  std::size_t n_groups() const noexcept { return n_groups_; }
  int group_size() const noexcept { return group_size_; }
  const RVec& weights() const noexcept { return w_; }
  /// phi(v) on the transform output.
  double outer_value(std::span<const Complex> v) const;
  /// prox_{tau phi}(v), separable.
  void outer_prox(std::span<const Complex> v, double tau, std::span<Complex> out) const;

  ProxOptions inner;

private:
  RegKind kind_ = RegKind::weighted_l1;
  std::size_t n_ = 0;
  std::optional<LinOp> K_;
  double K_norm_sq_ = 1.0;
  RVec w_;
  std::size_t n_groups_ = 0;
  int group_size_ = 1;
};

}  // namespace s2opt
