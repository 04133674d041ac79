#include "s2opt/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "s2opt/error.hpp"

namespace s2opt {

const char* to_string(Setting s) { return s == Setting::analysis ? "analysis" : "synthesis"; }
const char* to_string(Formulation f) { return f == Formulation::unconstrained ? "unconstrained" : "constrained"; }

const char* to_string(Domain d) {
  switch (d) {
    case Domain::complex: return "complex";
    case Domain::real: return "real";
    case Domain::nonnegative: return "nonnegative";
  }
  return "?";
}

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::forward_backward: return "forward-backward";
    case Algorithm::primal_dual: return "primal-dual";
    case Algorithm::admm: return "admm";
  }
  return "?";
}

std::size_t Problem::variable_size() const { return setting == Setting::synthesis ? psi->in().size : phi.in().size; }

std::size_t Problem::real_dimension() const {
  return domain == Domain::complex ? 2 * variable_size() : variable_size();
}

LinOp Problem::effective_operator() const {
  if (setting == Setting::synthesis) return compose({*psi, phi});
  if (bandlimit) return compose({*bandlimit, phi});
  return phi;
}

CVec Problem::signal(std::span<const Complex> z) const {
  if (setting == Setting::synthesis) return psi->apply(z);
  if (bandlimit) return bandlimit->apply(z);
  return CVec(z.begin(), z.end());
}

void Problem::validate() const {
  require(sigma > 0.0 && std::isfinite(sigma), ErrorCode::invalid_parameter, "noise sigma must be positive");
  require(y.size() == phi.out().size, ErrorCode::dimension_error, "data length differs from measurement operator");
  require(data_weights.empty() || data_weights.size() == y.size(), ErrorCode::dimension_error,
          "data weight length differs from data");
  for (double w : data_weights) require(w > 0.0, ErrorCode::invalid_parameter, "data weights must be positive");
  if (setting == Setting::synthesis) {
    require(psi.has_value(), ErrorCode::invalid_parameter, "synthesis setting needs a dictionary");
    require(psi->out() == phi.in(), ErrorCode::composition_error, "dictionary output differs from operator input");
    require(!bandlimit.has_value(), ErrorCode::invalid_parameter, "bandlimiting pre-operator is analysis only");
  } else if (bandlimit) {
    require(bandlimit->out() == phi.in() && bandlimit->in() == phi.in(), ErrorCode::composition_error,
            "bandlimiting operator must map the signal space to itself");
  }
  require(reg.size() == variable_size(), ErrorCode::dimension_error, "regularizer size differs from variable");
  if (formulation == Formulation::unconstrained) {
    require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::invalid_parameter, "lambda must be >= 0");
  } else {
    require(delta > 0.0 && std::isfinite(delta), ErrorCode::invalid_radius, "delta must be positive");
  }
}

void project_domain(Domain d, std::span<Complex> z) {
  if (d == Domain::complex) return;
  for (auto& v : z) v = Complex(d == Domain::nonnegative ? std::max(v.real(), 0.0) : v.real(), 0.0);
}

namespace {

// Whitened data term: f(z) = ||B z - yt||^2 / (2 sigma^2), B = sqrt(omega) A.
struct Prepared {
  LinOp B;
  CVec yt;
  double B_norm_sq = 0.0;
  double radius = 0.0;  // sqrt(2 sigma^2 delta)
};

Prepared prepare(const Problem& p) {
  p.validate();
  Prepared q;
  LinOp A = p.effective_operator();
  if (p.data_weights.empty()) {
    q.B = A;
    q.yt = p.y;
  } else {
    RVec sw(p.data_weights.size());
    for (std::size_t i = 0; i < sw.size(); ++i) sw[i] = std::sqrt(p.data_weights[i]);
    auto shared = std::make_shared<const RVec>(sw);
    auto mul = [shared](std::span<const Complex> x, std::span<Complex> y) {
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = (*shared)[i] * x[i];
    };
    q.B = compose({A, LinOp("omega^1/2", A.out(), A.out(), mul, mul)});
    q.yt.resize(p.y.size());
    for (std::size_t i = 0; i < sw.size(); ++i) q.yt[i] = sw[i] * p.y[i];
  }
  q.B_norm_sq = operator_norm_squared(q.B);
  q.radius = std::sqrt(2.0 * p.sigma * p.sigma * p.delta);
  return q;
}

double fidelity(const Problem& p, const Prepared& q, std::span<const Complex> z, CVec* residual = nullptr) {
  CVec r = subtract(q.B.apply(z), q.yt);
  const double f = norm2_squared(r) / (2.0 * p.sigma * p.sigma);
  if (residual) *residual = std::move(r);
  return f;
}

double objective_with(const Problem& p, const Prepared& q, std::span<const Complex> z, double lambda) {
  if (p.formulation == Formulation::constrained) return p.reg.value(z);
  return fidelity(p, q, z) + (lambda == 0.0 ? 0.0 : lambda * p.reg.value(z));
}

double rel_change(std::span<const Complex> a, std::span<const Complex> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::norm(a[i] - b[i]);
  const double n = norm2(a);
  return n > 0.0 ? std::sqrt(d) / n : std::sqrt(d);
}

double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s > 0.0 ? std::abs(a - b) / s : 0.0;
}

// prox of tau g + indicator(domain), exact for separable g and real-linear K.
bool prox_reg(const Problem& p, std::span<const Complex> v, double tau, std::span<Complex> out) {
  CVec w(v.begin(), v.end());
  project_domain(p.domain, w);
  bool ok = true;
  if (tau > 0.0) {
    ok = p.reg.prox(w, tau, out);
  } else {
    std::copy(w.begin(), w.end(), out.begin());
  }
  project_domain(p.domain, out);
  return ok;
}

// prox of s (c phi)^* via Moreau: w - s prox_{c phi / s}(w / s).
void prox_conjugate_outer(const Regularizer& reg, double c, std::span<const Complex> w, double s,
                          std::span<Complex> out) {
  CVec scaled_w(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) scaled_w[i] = w[i] / s;
  CVec pr(w.size());
  reg.outer_prox(scaled_w, c / s, pr);
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] - s * pr[i];
}

// prox of s iota_ball^* with ball centre yt and radius r.
void prox_conjugate_ball(std::span<const Complex> w, double s, std::span<const Complex> yt, double r,
                         std::span<Complex> out) {
  CVec scaled_w(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) scaled_w[i] = w[i] / s;
  const CVec pr = project_l2_ball(scaled_w, yt, r);
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] - s * pr[i];
}

// Pull a constrained iterate into the f-ball: CGLS towards a least-squares
// point, then bisection along the segment for the smallest feasible step.
bool restore_feasibility(const Problem& p, const Prepared& q, CVec& z) {
  const double target = q.radius * (1.0 - 1e-9);
  CVec r = subtract(q.yt, q.B.apply(z));
  if (norm2(r) <= q.radius) return true;
  const bool real = p.domain != Domain::complex;
  CVec ls = z;
  CVec s = q.B.adjoint(r);
  project_domain(real ? Domain::real : Domain::complex, s);
  CVec d = s;
  double gamma = norm2_squared(s);
  for (int it = 0; it < 500 && norm2(r) > target * 0.5 && gamma > 0.0; ++it) {
    const CVec Bd = q.B.apply(d);
    const double bd = norm2_squared(Bd);
    if (bd == 0.0) break;
    const double a = gamma / bd;
    axpy(a, d, ls);
    axpy(-a, Bd, r);
    s = q.B.adjoint(r);
    project_domain(real ? Domain::real : Domain::complex, s);
    const double gamma_new = norm2_squared(s);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = s[i] + (gamma_new / gamma) * d[i];
    gamma = gamma_new;
  }
  const auto point = [&](double t) {
    CVec v(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) v[i] = z[i] + t * (ls[i] - z[i]);
    project_domain(p.domain, v);
    return v;
  };
  const auto resid = [&](const CVec& v) { return norm2(subtract(q.B.apply(v), q.yt)); };
  if (resid(point(1.0)) > target) return false;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (resid(point(mid)) <= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  z = point(hi);
  return true;
}

// Restores feasibility of a constrained iterate; the trace ends at the
// returned point.
void finish_constrained(const Problem& p, const Prepared& q, SolveResult& res, CVec& z) {
  if (p.formulation != Formulation::constrained) return;
  const CVec before = z;
  if (!restore_feasibility(p, q, z)) res.converged = false;
  if (z != before && !res.objective.empty()) res.objective.back() = p.reg.value(z);
}

void record(SolveResult& res, const SolverOptions& o, int it, double h, double change, double pr, double dr) {
  res.objective.push_back(h);
  res.primal_residual.push_back(pr);
  res.dual_residual.push_back(dr);
  res.iterations = it;
  if (o.on_iteration) o.on_iteration({it, h, change, pr, dr});
}

void finish(const Problem& p, const Prepared& q, SolveResult& res, double lambda, std::uint64_t start_count) {
  res.lambda = lambda;
  res.x = p.signal(res.z);
  res.fidelity = fidelity(p, q, res.z);
  res.operator_applications = linop_evaluations() - start_count;
}

// Hierarchical lambda step, run every `period` iterations and whenever the
// iterate has settled. Returns true if lambda moved.
bool maybe_update_lambda(const Problem& p, const SolverOptions& o, int it, bool settled, std::span<const Complex> z,
                         double& lambda, SolveResult& res) {
  if (!o.lambda_update.enabled || p.formulation != Formulation::unconstrained) return false;
  if (!settled && it % std::max(o.lambda_update.period, 1) != 0) return false;
  const double next = update_lambda_hierarchical(p.reg.value(z), p.real_dimension(), p.reg.homogeneity(),
                                                 o.lambda_update.alpha_h, o.lambda_update.beta_h);
  const bool changed = rel_diff(next, lambda) > 1e-10;
  if (res.lambda_trace.empty()) res.lambda_trace.push_back(lambda);
  res.lambda_trace.push_back(next);
  lambda = next;
  return changed;
}

}  // namespace

double data_fidelity(const Problem& p, std::span<const Complex> z) {
  const auto q = prepare(p);
  return fidelity(p, q, z);
}

double objective(const Problem& p, std::span<const Complex> z) {
  p.validate();
  require(z.size() == p.variable_size(), ErrorCode::dimension_error, "variable length mismatch");
  if (p.formulation == Formulation::constrained) return p.reg.value(z);
  CVec r = subtract(p.effective_operator().apply(z), p.y);
  double f = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) f += (p.data_weights.empty() ? 1.0 : p.data_weights[i]) * std::norm(r[i]);
  f /= 2.0 * p.sigma * p.sigma;
  return f + (p.lambda == 0.0 ? 0.0 : p.lambda * p.reg.value(z));
}

double update_lambda_hierarchical(double g_val, std::size_t N, int k, double alpha_h, double beta_h) {
  require(g_val >= 0.0 && N >= 1 && (k == 1 || k == 2), ErrorCode::invalid_parameter,
          "lambda update needs g >= 0, N >= 1 and k in {1, 2}");
  const double num = static_cast<double>(N) / k + alpha_h - 1.0;
  const double den = g_val + beta_h;
  constexpr double lambda_max = 1e300;
  if (den <= 0.0) return lambda_max;
  return std::min(num / den, lambda_max);
}

SolveResult forward_backward(const Problem& p, const SolverOptions& o) {
  require(p.formulation == Formulation::unconstrained, ErrorCode::invalid_parameter,
          "forward-backward handles the unconstrained formulation");
  const auto start = linop_evaluations();
  const auto q = prepare(p);
  const double sig2 = p.sigma * p.sigma;
  const double lip = q.B_norm_sq / sig2;

  SolveResult res;
  double step = o.step > 0.0 ? o.step : (lip > 0.0 ? 1.0 / lip : 1.0);
  while (lip > 0.0 && step > 2.0 / lip) {
    step *= 0.5;
    ++res.step_halvings;
  }

  double lambda = p.lambda;
  const std::size_t n = p.variable_size();
  CVec z(n), v(n), z_new(n), w(n), r;
  project_domain(p.domain, z);
  v = z;
  const double h_start = objective_with(p, q, z, lambda);
  double h_prev = h_start;
  double t = 1.0;

  for (int it = 1; it <= o.max_iter; ++it) {
    fidelity(p, q, v, &r);
    const CVec grad = q.B.adjoint(r);
    for (std::size_t i = 0; i < n; ++i) w[i] = v[i] - (step / sig2) * grad[i];
    res.inner_converged &= prox_reg(p, w, step * lambda, z_new);
    const double h = objective_with(p, q, z_new, lambda);

    if (!std::isfinite(h) || h > 10.0 * std::max(h_start, std::abs(h_prev)) + 1e-300) {
      step *= 0.5;
      ++res.step_halvings;
      require(res.step_halvings < 60, ErrorCode::numerical_failure, "forward-backward diverged");
      v = z;
      t = 1.0;
      continue;
    }

    const double change = rel_change(z_new, z);
    if (o.accelerate) {
      // Adaptive restart: drop momentum when it points uphill.
      double uphill = 0.0;
      for (std::size_t i = 0; i < n; ++i) uphill += std::real(std::conj(v[i] - z_new[i]) * (z_new[i] - z[i]));
      if (uphill > 0.0) t = 1.0;
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double beta = (t - 1.0) / t_next;
      for (std::size_t i = 0; i < n; ++i) v[i] = z_new[i] + beta * (z_new[i] - z[i]);
      t = t_next;
    } else {
      v = z_new;
    }
    z.swap(z_new);
    const double obj_change = rel_diff(h, h_prev);
    h_prev = h;
    record(res, o, it, h, change, change, 0.0);

    const bool settled = change < o.rel_tol && obj_change < o.obj_tol;
    if (maybe_update_lambda(p, o, it, settled, z, lambda, res)) {
      t = 1.0;
      v = z;
      h_prev = objective_with(p, q, z, lambda);
      continue;
    }
    if (settled) {
      res.converged = true;
      break;
    }
  }
  res.z = std::move(z);
  finish(p, q, res, lambda, start);
  return res;
}

SolveResult primal_dual(const Problem& p, const SolverOptions& o) {
  const auto start = linop_evaluations();
  const auto q = prepare(p);
  const double sig2 = p.sigma * p.sigma;
  const std::size_t n = p.variable_size();
  const Regularizer& reg = p.reg;
  const LinOp K = reg.transform() ? *reg.transform() : identity_op(Space{SpaceKind::generic, 0, 0, n});
  const double k2 = reg.transform() ? reg.transform_norm_sq() : 1.0;
  const bool constrained = p.formulation == Formulation::constrained;
  const double lip = constrained ? 0.0 : q.B_norm_sq / sig2;

  // Dual blocks: u for g o K, and (constrained) v for the ball on B.
  double tau = 0.0, s1 = 0.0, s2 = 0.0;
  const double joint = constrained ? k2 + q.B_norm_sq : k2;
  if (o.tau > 0.0 && o.sigma_dual > 0.0) {
    tau = o.tau;
    s1 = s2 = o.sigma_dual;
    require(tau * s1 * joint <= 1.0 + 1e-12, ErrorCode::stability_error,
            "primal-dual step product exceeds 1/||K||^2");
    require(constrained || 1.0 / tau - s1 * k2 >= lip / 2.0, ErrorCode::stability_error,
            "primal step too large for the smooth data term");
  } else if (constrained) {
    // Small primal step, large dual step: the dual blocks carry the ball
    // constraint and converge slowly otherwise.
    tau = 0.1 / std::sqrt(joint);
    s1 = s2 = 0.99 / (tau * joint);
  } else if (lip > 0.0) {
    tau = 1.5 / lip;
    s1 = 0.99 * (1.0 / tau - lip / 2.0) / k2;
  } else {
    tau = 0.99 / std::sqrt(k2);
    s1 = 1.0 / std::sqrt(k2);
  }

  const double lambda0 = constrained ? 1.0 : p.lambda;
  double lambda = lambda0;
  SolveResult res;
  CVec z(n), z_new(n), zbar(n);
  CVec u(K.out().size), v(constrained ? q.yt.size() : 0);
  CVec r;
  double h_prev = objective_with(p, q, z, lambda);

  for (int it = 1; it <= o.max_iter; ++it) {
    CVec g = K.adjoint(u);
    if (constrained) {
      axpy(1.0, q.B.adjoint(v), g);
    } else {
      fidelity(p, q, z, &r);
      axpy(1.0 / sig2, q.B.adjoint(r), g);
    }
    for (std::size_t i = 0; i < n; ++i) z_new[i] = z[i] - tau * g[i];
    project_domain(p.domain, z_new);
    for (std::size_t i = 0; i < n; ++i) zbar[i] = 2.0 * z_new[i] - z[i];

    const CVec u_old = u;
    CVec wu = K.apply(zbar);
    for (std::size_t i = 0; i < u.size(); ++i) wu[i] = u[i] + s1 * wu[i];
    prox_conjugate_outer(reg, lambda, wu, s1, u);
    double dual_res = norm2(subtract(u, u_old));
    double primal_res = 0.0;
    if (constrained) {
      const CVec v_old = v;
      CVec wv = q.B.apply(zbar);
      for (std::size_t i = 0; i < v.size(); ++i) wv[i] = v[i] + s2 * wv[i];
      prox_conjugate_ball(wv, s2, q.yt, q.radius, v);
      dual_res += norm2(subtract(v, v_old));
      primal_res = std::max(0.0, norm2(subtract(q.B.apply(z_new), q.yt)) - q.radius);
    }

    const double change = rel_change(z_new, z);
    z.swap(z_new);
    const double h = objective_with(p, q, z, lambda);
    require(std::isfinite(h), ErrorCode::numerical_failure, "primal-dual produced a non-finite objective");
    const double obj_change = rel_diff(h, h_prev);
    h_prev = h;
    record(res, o, it, h, change, constrained ? primal_res : change, dual_res);

    const bool feasible = !constrained || primal_res <= q.radius * 1e-6;
    const bool settled = change < o.rel_tol && obj_change < o.obj_tol && feasible;
    if (maybe_update_lambda(p, o, it, settled, z, lambda, res)) {
      h_prev = objective_with(p, q, z, lambda);
      continue;
    }
    if (settled) {
      res.converged = true;
      break;
    }
  }
  finish_constrained(p, q, res, z);
  res.z = std::move(z);
  finish(p, q, res, lambda, start);
  return res;
}

SolveResult admm(const Problem& p, const SolverOptions& o) {
  const double rho = o.rho ? *o.rho : 0.1 / (p.sigma * p.sigma);
  require(rho > 0.0 && std::isfinite(rho), ErrorCode::invalid_parameter, "ADMM penalty rho must be positive");
  const auto start = linop_evaluations();
  const auto q = prepare(p);
  const double sig2 = p.sigma * p.sigma;
  const bool constrained = p.formulation == Formulation::constrained;
  const std::size_t n = p.variable_size();
  const std::size_t m = q.yt.size();
  const double mu = q.B_norm_sq > 0.0 ? 0.99 / (rho * q.B_norm_sq) : 1.0;

  // Split v = B z; scaled dual s. Linearized z-step with step mu.
  double lambda = constrained ? 1.0 : p.lambda;
  SolveResult res;
  CVec z(n), z_new(n), v(m), s(m), w(n);
  double h_prev = objective_with(p, q, z, lambda);
  const double c = 1.0 / (rho * sig2);

  for (int it = 1; it <= o.max_iter; ++it) {
    CVec Bz = q.B.apply(z);
    CVec t(m);
    for (std::size_t i = 0; i < m; ++i) t[i] = Bz[i] - v[i] + s[i];
    const CVec grad = q.B.adjoint(t);
    for (std::size_t i = 0; i < n; ++i) w[i] = z[i] - mu * rho * grad[i];
    res.inner_converged &= prox_reg(p, w, mu * lambda, z_new);

    Bz = q.B.apply(z_new);
    const CVec v_old = v;
    for (std::size_t i = 0; i < m; ++i) v[i] = Bz[i] + s[i];
    if (constrained) {
      v = project_l2_ball(v, q.yt, q.radius);
    } else {
      for (std::size_t i = 0; i < m; ++i) v[i] = (v[i] + c * q.yt[i]) / (1.0 + c);
    }
    double primal_res = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const Complex d = Bz[i] - v[i];
      s[i] += d;
      primal_res += std::norm(d);
    }
    primal_res = std::sqrt(primal_res);
    const double dual_res = rho * norm2(q.B.adjoint(subtract(v, v_old)));

    const double change = rel_change(z_new, z);
    z.swap(z_new);
    const double h = objective_with(p, q, z, lambda);
    require(std::isfinite(h), ErrorCode::numerical_failure, "ADMM produced a non-finite objective");
    const double obj_change = rel_diff(h, h_prev);
    h_prev = h;
    record(res, o, it, h, change, primal_res, dual_res);

    const double scale = std::max(norm2(Bz), 1e-300);
    const bool settled = change < o.rel_tol && obj_change < o.obj_tol && primal_res <= 1e-6 * scale;
    if (maybe_update_lambda(p, o, it, settled, z, lambda, res)) {
      h_prev = objective_with(p, q, z, lambda);
      continue;
    }
    if (settled) {
      res.converged = true;
      break;
    }
  }
  finish_constrained(p, q, res, z);
  res.z = std::move(z);
  finish(p, q, res, lambda, start);
  return res;
}

SolveResult solve(Algorithm a, const Problem& p, const SolverOptions& o) {
  switch (a) {
    case Algorithm::forward_backward: return forward_backward(p, o);
    case Algorithm::primal_dual: return primal_dual(p, o);
    case Algorithm::admm: return admm(p, o);
  }
  fail(ErrorCode::invalid_parameter, "unknown algorithm");
}

}  // namespace s2opt
