#pragma once

// Proximal solvers for
//   unconstrained:  min_z  f(z) + lambda g(z)
//   constrained:    min_z  g(z)  s.t.  f(z) <= delta
// with f(z) = 1/(2 sigma^2) sum_i omega_i |(A z - y)_i|^2. The variable z
// is the signal x in the analysis setting (A = Phi, or Phi P with an
// explicit bandlimiting pre-operator P) and the dictionary coefficients
// alpha in the synthesis setting (A = Phi Psi, x = Psi alpha).

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "s2opt/operators.hpp"
#include "s2opt/priors.hpp"

namespace s2opt {

enum class Setting { analysis, synthesis };
enum class Formulation { unconstrained, constrained };
enum class Domain { complex, real, nonnegative };

const char* to_string(Setting s);
const char* to_string(Formulation f);
const char* to_string(Domain d);

struct Problem {
  Setting setting = Setting::analysis;
  Formulation formulation = Formulation::unconstrained;
  Domain domain = Domain::complex;
  LinOp phi;                       // signal -> measurements
  std::optional<LinOp> psi;        // coefficients -> signal, synthesis only
  std::optional<LinOp> bandlimit;  // signal -> signal, analysis only
  CVec y;
  double sigma = 1.0;
  RVec data_weights;  // omega, empty means 1
  Regularizer reg;    // acts on the optimization variable
  double lambda = 0.0;
  double delta = 0.0;

  /// Size of the optimization variable.
  std::size_t variable_size() const;
  /// Real degrees of freedom of the variable.
  std::size_t real_dimension() const;
  /// A = Phi, Phi P or Phi Psi.
  LinOp effective_operator() const;
  /// Signal from the variable: z, P z or Psi z.
  CVec signal(std::span<const Complex> z) const;
  void validate() const;
};

double data_fidelity(const Problem& p, std::span<const Complex> z);
/// f + lambda g (unconstrained) or g (constrained).
double objective(const Problem& p, std::span<const Complex> z);
void project_domain(Domain d, std::span<Complex> z);

struct IterationInfo {
  int iteration = 0;
  double objective = 0.0;
  double rel_change = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

struct LambdaUpdate {
  bool enabled = false;
  double alpha_h = 1.0;
  double beta_h = 1e-8;
  int period = 10;  // outer iterations between updates
};

struct SolverOptions {
  int max_iter = 2000;
  double rel_tol = 1e-6;
  double obj_tol = 1e-8;
  bool accelerate = true;
  /// Forward-backward step; <= 0 selects 1/Lip(grad f).
  double step = 0.0;
  /// Primal-dual steps; <= 0 selects defaults satisfying the stability bound.
  double tau = 0.0;
  double sigma_dual = 0.0;
  /// ADMM penalty; unset selects 0.1 / sigma^2.
  std::optional<double> rho;
  LambdaUpdate lambda_update;
  std::function<void(const IterationInfo&)> on_iteration;
};

struct SolveResult {
  CVec z;  // optimization variable
  CVec x;  // signal
  std::vector<double> objective;
  std::vector<double> primal_residual;
  std::vector<double> dual_residual;
  int iterations = 0;
  bool converged = false;
  bool inner_converged = true;
  double lambda = 0.0;
  std::vector<double> lambda_trace;  // initial value then every update; empty when fixed
  double fidelity = 0.0;
  int step_halvings = 0;
  std::uint64_t operator_applications = 0;
};

/// lambda = (N/k + alpha_h - 1) / (g + beta_h); a huge finite value when
/// the denominator vanishes.
double update_lambda_hierarchical(double g_val, std::size_t N, int k, double alpha_h, double beta_h);

SolveResult forward_backward(const Problem& p, const SolverOptions& o = {});
SolveResult primal_dual(const Problem& p, const SolverOptions& o = {});
SolveResult admm(const Problem& p, const SolverOptions& o = {});

enum class Algorithm { forward_backward, primal_dual, admm };
const char* to_string(Algorithm a);
SolveResult solve(Algorithm a, const Problem& p, const SolverOptions& o = {});

}  // namespace s2opt
