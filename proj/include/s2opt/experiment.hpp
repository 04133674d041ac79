#pragma once

// Experiment harness: configuration, synthetic scenes, forward models,
// reconstruction, uncertainty products and run summaries.
//
// Scenarios:
//   topography    masked, blurred real field       D Y^-1 Theta Y
//   camera360     blurred piecewise-constant image Y^-1 Theta Y
//   cmb-wiener    masked Gaussian sky, Gaussian prior on whitened
//                 harmonic coefficients            D Y^-1 C^1/2
//   weak-lensing  shear from convergence           D 2Y^-1 W 0Y
// All randomness derives from the configured seed through CounterRng
// streams, so a config and seed fix every output bit.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "s2opt/operators.hpp"
#include "s2opt/solvers.hpp"
#include "s2opt/uq.hpp"

namespace s2opt {

enum class Scenario { topography, camera360, cmb_wiener, weak_lensing };
const char* to_string(Scenario s);

enum class PriorKind { wavelet_l1, l1, tv, l2 };
const char* to_string(PriorKind k);

struct FeatureSpec {
  double theta = 0.0;
  double phi = 0.0;
  double radius = 0.1;
};

struct UqConfig {
  double alpha = 0.01;
  PartitionKind partition = PartitionKind::rectangular;
  int blocks_theta = 8;
  int blocks_phi = 8;
  double cap_radius = 0.2;
  std::vector<std::pair<double, double>> cap_centres;
  LciMethod method = LciMethod::bisection;
  std::vector<FeatureSpec> features;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::topography;
  int L = 32;
  std::uint64_t seed = 0;
  // Noise: sigma if set, otherwise from snr_db.
  std::optional<double> sigma;
  double snr_db = 30.0;
  double mask_fraction = 0.0;
  double mask_band = 0.0;  // half-width of an equatorial cut, radians
  std::string mask_file;   // S2MAP pixel file, nonzero = observed
  std::string observations;  // S2MAP observed map replacing simulated data
  double beam_fwhm = 0.0;
  Formulation formulation = Formulation::unconstrained;
  Setting setting = Setting::analysis;
  bool explicit_bandlimit = false;  // analysis: x = P z with P = Y^-1 Y
  PriorKind prior = PriorKind::wavelet_l1;
  double wavelet_dilation = 2.0;
  int wavelet_directions = 1;
  int wavelet_j0 = 0;
  std::optional<double> lambda;  // unset: hierarchical update
  std::optional<double> delta;   // unset: chi-squared f-ball
  std::optional<Algorithm> algorithm;  // unset: chosen from the problem
  int max_iter = 3000;
  double rel_tol = 1e-5;
  std::string power_spectrum;
  UqConfig uq;
  std::string output = "out";
};

/// Scenario defaults first, then the JSON fields (snake_case). Unknown keys,
/// wrong types and out-of-range values throw config-error.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& c);

/// 20 log10(||x|| / ||x - x_est||) with area-weighted l2 norms when
/// `area` is non-empty; capped at 300 dB.
double snr_db(std::span<const Complex> x, std::span<const Complex> x_est, std::span<const double> area = {});
constexpr double kSnrCap = 300.0;

struct Simulation {
  ExperimentConfig config;
  GridPtr grid;
  Mask mask;
  int signal_spin = 0;
  SphMap truth;     // signal-space ground truth
  CVec truth_variable;  // ground truth in the variable space when known
  Problem problem;  // y, sigma, operators and prior; lambda/delta resolved
  std::optional<LinOp> dictionary_inverse;  // signal -> variable, synthesis
  bool auto_lambda = false;
  Algorithm algorithm = Algorithm::forward_backward;
};

/// Draws the ground truth, builds the forward model and observes.
Simulation simulate(const ExperimentConfig& cfg);

/// Observations as a map on the signal grid: D^dag y for pixel models.
SphMap observed_map(const Simulation& sim);

struct RunReport {
  SolveResult solve;
  SphMap estimate;
  double snr_in = 0.0;
  double snr_out = 0.0;
  double wall_seconds = 0.0;
};

/// Runs the configured solver; `progress` receives every iteration.
RunReport reconstruct(const Simulation& sim, std::function<void(const IterationInfo&)> progress = {});

struct LciReport {
  CredibleThreshold threshold;
  Partition partition;
  LciMap lci;
  SphMap lengths;
  double wall_seconds = 0.0;
};

/// Local credible intervals around the estimate (analysis setting only).
LciReport run_lci(const Simulation& sim, const RunReport& run);

struct FeatureVerdict {
  FeatureSpec feature;
  double h_surrogate = 0.0;
  Verdict verdict = Verdict::indeterminate;
};

struct HypothesisReport {
  CredibleThreshold threshold;
  std::vector<FeatureVerdict> verdicts;
};

/// Feature-removal tests for the configured features: each cap is filled
/// with the mean of the annulus out to twice its radius.
HypothesisReport run_hypothesis_tests(const Simulation& sim, const RunReport& run);

nlohmann::json summary_json(const Simulation& sim, const RunReport& run);
nlohmann::json summary_json(const LciReport& r);
nlohmann::json summary_json(const HypothesisReport& r);
void write_json(const std::string& path, const nlohmann::json& j);

}  // namespace s2opt
