#include "s2opt/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>

#include "s2opt/error.hpp"
#include "s2opt/mapfile.hpp"
#include "s2opt/priors.hpp"
#include "s2opt/random.hpp"
#include "s2opt/sht.hpp"
#include "s2opt/wavelet.hpp"

namespace s2opt {

using nlohmann::json;

namespace {

// CounterRng streams drawn from the run seed.
constexpr std::uint64_t kTruthStream = 1;
constexpr std::uint64_t kMaskStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

template <class E>
E parse_enum(const json& v, const std::map<std::string, E>& names, const std::string& key) {
  require(v.is_string(), ErrorCode::config_error, key + " must be a string");
  const auto it = names.find(v.get<std::string>());
  if (it == names.end()) {
    std::string allowed;
    for (const auto& [n, e] : names) allowed += (allowed.empty() ? "" : ", ") + n;
    fail(ErrorCode::config_error, key + " must be one of " + allowed);
  }
  return it->second;
}

const std::map<std::string, Scenario> kScenarios{{"topography", Scenario::topography},
                                                 {"camera360", Scenario::camera360},
                                                 {"cmb-wiener", Scenario::cmb_wiener},
                                                 {"weak-lensing", Scenario::weak_lensing}};
const std::map<std::string, PriorKind> kPriors{
    {"wavelet-l1", PriorKind::wavelet_l1}, {"l1", PriorKind::l1}, {"tv", PriorKind::tv}, {"l2", PriorKind::l2}};
const std::map<std::string, Formulation> kFormulations{{"unconstrained", Formulation::unconstrained},
                                                       {"constrained", Formulation::constrained}};
const std::map<std::string, Setting> kSettings{{"analysis", Setting::analysis}, {"synthesis", Setting::synthesis}};
const std::map<std::string, Algorithm> kAlgorithms{{"forward-backward", Algorithm::forward_backward},
                                                   {"primal-dual", Algorithm::primal_dual},
                                                   {"admm", Algorithm::admm}};
const std::map<std::string, PartitionKind> kPartitions{{"rectangular", PartitionKind::rectangular},
                                                       {"cap", PartitionKind::cap}};
const std::map<std::string, LciMethod> kMethods{{"bisection", LciMethod::bisection},
                                                {"gaussian-analytic", LciMethod::gaussian_analytic},
                                                {"lasso-analytic", LciMethod::lasso_analytic},
                                                {"lasso-hybrid", LciMethod::lasso_refined}};

using Handlers = std::map<std::string, std::function<void(const json&)>>;

void dispatch(const json& obj, const Handlers& h, const std::string& where) {
  require(obj.is_object(), ErrorCode::config_error, where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    const auto it = h.find(key);
    require(it != h.end(), ErrorCode::config_error, "unknown key '" + key + "' in " + where);
    try {
      it->second(value);
    } catch (const json::exception& e) {
      fail(ErrorCode::config_error, "bad value for '" + key + "': " + e.what());
    }
  }
}

double number(const json& v, const std::string& key) {
  require(v.is_number(), ErrorCode::config_error, key + " must be a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& key) {
  require(v.is_number_integer(), ErrorCode::config_error, key + " must be an integer");
  return v.get<int>();
}

void apply_scenario_defaults(ExperimentConfig& c) {
  switch (c.scenario) {
    case Scenario::topography:
      c.mask_fraction = 0.5;
      c.beam_fwhm = 0.1;
      c.prior = PriorKind::wavelet_l1;
      break;
    case Scenario::camera360:
      c.beam_fwhm = 0.1;
      c.formulation = Formulation::constrained;
      c.prior = PriorKind::tv;
      break;
    case Scenario::cmb_wiener:
      c.mask_band = 0.2;
      c.setting = Setting::synthesis;
      c.prior = PriorKind::l2;
      c.lambda = 1.0;
      break;
    case Scenario::weak_lensing:
      c.mask_fraction = 0.3;
      c.prior = PriorKind::wavelet_l1;
      break;
  }
}

void validate(const ExperimentConfig& c) {
  auto check = [](bool ok, const std::string& what) { require(ok, ErrorCode::config_error, what); };
  check(c.L >= 4 && c.L <= 1024, "bandlimit must lie in [4, 1024]");
  check(!c.sigma || *c.sigma > 0.0, "sigma must be positive");
  check(std::isfinite(c.snr_db), "snr_db must be finite");
  check(c.mask_fraction >= 0.0 && c.mask_fraction < 1.0, "mask_fraction must lie in [0, 1)");
  check(c.mask_band >= 0.0 && c.mask_band < 0.5 * std::numbers::pi, "mask_band must lie in [0, pi/2)");
  check(c.beam_fwhm >= 0.0, "beam_fwhm must be non-negative");
  check(c.wavelet_dilation > 1.0, "wavelet dilation must exceed 1");
  check(c.wavelet_directions >= 1 && c.wavelet_directions < c.L, "wavelet directions must lie in [1, L)");
  check(c.wavelet_j0 >= 0, "wavelet j0 must be non-negative");
  check(!c.lambda || *c.lambda >= 0.0, "lambda must be non-negative");
  check(!c.delta || *c.delta > 0.0, "delta must be positive");
  check(c.max_iter >= 1, "max_iter must be positive");
  check(c.rel_tol > 0.0, "rel_tol must be positive");
  check(c.uq.alpha > 0.0 && c.uq.alpha < 1.0, "uq alpha must lie in (0, 1)");
  check(c.uq.blocks_theta >= 1 && c.uq.blocks_phi >= 1, "uq blocks must be positive");
  check(c.uq.cap_radius >= 0.0, "uq cap_radius must be non-negative");
  for (const auto& f : c.uq.features) check(f.radius > 0.0, "feature radius must be positive");

  if (c.scenario == Scenario::cmb_wiener) {
    check(c.setting == Setting::synthesis, "cmb-wiener runs in the synthesis setting");
    check(c.prior == PriorKind::l2, "cmb-wiener uses the Gaussian (l2) prior");
  } else {
    check(c.prior != PriorKind::l2 || c.setting == Setting::analysis, "l2 prior needs the analysis setting");
  }
  if (c.setting == Setting::synthesis && c.scenario != Scenario::cmb_wiener)
    check(c.prior == PriorKind::wavelet_l1, "synthesis setting needs the wavelet-l1 prior");
  check(!c.explicit_bandlimit || c.setting == Setting::analysis, "explicit_bandlimit applies to the analysis setting");
  check(!(c.algorithm == Algorithm::forward_backward && c.formulation == Formulation::constrained),
        "forward-backward cannot solve the constrained formulation");
}

// Coefficients of a real spin-0 field with E|f_lm|^2 = C_l.
HarmonicCoeffs real_field(int L, const HarmonicScaling& cl, CounterRng& rng) {
  HarmonicCoeffs c(L, 0);
  for (int l = 0; l < L; ++l) {
    const double s = std::sqrt(cl.b[l]);
    c.at(l, 0) = s * rng.normal();
    for (int m = 1; m <= l; ++m) {
      const Complex z = s * rng.complex_normal();
      c.at(l, m) = z;
      c.at(l, -m) = ((m % 2 == 0) ? 1.0 : -1.0) * std::conj(z);
    }
  }
  return c;
}

double angular_distance(double t1, double p1, double t2, double p2) {
  const double c = std::cos(t1) * std::cos(t2) + std::sin(t1) * std::sin(t2) * std::cos(p1 - p2);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

std::pair<double, double> random_direction(CounterRng& rng) {
  return {std::acos(2.0 * rng.uniform() - 1.0), 2.0 * std::numbers::pi * rng.uniform()};
}

SphMap bandlimit(const SphMap& x) { return sht_inverse(sht_forward(x), x.grid); }

HarmonicScaling spectrum(const ExperimentConfig& c) {
  return c.power_spectrum.empty() ? default_power_spectrum(c.L) : read_power_spectrum(c.power_spectrum, c.L);
}

// Red-spectrum field plus three compact bumps, bandlimited.
SphMap topography_truth(const GridPtr& g, const ExperimentConfig& c, CounterRng& rng) {
  SphMap x = sht_inverse(real_field(c.L, spectrum(c), rng), g);
  const double width = 2.0 * std::numbers::pi / c.L;
  for (int k = 0; k < 3; ++k) {
    const auto [t0, p0] = random_direction(rng);
    const double amp = 3.0 * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    for (int t = 0; t < g->n_theta(); ++t)
      for (int p = 0; p < g->n_phi(); ++p) {
        const double d = angular_distance(t0, p0, g->thetas()[t], g->phis()[p]);
        x.at(t, p) += amp * std::exp(-0.5 * d * d / (width * width));
      }
  }
  for (auto& v : x.values) v = v.real();
  return bandlimit(x);
}

// Piecewise-constant caps painted over a zero background.
SphMap camera_truth(const GridPtr& g, CounterRng& rng) {
  SphMap x(g, 0);
  for (int k = 0; k < 8; ++k) {
    const auto [t0, p0] = random_direction(rng);
    const double r = 0.25 + 0.55 * rng.uniform();
    const double level = 2.0 * rng.uniform() - 1.0;
    for (int t = 0; t < g->n_theta(); ++t)
      for (int p = 0; p < g->n_phi(); ++p)
        if (angular_distance(t0, p0, g->thetas()[t], g->phis()[p]) <= r) x.at(t, p) = level;
  }
  return x;
}

// Mean-subtracted exponential of a Gaussian field, bandlimited.
SphMap lensing_truth(const GridPtr& g, const ExperimentConfig& c, CounterRng& rng) {
  SphMap x = sht_inverse(real_field(c.L, spectrum(c), rng), g);
  double mean = 0.0, area = 0.0;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    x.values[i] = std::exp(0.5 * x.values[i].real());
    mean += g->pixel_areas()[i] * x.values[i].real();
    area += g->pixel_areas()[i];
  }
  for (auto& v : x.values) v -= mean / area;
  return bandlimit(x);
}

Mask build_mask(const SphGrid& g, const ExperimentConfig& c) {
  std::vector<std::uint8_t> keep(g.size(), 1);
  auto intersect = [&](const Mask& m) {
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] &= m.keep[i];
  };
  if (c.mask_fraction > 0.0) intersect(random_mask(g, c.mask_fraction, CounterRng(c.seed, kMaskStream).next_u64()));
  if (c.mask_band > 0.0) intersect(band_mask(g, c.mask_band));
  if (!c.mask_file.empty()) {
    const SphMap m = to_sph_map(read_map_file(c.mask_file));
    require(m.grid->L() == g.L(), ErrorCode::config_error, "mask file bandlimit differs from the configuration");
    std::vector<std::uint8_t> flags(g.size());
    for (std::size_t i = 0; i < flags.size(); ++i) flags[i] = m.values[i] != Complex{} ? 1 : 0;
    intersect(Mask::from_flags(std::move(flags)));
  }
  const Mask out = Mask::from_flags(std::move(keep));
  require(out.kept > 0, ErrorCode::config_error, "mask removes every pixel");
  return out;
}

Regularizer analysis_prior(const ExperimentConfig& c, const GridPtr& g,
                           const std::shared_ptr<const WaveletKernels>& k) {
  switch (c.prior) {
    case PriorKind::wavelet_l1:
      return Regularizer::analysis_l1(wavelet_analysis_op(g, k), wavelet_area_weights(*g, *k, 1.0));
    case PriorKind::l1:
      return Regularizer::weighted_l1(area_weights(*g, 1.0));
    case PriorKind::tv:
      return Regularizer::total_variation(g);
    case PriorKind::l2:
      return Regularizer::l2_squared(g->pixel_areas(), g->size());
  }
  fail(ErrorCode::config_error, "unknown prior");
}

std::size_t real_dofs(const CVec& y, bool complex_noise) { return complex_noise ? 2 * y.size() : y.size(); }

}  // namespace

const char* to_string(Scenario s) {
  for (const auto& [n, e] : kScenarios)
    if (e == s) return n.c_str();
  return "?";
}

const char* to_string(PriorKind k) {
  for (const auto& [n, e] : kPriors)
    if (e == k) return n.c_str();
  return "?";
}

ExperimentConfig parse_config(const json& j) {
  require(j.is_object(), ErrorCode::config_error, "config must be a JSON object");
  ExperimentConfig c;
  if (j.contains("scenario")) c.scenario = parse_enum(j.at("scenario"), kScenarios, "scenario");
  apply_scenario_defaults(c);

  auto parse_uq = [&c](const json& u) {
    dispatch(u,
             {{"alpha", [&](const json& v) { c.uq.alpha = number(v, "alpha"); }},
              {"partition", [&](const json& v) { c.uq.partition = parse_enum(v, kPartitions, "partition"); }},
              {"blocks",
               [&](const json& v) {
                 require(v.is_array() && v.size() == 2, ErrorCode::config_error, "blocks must be [n_theta, n_phi]");
                 c.uq.blocks_theta = integer(v[0], "blocks");
                 c.uq.blocks_phi = integer(v[1], "blocks");
               }},
              {"cap_radius", [&](const json& v) { c.uq.cap_radius = number(v, "cap_radius"); }},
              {"cap_centres",
               [&](const json& v) {
                 require(v.is_array(), ErrorCode::config_error, "cap_centres must be a list of [theta, phi]");
                 c.uq.cap_centres.clear();
                 for (const auto& e : v) {
                   require(e.is_array() && e.size() == 2, ErrorCode::config_error, "cap centre must be [theta, phi]");
                   c.uq.cap_centres.emplace_back(number(e[0], "cap_centres"), number(e[1], "cap_centres"));
                 }
               }},
              {"method", [&](const json& v) { c.uq.method = parse_enum(v, kMethods, "method"); }},
              {"features",
               [&](const json& v) {
                 require(v.is_array(), ErrorCode::config_error, "features must be a list");
                 c.uq.features.clear();
                 for (const auto& e : v) {
                   FeatureSpec f;
                   dispatch(e,
                            {{"theta", [&](const json& x) { f.theta = number(x, "theta"); }},
                             {"phi", [&](const json& x) { f.phi = number(x, "phi"); }},
                             {"radius", [&](const json& x) { f.radius = number(x, "radius"); }}},
                            "feature");
                   c.uq.features.push_back(f);
                 }
               }}},
             "uq");
  };

  dispatch(j,
           {{"scenario", [](const json&) {}},
            {"bandlimit", [&](const json& v) { c.L = integer(v, "bandlimit"); }},
            {"seed",
             [&](const json& v) {
               require(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0),
                       ErrorCode::config_error, "seed must be a non-negative integer");
               c.seed = v.get<std::uint64_t>();
             }},
            {"sigma", [&](const json& v) { c.sigma = number(v, "sigma"); }},
            {"snr_db", [&](const json& v) { c.snr_db = number(v, "snr_db"); }},
            {"mask_fraction", [&](const json& v) { c.mask_fraction = number(v, "mask_fraction"); }},
            {"mask_band", [&](const json& v) { c.mask_band = number(v, "mask_band"); }},
            {"mask_file", [&](const json& v) { c.mask_file = v.get<std::string>(); }},
            {"observations", [&](const json& v) { c.observations = v.get<std::string>(); }},
            {"beam_fwhm", [&](const json& v) { c.beam_fwhm = number(v, "beam_fwhm"); }},
            {"formulation", [&](const json& v) { c.formulation = parse_enum(v, kFormulations, "formulation"); }},
            {"setting", [&](const json& v) { c.setting = parse_enum(v, kSettings, "setting"); }},
            {"explicit_bandlimit", [&](const json& v) { c.explicit_bandlimit = v.get<bool>(); }},
            {"regularizer", [&](const json& v) { c.prior = parse_enum(v, kPriors, "regularizer"); }},
            {"wavelet",
             [&](const json& v) {
               dispatch(v,
                        {{"dilation", [&](const json& x) { c.wavelet_dilation = number(x, "dilation"); }},
                         {"directions", [&](const json& x) { c.wavelet_directions = integer(x, "directions"); }},
                         {"j0", [&](const json& x) { c.wavelet_j0 = integer(x, "j0"); }}},
                        "wavelet");
             }},
            {"lambda",
             [&](const json& v) {
               if (v.is_string()) {
                 require(v.get<std::string>() == "auto", ErrorCode::config_error, "lambda must be a number or \"auto\"");
                 c.lambda.reset();
               } else {
                 c.lambda = number(v, "lambda");
               }
             }},
            {"delta", [&](const json& v) { c.delta = number(v, "delta"); }},
            {"algorithm", [&](const json& v) { c.algorithm = parse_enum(v, kAlgorithms, "algorithm"); }},
            {"max_iter", [&](const json& v) { c.max_iter = integer(v, "max_iter"); }},
            {"rel_tol", [&](const json& v) { c.rel_tol = number(v, "rel_tol"); }},
            {"power_spectrum", [&](const json& v) { c.power_spectrum = v.get<std::string>(); }},
            {"uq", parse_uq},
            {"output", [&](const json& v) { c.output = v.get<std::string>(); }}},
           "config");
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::config_error, "cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::config_error, "config " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j{{"scenario", to_string(c.scenario)},
         {"bandlimit", c.L},
         {"seed", c.seed},
         {"snr_db", c.snr_db},
         {"mask_fraction", c.mask_fraction},
         {"mask_band", c.mask_band},
         {"beam_fwhm", c.beam_fwhm},
         {"formulation", to_string(c.formulation)},
         {"setting", to_string(c.setting)},
         {"explicit_bandlimit", c.explicit_bandlimit},
         {"regularizer", to_string(c.prior)},
         {"wavelet", {{"dilation", c.wavelet_dilation}, {"directions", c.wavelet_directions}, {"j0", c.wavelet_j0}}},
         {"max_iter", c.max_iter},
         {"rel_tol", c.rel_tol},
         {"output", c.output}};
  if (c.sigma) j["sigma"] = *c.sigma;
  if (!c.mask_file.empty()) j["mask_file"] = c.mask_file;
  if (!c.observations.empty()) j["observations"] = c.observations;
  j["lambda"] = c.lambda ? json(*c.lambda) : json("auto");
  if (c.delta) j["delta"] = *c.delta;
  if (c.algorithm) j["algorithm"] = to_string(*c.algorithm);
  if (!c.power_spectrum.empty()) j["power_spectrum"] = c.power_spectrum;
  json feats = json::array();
  for (const auto& f : c.uq.features) feats.push_back({{"theta", f.theta}, {"phi", f.phi}, {"radius", f.radius}});
  json centres = json::array();
  for (const auto& [t, p] : c.uq.cap_centres) centres.push_back({t, p});
  j["uq"] = {{"alpha", c.uq.alpha},
             {"partition", c.uq.partition == PartitionKind::rectangular ? "rectangular" : "cap"},
             {"blocks", {c.uq.blocks_theta, c.uq.blocks_phi}},
             {"cap_radius", c.uq.cap_radius},
             {"cap_centres", centres},
             {"method", to_string(c.uq.method)},
             {"features", feats}};
  return j;
}

double snr_db(std::span<const Complex> x, std::span<const Complex> x_est, std::span<const double> area) {
  require(x.size() == x_est.size(), ErrorCode::dimension_error, "SNR inputs differ in length");
  require(area.empty() || area.size() == x.size(), ErrorCode::dimension_error, "SNR weights differ in length");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = area.empty() ? 1.0 : area[i];
    num += w * std::norm(x[i]);
    den += w * std::norm(x[i] - x_est[i]);
  }
  if (den == 0.0) return kSnrCap;
  return std::min(10.0 * std::log10(num / den), kSnrCap);
}

namespace {

// Without a beam the model is a pure pixel mask: no implicit bandlimit.
LinOp pixel_model(const GridPtr& g, const Mask& mask, double fwhm) {
  return fwhm > 0.0 ? phi_masked_blur(g, mask, fwhm) : mask_op(g, 0, mask);
}

}  // namespace

Simulation simulate(const ExperimentConfig& cfg) {
  validate(cfg);
  Simulation s;
  s.config = cfg;
  s.grid = make_grid(cfg.L);
  const GridPtr& g = s.grid;
  s.mask = build_mask(*g, cfg);
  CounterRng truth_rng(cfg.seed, kTruthStream);
  Problem& p = s.problem;
  p.setting = cfg.setting;
  p.formulation = cfg.formulation;

  auto kernels = std::make_shared<const WaveletKernels>(
      build_kernels({cfg.L, cfg.wavelet_dilation, cfg.wavelet_j0, cfg.wavelet_directions}));
  const bool full = s.mask.kept == g->size();

  switch (cfg.scenario) {
    case Scenario::topography:
      s.truth = topography_truth(g, cfg, truth_rng);
      p.phi = pixel_model(g, s.mask, cfg.beam_fwhm);
      break;
    case Scenario::camera360:
      s.truth = camera_truth(g, truth_rng);
      p.phi = full && cfg.beam_fwhm > 0.0 ? phi_blur(g, cfg.beam_fwhm) : pixel_model(g, s.mask, cfg.beam_fwhm);
      break;
    case Scenario::cmb_wiener: {
      const HarmonicScaling cl = spectrum(cfg);
      const HarmonicScaling root = scaling_sqrt(cl);
      HarmonicScaling inv = root;
      for (auto& b : inv.b) b = b > 0.0 ? 1.0 / b : 0.0;
      const HarmonicScaling unit{std::vector<double>(cfg.L, 1.0)};
      const HarmonicCoeffs z = real_field(cfg.L, unit, truth_rng);
      s.truth_variable = z.coeffs;
      s.truth = sht_inverse(harmonic_scale_apply(z, root), g);
      p.phi = mask_op(g, 0, s.mask);
      p.psi = compose({harmonic_scaling_op(cfg.L, 0, root, "C^1/2"), sht_inverse_op(g, 0)});
      s.dictionary_inverse = compose({sht_forward_op(g, 0), harmonic_scaling_op(cfg.L, 0, inv, "C^-1/2")});
      p.reg = Regularizer::l2_squared({}, HarmonicCoeffs::size_for(cfg.L));
      p.domain = Domain::complex;
      break;
    }
    case Scenario::weak_lensing:
      s.truth = lensing_truth(g, cfg, truth_rng);
      p.phi = phi_lensing(g, s.mask);
      break;
  }

  if (cfg.scenario != Scenario::cmb_wiener) {
    if (cfg.setting == Setting::synthesis) {
      p.psi = wavelet_synthesis_op(g, kernels);
      s.dictionary_inverse = wavelet_analysis_op(g, kernels);
      p.reg = Regularizer::weighted_l1(wavelet_area_weights(*g, *kernels, 1.0));
      p.domain = cfg.wavelet_directions == 1 ? Domain::real : Domain::complex;
      s.truth_variable = s.dictionary_inverse->apply(s.truth.values);
    } else {
      p.reg = analysis_prior(cfg, g, kernels);
      p.domain = Domain::real;
      if (cfg.explicit_bandlimit) p.bandlimit = compose({sht_forward_op(g, 0), sht_inverse_op(g, 0)});
      s.truth_variable = s.truth.values;
    }
  }

  // Observation with i.i.d. Gaussian noise; complex noise for spin-2 data.
  const bool complex_noise = p.phi.out().spin != 0;
  const CVec clean = p.phi.apply(s.truth.values);
  const std::size_t m = real_dofs(clean, complex_noise);
  p.sigma = cfg.sigma ? *cfg.sigma
                      : norm2(clean) / (std::sqrt(static_cast<double>(m)) * std::pow(10.0, cfg.snr_db / 20.0));
  require(p.sigma > 0.0, ErrorCode::config_error, "noise level from snr_db is zero (blank signal)");
  CounterRng noise_rng(cfg.seed, kNoiseStream);
  p.y = clean;
  for (auto& v : p.y) {
    if (complex_noise) {
      const double re = noise_rng.normal();
      v += p.sigma * Complex(re, noise_rng.normal());
    } else {
      v += p.sigma * noise_rng.normal();
    }
  }
  if (!cfg.observations.empty()) {
    const SphMap obs = to_sph_map(read_map_file(cfg.observations));
    require(obs.grid->L() == cfg.L && obs.spin == p.phi.out().spin, ErrorCode::config_error,
            "observation map shape differs from the forward model");
    p.y = full || p.phi.out().size == g->size() ? obs.values : mask_apply(obs, s.mask);
  }

  // Chi-squared f-ball: E f = m/2 plus two standard deviations.
  p.delta = cfg.delta ? *cfg.delta : 0.5 * (static_cast<double>(m) + 2.0 * std::sqrt(static_cast<double>(m)));

  s.auto_lambda = !cfg.lambda.has_value() && cfg.formulation == Formulation::unconstrained;
  if (cfg.lambda) {
    p.lambda = *cfg.lambda;
  } else {
    // Start the hierarchical update from the best scalar multiple of A^dag y.
    const LinOp A = p.effective_operator();
    CVec z0 = A.adjoint(p.y);
    if (p.domain != Domain::complex) project_domain(p.domain, z0);
    const CVec Az = A.apply(z0);
    const double nz = norm2_squared(Az);
    if (nz > 0.0) z0 = scaled(z0, dot(Az, p.y).real() / nz);
    p.lambda = update_lambda_hierarchical(p.reg.value(z0), p.real_dimension(), p.reg.homogeneity(), 1.0, 1e-8);
  }

  s.algorithm = cfg.algorithm ? *cfg.algorithm
                : (cfg.formulation == Formulation::constrained || p.reg.transform()) ? Algorithm::primal_dual
                                                                                     : Algorithm::forward_backward;
  s.signal_spin = 0;
  p.validate();
  return s;
}

SphMap observed_map(const Simulation& sim) {
  const auto& p = sim.problem;
  const int spin = p.phi.out().spin;
  if (p.y.size() == sim.grid->size()) return SphMap(sim.grid, spin, p.y);
  return mask_adjoint(p.y, sim.mask, sim.grid, spin);
}

RunReport reconstruct(const Simulation& sim, std::function<void(const IterationInfo&)> progress) {
  const auto& p = sim.problem;
  const auto& c = sim.config;
  SolverOptions o;
  o.max_iter = c.max_iter;
  o.rel_tol = c.rel_tol;
  o.lambda_update.enabled = sim.auto_lambda;
  o.on_iteration = std::move(progress);

  RunReport r;
  const auto t0 = std::chrono::steady_clock::now();
  r.solve = solve(sim.algorithm, p, o);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.estimate = SphMap(sim.grid, sim.signal_spin, r.solve.x);

  const auto& area = sim.grid->pixel_areas();
  r.snr_out = snr_db(sim.truth.values, r.solve.x, area);
  // Signal-space input SNR when the data are a full noisy copy of the
  // signal, measurement-space SNR otherwise.
  const bool same_space = p.phi.out() == p.phi.in() && p.phi.out().kind == SpaceKind::pixel &&
                          p.y.size() == sim.grid->size() && c.scenario != Scenario::cmb_wiener;
  r.snr_in = same_space ? snr_db(sim.truth.values, p.y, area) : snr_db(p.phi.apply(sim.truth.values), p.y);
  return r;
}

namespace {

Problem solved_problem(const Simulation& sim, const RunReport& run) {
  Problem p = sim.problem;
  p.lambda = run.solve.lambda;
  return p;
}

}  // namespace

LciReport run_lci(const Simulation& sim, const RunReport& run) {
  require(sim.problem.setting == Setting::analysis, ErrorCode::config_error,
          "local credible intervals need the analysis setting");
  const auto& u = sim.config.uq;
  if (u.method != LciMethod::bisection) {
    require(sim.problem.formulation == Formulation::unconstrained, ErrorCode::config_error,
            std::string(to_string(u.method)) + " intervals need the unconstrained formulation");
    const bool gaussian = sim.config.prior == PriorKind::l2;
    require(gaussian == (u.method == LciMethod::gaussian_analytic), ErrorCode::config_error,
            std::string(to_string(u.method)) + " intervals do not apply to the " + to_string(sim.config.prior) +
                " prior");
  }
  const Problem p = solved_problem(sim, run);
  LciReport r;
  const auto t0 = std::chrono::steady_clock::now();
  r.threshold = hpd_threshold(posterior_potential(p, run.solve.z), p.real_dimension(), u.alpha);
  if (u.partition == PartitionKind::rectangular) {
    r.partition = make_rect_partition(*sim.grid, u.blocks_theta, u.blocks_phi);
  } else {
    require(!u.cap_centres.empty(), ErrorCode::config_error, "cap partition needs cap_centres");
    r.partition = make_cap_partition(*sim.grid, u.cap_centres, u.cap_radius);
  }
  r.lci = compute_lci_map(p, run.solve.z, r.partition, r.threshold, u.method);
  r.lengths = lci_length_map(sim.grid, r.partition, r.lci);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

HypothesisReport run_hypothesis_tests(const Simulation& sim, const RunReport& run) {
  const Problem p = solved_problem(sim, run);
  HypothesisReport r;
  r.threshold = hpd_threshold(posterior_potential(p, run.solve.z), p.real_dimension(), sim.config.uq.alpha);
  for (const auto& f : sim.config.uq.features) {
    const auto cap = make_cap_partition(*sim.grid, {{f.theta, f.phi}}, f.radius);
    const Region background = annulus(*sim.grid, f.theta, f.phi, f.radius, 2.0 * f.radius);
    CVec z_sur;
    if (p.setting == Setting::analysis && !p.bandlimit) {
      z_sur = feature_removal_surrogate(run.solve.z, cap.regions[0], background);
    } else {
      const CVec x_sur = feature_removal_surrogate(run.solve.x, cap.regions[0], background);
      if (p.setting == Setting::synthesis) {
        z_sur = sim.dictionary_inverse->apply(x_sur);
      } else {
        z_sur = x_sur;  // P is a projection: P x_sur is the bandlimited surrogate
      }
      if (p.domain != Domain::complex) project_domain(p.domain, z_sur);
    }
    const double h = posterior_potential(p, z_sur);
    r.verdicts.push_back({f, h, h > r.threshold.epsilon_prime ? Verdict::significant : Verdict::indeterminate});
  }
  return r;
}

json summary_json(const Simulation& sim, const RunReport& run) {
  const auto& p = sim.problem;
  const auto& s = run.solve;
  json j{{"scenario", to_string(sim.config.scenario)},
         {"settings", to_json(sim.config)},
         {"algorithm", to_string(sim.algorithm)},
         {"pixels", sim.grid->size()},
         {"measurements", p.y.size()},
         {"sigma", p.sigma},
         {"snr_in_db", run.snr_in},
         {"snr_db", run.snr_out},
         {"iterations", s.iterations},
         {"converged", s.converged},
         {"inner_converged", s.inner_converged},
         {"wall_seconds", run.wall_seconds},
         {"lambda", s.lambda},
         {"lambda_trace", s.lambda_trace},
         {"fidelity", s.fidelity},
         {"objective_trace", s.objective},
         {"operator_applications", s.operator_applications}};
  if (p.formulation == Formulation::constrained) {
    j["delta"] = p.delta;
    j["feasible"] = s.fidelity <= p.delta * (1.0 + 1e-6);
  }
  return j;
}

json summary_json(const LciReport& r) {
  std::vector<double> lengths;
  json regions = json::array();
  for (std::size_t k = 0; k < r.lci.intervals.size(); ++k) {
    const auto& iv = r.lci.intervals[k];
    if (r.lci.errors[k].empty()) {
      lengths.push_back(iv.length());
      regions.push_back({{"lower", iv.lower}, {"upper", iv.upper}, {"evaluations", iv.evaluations}});
    } else {
      regions.push_back({{"error", r.lci.errors[k]}});
    }
  }
  json stats{{"regions", r.lci.intervals.size()}, {"failed", r.lci.intervals.size() - lengths.size()}};
  if (!lengths.empty()) {
    std::sort(lengths.begin(), lengths.end());
    double sum = 0.0;
    for (double l : lengths) sum += l;
    stats["min_length"] = lengths.front();
    stats["max_length"] = lengths.back();
    stats["mean_length"] = sum / static_cast<double>(lengths.size());
    stats["median_length"] = lengths[lengths.size() / 2];
  }
  return {{"alpha", r.threshold.alpha},
          {"epsilon_prime", r.threshold.epsilon_prime},
          {"h_map", r.threshold.h_map},
          {"N", r.threshold.N},
          {"method", to_string(r.lci.method)},
          {"wall_seconds", r.wall_seconds},
          {"interval_stats", stats},
          {"intervals", regions}};
}

json summary_json(const HypothesisReport& r) {
  json tests = json::array();
  for (const auto& v : r.verdicts)
    tests.push_back({{"theta", v.feature.theta},
                     {"phi", v.feature.phi},
                     {"radius", v.feature.radius},
                     {"h_surrogate", v.h_surrogate},
                     {"verdict", to_string(v.verdict)}});
  return {{"alpha", r.threshold.alpha},
          {"epsilon_prime", r.threshold.epsilon_prime},
          {"h_map", r.threshold.h_map},
          {"N", r.threshold.N},
          {"tests", tests}};
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::config_error, "cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

}  // namespace s2opt
