// s2opt command-line driver.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "s2opt/error.hpp"
#include "s2opt/experiment.hpp"
#include "s2opt/mapfile.hpp"
#include "s2opt/render.hpp"
#include "s2opt/sht.hpp"
#include "s2opt/wavelet.hpp"

namespace fs = std::filesystem;
using namespace s2opt;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool verbose = false;
};

void log(const Globals& g, const std::string& msg) {
  if (g.verbose) std::cerr << "[s2opt] " << msg << '\n';
}

ExperimentConfig resolve_config(const Globals& g) {
  ExperimentConfig c = g.config.empty() ? parse_config(nlohmann::json::object()) : load_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (!g.out.empty()) c.output = g.out;
  return c;
}

fs::path output_dir(const Globals& g, const std::string& fallback) {
  fs::path dir = g.out.empty() ? fs::path(fallback) : fs::path(g.out);
  fs::create_directories(dir);
  return dir;
}

Simulation simulate_logged(const Globals& g, const ExperimentConfig& c) {
  log(g, std::string("simulating ") + to_string(c.scenario) + " at L=" + std::to_string(c.L) + ", seed " +
             std::to_string(c.seed));
  Simulation sim = simulate(c);
  log(g, "measurements: " + std::to_string(sim.problem.y.size()) + ", sigma " + std::to_string(sim.problem.sigma));
  return sim;
}

RunReport reconstruct_logged(const Globals& g, const Simulation& sim) {
  log(g, std::string("solving with ") + to_string(sim.algorithm));
  std::function<void(const IterationInfo&)> progress;
  if (g.verbose) {
    progress = [](const IterationInfo& it) {
      if (it.iteration % 100 == 0)
        std::cerr << "[s2opt]   iter " << it.iteration << "  objective " << it.objective << "  rel_change "
                  << it.rel_change << '\n';
    };
  }
  RunReport run = reconstruct(sim, progress);
  log(g, "iterations " + std::to_string(run.solve.iterations) + ", SNR " + std::to_string(run.snr_out) + " dB");
  return run;
}

int cmd_simulate(const Globals& g) {
  const auto c = resolve_config(g);
  const auto dir = output_dir(g, c.output);
  const auto sim = simulate_logged(g, c);
  write_map((dir / "truth.s2map").string(), sim.truth);
  write_map((dir / "observed.s2map").string(), observed_map(sim));
  SphMap mask(sim.grid, 0);
  for (std::size_t i = 0; i < mask.values.size(); ++i) mask.values[i] = sim.mask.keep[i] ? 1.0 : 0.0;
  write_map((dir / "mask.s2map").string(), mask, MapDtype::f64);
  write_json((dir / "simulation.json").string(), {{"scenario", to_string(c.scenario)},
                                                 {"settings", to_json(c)},
                                                 {"pixels", sim.grid->size()},
                                                 {"measurements", sim.problem.y.size()},
                                                 {"sigma", sim.problem.sigma}});
  return 0;
}

int cmd_reconstruct(const Globals& g) {
  const auto c = resolve_config(g);
  const auto dir = output_dir(g, c.output);
  const auto sim = simulate_logged(g, c);
  const auto run = reconstruct_logged(g, sim);
  write_map((dir / "estimate.s2map").string(), run.estimate);
  write_json((dir / "summary.json").string(), summary_json(sim, run));
  std::cout << "SNR " << run.snr_out << " dB (input " << run.snr_in << " dB), " << run.solve.iterations
            << " iterations\n";
  return 0;
}

int cmd_uq_lci(const Globals& g) {
  const auto c = resolve_config(g);
  const auto dir = output_dir(g, c.output);
  const auto sim = simulate_logged(g, c);
  const auto run = reconstruct_logged(g, sim);
  log(g, std::string("local credible intervals by ") + to_string(c.uq.method));
  const auto lci = run_lci(sim, run);
  write_map((dir / "estimate.s2map").string(), run.estimate);
  write_map((dir / "lci_length.s2map").string(), lci.lengths, MapDtype::f64);
  write_json((dir / "summary.json").string(), summary_json(sim, run));
  const auto j = summary_json(lci);
  write_json((dir / "lci.json").string(), j);
  std::cout << "eps' " << lci.threshold.epsilon_prime << ", " << j["interval_stats"].dump() << '\n';
  return 0;
}

int cmd_uq_test(const Globals& g) {
  const auto c = resolve_config(g);
  require(!c.uq.features.empty(), ErrorCode::config_error, "uq-test needs uq.features in the config");
  const auto dir = output_dir(g, c.output);
  const auto sim = simulate_logged(g, c);
  const auto run = reconstruct_logged(g, sim);
  const auto rep = run_hypothesis_tests(sim, run);
  write_json((dir / "summary.json").string(), summary_json(sim, run));
  write_json((dir / "hypothesis.json").string(), summary_json(rep));
  for (const auto& v : rep.verdicts)
    std::cout << "feature (" << v.feature.theta << ", " << v.feature.phi << ", r=" << v.feature.radius
              << "): " << to_string(v.verdict) << " (h " << v.h_surrogate << " vs eps' "
              << rep.threshold.epsilon_prime << ")\n";
  return 0;
}

struct TransformArgs {
  std::vector<std::string> inputs;
  std::string kind = "sht";
  bool inverse = false;
  std::string name = "transformed";
  double dilation = 2.0;
  int directions = 1;
  int j0 = 0;
};

int cmd_transform(const Globals& g, const TransformArgs& a) {
  const auto dir = output_dir(g, ".");
  const auto path = [&](const std::string& stem) { return (dir / (stem + ".s2map")).string(); };
  if (a.kind == "sht") {
    require(a.inputs.size() == 1, ErrorCode::config_error, "sht transform takes one input");
    const MapFile m = read_map_file(a.inputs[0]);
    if (a.inverse) {
      const HarmonicCoeffs f = to_harmonic(m);
      write_map(path(a.name), sht_inverse(f, make_grid(f.L)));
    } else {
      write_map(path(a.name), sht_forward(to_sph_map(m)));
    }
    return 0;
  }
  // Wavelet slices are written (and read) in flatten order: scaling first,
  // then each scale's directions.
  if (!a.inverse) {
    require(a.inputs.size() == 1, ErrorCode::config_error, "forward wavelet transform takes one input");
    const SphMap x = to_sph_map(read_map_file(a.inputs[0]));
    const auto k = build_kernels({x.grid->L(), a.dilation, a.j0, a.directions});
    const auto w = wavelet_analysis(x, k);
    write_map(path(a.name + "_scaling"), w.scaling);
    for (int j = 0; j < k.n_scales(); ++j)
      for (int n = 0; n < k.n_directions(); ++n)
        write_map(path(a.name + "_j" + std::to_string(j + a.j0) + "_n" + std::to_string(n)),
                  w.slice(j, n, k.n_directions()));
    return 0;
  }
  require(!a.inputs.empty(), ErrorCode::config_error, "inverse wavelet transform needs the slice files");
  std::vector<SphMap> slices;
  for (const auto& in : a.inputs) {
    SphMap m = to_sph_map(read_map_file(in));
    if (!slices.empty()) {
      require(m.grid->L() == slices[0].grid->L(), ErrorCode::config_error, "wavelet slices differ in bandlimit");
      m = SphMap(slices[0].grid, m.spin, std::move(m.values));
    }
    slices.push_back(std::move(m));
  }
  const auto k = build_kernels({slices[0].grid->L(), a.dilation, a.j0, a.directions});
  require(static_cast<int>(slices.size()) == k.n_slices(), ErrorCode::config_error,
          "expected " + std::to_string(k.n_slices()) + " wavelet slices");
  WaveletCoeffs w{slices[0], std::vector<SphMap>(slices.begin() + 1, slices.end())};
  write_map(path(a.name), wavelet_synthesis(w, k));
  return 0;
}

struct RenderArgs {
  std::string input;
  std::string name = "render";
  int width = 800;
  std::optional<double> vmin, vmax;
  bool magnitude = false;
};

int cmd_render(const Globals& g, const RenderArgs& a) {
  const auto dir = output_dir(g, ".");
  const SphMap x = to_sph_map(read_map_file(a.input));
  RenderOptions o;
  o.width = a.width;
  o.vmin = a.vmin;
  o.vmax = a.vmax;
  o.view = a.magnitude ? RenderView::magnitude : RenderView::real;
  const Raster r = render_mollweide(x, (dir / (a.name + ".ppm")).string(), o);
  write_raster((dir / (a.name + "_raster.s2map")).string(), r);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse reconstruction and uncertainty quantification on the sphere"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_flag("--verbose", g.verbose, "Progress on stderr");

  auto* sim = app.add_subcommand("simulate", "Draw a ground truth and observe it");
  auto* rec = app.add_subcommand("reconstruct", "Simulate and solve for the estimate");
  auto* lci = app.add_subcommand("uq-lci", "Local credible intervals around the estimate");
  auto* test = app.add_subcommand("uq-test", "Feature-removal hypothesis tests");
  auto* tr = app.add_subcommand("transform", "Forward or inverse SHT / wavelet transform of map files");
  auto* ren = app.add_subcommand("render", "Mollweide PPM of a map file");
  for (auto* sc : {sim, rec, lci, test, tr, ren}) sc->fallthrough();

  TransformArgs ta;
  tr->add_option("--input", ta.inputs, "Input map file(s); inverse wavelet takes every slice in order")->required();
  tr->add_option("--kind", ta.kind, "sht or wavelet")->check(CLI::IsMember({"sht", "wavelet"}));
  tr->add_flag("--inverse", ta.inverse, "Inverse transform");
  tr->add_option("--name", ta.name, "Output file stem");
  tr->add_option("--dilation", ta.dilation, "Wavelet dilation");
  tr->add_option("--directions", ta.directions, "Wavelet directions");
  tr->add_option("--j0", ta.j0, "Lowest wavelet scale");

  RenderArgs ra;
  ren->add_option("--input", ra.input, "Input map file")->required();
  ren->add_option("--name", ra.name, "Output file stem");
  ren->add_option("--width", ra.width, "Image width (even); height is width/2");
  ren->add_option("--vmin", ra.vmin, "Colour range minimum");
  ren->add_option("--vmax", ra.vmax, "Colour range maximum");
  ren->add_flag("--magnitude", ra.magnitude, "Render |value| instead of the real part");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (sim->parsed()) return cmd_simulate(g);
    if (rec->parsed()) return cmd_reconstruct(g);
    if (lci->parsed()) return cmd_uq_lci(g);
    if (test->parsed()) return cmd_uq_test(g);
    if (tr->parsed()) return cmd_transform(g, ta);
    if (ren->parsed()) return cmd_render(g, ra);
  } catch (const Error& e) {
    std::cerr << "s2opt: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::numerical_failure:
      case ErrorCode::stability_error:
      case ErrorCode::empty_interval:
      case ErrorCode::unbounded_interval:
        return kExitNumerical;
      default:
        return kExitConfig;
    }
  } catch (const fs::filesystem_error& e) {
    std::cerr << "s2opt: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "s2opt: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
