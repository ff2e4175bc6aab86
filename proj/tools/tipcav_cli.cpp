#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tipcav/correlator.hpp"
#include "tipcav/fitting.hpp"
#include "tipcav/io_tables.hpp"
#include "tipcav/manifest.hpp"
#include "tipcav/pipeline.hpp"
#include "tipcav/rng.hpp"
#include "tipcav/scenario.hpp"
#include "tipcav/spin_odmr.hpp"
#include "tipcav/stream_io.hpp"

namespace fs = std::filesystem;
using namespace tipcav;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

/// Thrown for user-input problems outside the scenario schema.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::optional<std::uint64_t> seed;
  fs::path out_dir = ".";
  std::string format = "csv";
  fs::path presets = TIPCAV_PRESET_DIR;
  unsigned jobs = 1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "RNG seed (overrides acquisition.seed)");
  cmd->add_option("--out-dir", c.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--format", c.format, "Table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  cmd->add_option("--presets", c.presets, "Preset directory")->capture_default_str();
  cmd->add_option("--jobs", c.jobs, "Concurrent jobs / correlator threads")->check(CLI::PositiveNumber);
}

Json read_json_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open " + path.string());
  try {
    return Json::parse(is);
  } catch (const Json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

/// A scenario argument is a file (config or manifest) or a preset name.
Json load_config(const std::string& arg, const PresetLibrary& presets, const Common& c) {
  Json config = fs::exists(arg) ? config_from_document(read_json_file(arg)) : presets.scenario(arg);
  if (c.seed) {
    if (!config.contains("acquisition")) config["acquisition"] = Json::object();
    config["acquisition"]["seed"] = *c.seed;
  }
  return config;
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

bool is_json_file(const fs::path& p) { return p.extension() == ".json"; }

int finish_run(const RunResult& r, const fs::path& out_dir) {
  std::cout << "wrote " << r.products.size() << " products and manifest.json to " << out_dir.string() << '\n';
  for (const auto& e : r.errors) std::cerr << "error: " << e << '\n';
  return r.complete ? kExitOk : kExitRuntime;
}

int cmd_run(const std::string& scenario, const std::vector<std::string>& only, const Common& c) {
  const PresetLibrary presets(c.presets);
  Json config = load_config(scenario, presets, c);
  if (!only.empty()) config["outputs"] = only;
  Scenario s = parse_scenario(config, presets);
  if (s.threads == 1 && c.jobs > 1) s.threads = c.jobs;
  return finish_run(run_scenario(s, {c.out_dir, c.format}, presets), c.out_dir);
}

int cmd_correlate(const std::vector<fs::path>& inputs, Picoseconds window, Picoseconds bin_width, int log_bins,
                  std::optional<double> period, const Common& c) {
  std::ostringstream os;
  std::string name;
  if (period) {
    if (inputs.size() != 1) throw UsageError("--period expects exactly one input stream");
    PulseTrain train;
    train.period = *period;
    const DecayHistogram h = decay_histogram(load_ptsm(inputs[0]), train, static_cast<double>(bin_width));
    if (c.format == "json") {
      os << to_json(h).dump(2) << '\n';
    } else {
      write_decay_csv(os, h);
    }
    name = "decay";
  } else {
    if (inputs.empty() || inputs.size() > 2) throw UsageError("expected one or two input streams");
    const PhotonStream a = load_ptsm(inputs[0]);
    const PhotonStream b = inputs.size() == 2 ? load_ptsm(inputs[1]) : a;
    const LagBins bins =
        log_bins > 0 ? LagBins::log_spaced(window, bin_width, log_bins) : LagBins::uniform(window, bin_width);
    const G2Curve curve = cross_correlate(a, b, bins, c.jobs);
    if (c.format == "json") {
      os << to_json(curve).dump(2) << '\n';
    } else {
      write_g2_csv(os, curve);
    }
    name = "g2";
  }
  const Json entry = write_product(c.out_dir, name + "." + c.format, os.str());
  std::cout << "wrote " << (c.out_dir / entry["file"].get<std::string>()).string() << '\n';
  return kExitOk;
}

int cmd_fit(const std::string& model, const fs::path& input, std::optional<double> period, double irf_sigma,
            double irf_t0, double tau_init, bool two_level, const Common& c) {
  const std::string text = slurp(input);
  std::istringstream is(text);
  FitResult fit;
  if (model == "lifetime") {
    DecayHistogram h;
    if (is_json_file(input)) {
      h = decay_histogram_from_json(Json::parse(text));
    } else {
      if (!period) throw UsageError("--period is required for CSV decay input");
      h = read_decay_csv(is, *period);
    }
    if (period) h.period = *period;
    fit = fit_lifetime(h, IrfModel{irf_sigma, irf_t0}, LifetimeInit{tau_init, {}, {}});
  } else if (model == "saturation") {
    std::vector<SaturationPoint> pts;
    if (is_json_file(input)) {
      for (const auto& p : Json::parse(text).at("points")) pts.push_back({p.at("P_mW"), p.at("rate_cts_s")});
    } else {
      pts = read_saturation_csv(is);
    }
    fit = fit_saturation(pts);
  } else if (model == "g2") {
    const G2Curve curve = is_json_file(input) ? g2_curve_from_json(Json::parse(text)) : read_g2_csv(is);
    G2Init init;
    init.two_level = two_level;
    fit = fit_g2(curve, init);
  } else {
    const OdmrSpectrum s = is_json_file(input) ? odmr_spectrum_from_json(Json::parse(text)) : read_odmr_csv(is);
    fit = fit_odmr(s);
  }
  const Json entry = write_product(c.out_dir, model + "_fit.json", to_json(fit).dump(2) + "\n");
  std::cout << "wrote " << (c.out_dir / entry["file"].get<std::string>()).string() << '\n';
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    std::cout << "  " << fit.names[i] << " = " << format_number(fit.values[i]) << " +/- "
              << format_number(fit.stderrs[i]) << '\n';
  }
  return fit.converged ? kExitOk : kExitRuntime;
}

int cmd_odmr(const std::string& scenario, std::optional<double> contrast, std::optional<double> rate,
             double delta_nu_mhz, double A, double g, const Common& c) {
  if (scenario.empty()) {
    if (!contrast || !rate) throw UsageError("give a scenario, or --contrast and --rate");
    const SensitivityReport r = sensitivity_report({A, delta_nu_mhz * 1e6, *contrast, *rate, g});
    const Json entry = write_product(c.out_dir, "sensitivity.json", to_json(r).dump(2) + "\n");
    std::cout << "eta = " << format_number(r.eta * 1e6) << " uT/sqrt(Hz)\n";
    return kExitOk;
  }
  return cmd_run(scenario, {"odmr_spectrum", "odmr_fit", "sensitivity", "summary"}, c);
}

std::vector<double> parse_values(const std::vector<double>& values, const std::string& range) {
  if (range.empty()) return values;
  double start = 0, stop = 0;
  long n = 0;
  char sep1 = 0, sep2 = 0;
  std::istringstream is(range);
  if (!(is >> start >> sep1 >> stop >> sep2 >> n) || sep1 != ':' || sep2 != ':' || n < 0) {
    throw UsageError("--range expects start:stop:count");
  }
  std::vector<double> out;
  for (long i = 0; i < n; ++i) out.push_back(n == 1 ? start : start + (stop - start) * i / (n - 1));
  return out;
}

int cmd_sweep(const std::string& scenario, const std::string& path, const std::vector<double>& values,
              const Common& c) {
  const PresetLibrary presets(c.presets);
  const Json config = load_config(scenario, presets, c);
  SweepOptions opts{path, values, c.jobs, c.out_dir, c.format};
  const auto rows = sweep(config, opts, presets);
  std::ostringstream os;
  write_sweep_csv(os, path, rows);
  write_product(c.out_dir, "sweep.csv", os.str());
  std::cout << "wrote " << (c.out_dir / "sweep.csv").string() << " (" << rows.size() << " rows)\n";
  bool complete = true;
  for (const auto& r : rows) complete = complete && r.complete;
  return complete ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tipcav: plasmonic tip-cavity single-photon emitter simulator and analysis toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common common;
  std::string scenario;
  std::vector<std::string> only;

  auto* run = app.add_subcommand("run", "Run a scenario (file, manifest or preset name) and write all products");
  run->add_option("scenario", scenario, "Scenario file, manifest.json or preset name")->required();
  run->add_option("--only", only, "Restrict to these output products");
  add_common(run, common);

  auto* simulate = app.add_subcommand("simulate", "Simulate photon streams (PTSM) for a scenario");
  simulate->add_option("scenario", scenario, "Scenario file or preset name")->required();
  add_common(simulate, common);

  std::vector<fs::path> inputs;
  Picoseconds window = 100'000, bin_width = 100;
  int log_bins = 0;
  std::optional<double> period;
  auto* correlate = app.add_subcommand("correlate", "g2 histogram of one/two PTSM streams, or a decay histogram");
  correlate->add_option("inputs", inputs, "PTSM stream(s)")->required()->check(CLI::ExistingFile);
  correlate->add_option("--window", window, "Lag window, ps")->capture_default_str();
  correlate->add_option("--bin-width", bin_width, "Bin width, ps")->capture_default_str();
  correlate->add_option("--log-bins", log_bins, "Log-spaced bins per decade (0 = uniform)");
  correlate->add_option("--period", period, "Pulse period, ps: histogram delays instead of g2");
  add_common(correlate, common);

  std::string model;
  fs::path input;
  double irf_sigma = 0.0, irf_t0 = 0.0, tau_init = 1000.0;
  bool two_level = false;
  auto* fit = app.add_subcommand("fit", "Fit a model to a CSV/JSON data product");
  fit->add_option("model", model, "lifetime | saturation | g2 | odmr")
      ->required()
      ->check(CLI::IsMember({"lifetime", "saturation", "g2", "odmr"}));
  fit->add_option("input", input, "Data file")->required()->check(CLI::ExistingFile);
  fit->add_option("--period", period, "Pulse period, ps (lifetime)");
  fit->add_option("--irf-sigma", irf_sigma, "IRF sigma, ps (lifetime)");
  fit->add_option("--irf-t0", irf_t0, "IRF centre, ps (lifetime)");
  fit->add_option("--tau-init", tau_init, "Initial lifetime, ps")->capture_default_str();
  fit->add_flag("--two-level", two_level, "g2: fix the bunching amplitude to 0");
  add_common(fit, common);

  std::optional<double> contrast, rate;
  double delta_nu = 110.0, A = kLorentzianLineshape, g_factor = 2.0;
  auto* odmr = app.add_subcommand("odmr", "ODMR spectrum, fit and sensitivity for a scenario, or eta from inputs");
  odmr->add_option("scenario", scenario, "Scenario file or preset name");
  odmr->add_option("--contrast", contrast, "Contrast C");
  odmr->add_option("--rate", rate, "Count rate R, cts/s");
  odmr->add_option("--delta-nu", delta_nu, "Linewidth, MHz")->capture_default_str();
  odmr->add_option("--lineshape-factor", A, "Lineshape factor A")->capture_default_str();
  odmr->add_option("--g-factor", g_factor, "Electron g-factor")->capture_default_str();
  add_common(odmr, common);

  std::string param, range;
  std::vector<double> values;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a scenario over values of one numeric parameter");
  sweep_cmd->add_option("scenario", scenario, "Scenario file or preset name")->required();
  sweep_cmd->add_option("--param", param, "Dotted parameter path, e.g. cavity.mode.E_p")->required();
  sweep_cmd->add_option("--values", values, "Values")->delimiter(',');
  sweep_cmd->add_option("--range", range, "start:stop:count");
  add_common(sweep_cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*run) return cmd_run(scenario, only, common);
    if (*simulate) return cmd_run(scenario, {"streams"}, common);
    if (*correlate) return cmd_correlate(inputs, window, bin_width, log_bins, period, common);
    if (*fit) return cmd_fit(model, input, period, irf_sigma, irf_t0, tau_init, two_level, common);
    if (*odmr) return cmd_odmr(scenario, contrast, rate, delta_nu, A, g_factor, common);
    if (*sweep_cmd) return cmd_sweep(scenario, param, parse_values(values, range), common);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const FormatError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
