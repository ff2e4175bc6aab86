#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tipcav/cavity.hpp"
#include "tipcav/fitting.hpp"
#include "tipcav/io_tables.hpp"
#include "tipcav/spin_odmr.hpp"
#include "tipcav/trajectory.hpp"

namespace tipcav {

/// Invalid configuration; `key` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Named JSON presets under <root>/scenarios and <root>/plasmon.
class PresetLibrary {
 public:
  explicit PresetLibrary(std::filesystem::path root = TIPCAV_PRESET_DIR) : root_(std::move(root)) {}

  Json scenario(const std::string& name) const;
  Json plasmon(const std::string& name) const;
  std::vector<std::string> scenario_names() const;
  const std::filesystem::path& root() const { return root_; }

 private:
  Json load(const std::filesystem::path& dir, const std::string& name) const;
  std::filesystem::path root_;
};

struct EnhancementOverride {
  double xi_exc = 1.0;
  double F_P = 1.0;
};

struct CavitySpec {
  PlasmonMode mode;
  CouplingContext context;
  std::optional<EnhancementOverride> enhancement;  // replaces the mode model
  bool background_scales_with_excitation = false;
};

enum class AcquisitionMode { Cw, Pulsed, Odmr };

struct Acquisition {
  AcquisitionMode mode = AcquisitionMode::Cw;
  Picoseconds duration = 0;
  std::optional<std::uint64_t> seed;
  double splitter = 0.5;
  PulseTrain pulse;
};

struct G2Analysis {
  Picoseconds window = 100'000;
  Picoseconds bin_width = 100;
  int log_bins_per_decade = 0;  // > 0 selects log-spaced bins
  G2Init init;
};

struct DecayAnalysis {
  double bin_width = 16.0;
  IrfModel irf;
  double tau_init = 1000.0;
};

struct SaturationAnalysis {
  std::vector<double> powers_mw;
  double pump_per_mw = 1e8;  // Hz of k_pump per mW, uncoupled
};

struct OdmrAnalysis {
  double k_isc_bright = 1e6;
  double k_isc_dark = 2e7;
  double branch_to_bright = 0.9;
  double nu0 = 2870.0;
  double delta_nu = 110.0;
  double k_mw = 1e8;
  double start_mhz = 2500.0;
  double stop_mhz = 3240.0;
  int points = 75;
  double dwell_s = 0.0;  // 0 = noiseless rates
  double A = kLorentzianLineshape;
  double g_factor = 2.0;

  SpinLevelSystem spin_system(const LevelSystem& base) const;
  std::vector<double> frequencies() const;
};

struct Variant {
  std::string name;
  bool uncoupled = false;
  Json overrides = Json::object();  // dotted path -> value
};

struct Scenario {
  std::string name;
  LevelSystem emitter;
  std::optional<CavitySpec> cavity;
  DetectorModel detector;
  Acquisition acquisition;
  G2Analysis g2;
  DecayAnalysis decay;
  std::optional<SaturationAnalysis> saturation;
  std::optional<OdmrAnalysis> odmr;
  std::vector<std::string> outputs;
  std::vector<Variant> variants;
  unsigned threads = 1;
  /// Fully resolved configuration (presets expanded); re-parses to the
  /// same scenario.
  Json resolved;

  bool wants(const std::string& product) const;
  bool stochastic() const;
};

/// Known output product names.
const std::vector<std::string>& known_outputs();

/// Expands "extends" and "mode_preset" references.
Json resolve_config(const Json& config, const PresetLibrary& presets);

/// Validates a resolved or unresolved config and builds the scenario.
Scenario parse_scenario(const Json& config, const PresetLibrary& presets = PresetLibrary());
Scenario load_scenario(const std::filesystem::path& path, const PresetLibrary& presets = PresetLibrary());

/// Dotted-path access into a resolved config; the target must exist and be
/// numeric.
double get_numeric_path(const Json& config, const std::string& path);
Json with_numeric_path(Json config, const std::string& path, double value);

/// Scenario for one variant: overrides applied, cavity removed if uncoupled.
Scenario variant_scenario(const Scenario& s, const Variant& v, const PresetLibrary& presets = PresetLibrary());

}  // namespace tipcav
