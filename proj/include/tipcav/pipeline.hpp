#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tipcav/cavity.hpp"
#include "tipcav/scenario.hpp"

namespace tipcav {

inline constexpr const char* kVersion = "1.0.0";

/// The emitter and detector one variant actually runs with.
struct VariantSetup {
  std::string name;
  bool coupled = false;
  LevelSystem system;
  EnhancementResult enhancement;
  DetectorModel detector;
  std::uint64_t seed = 0;
};

/// `s` must be a single-variant scenario (see variant_scenario).
VariantSetup build_variant(const Scenario& s, std::size_t index);

/// Closed-form summary of a variant: rates, enhancement, regime, g2(0)
/// including uncorrelated counts, and the ODMR sensitivity when configured.
struct VariantSummary {
  std::string name;
  double k_pump = 0.0;
  double gamma_r = 0.0;
  double lifetime_ps = 0.0;
  double xi_exc = 1.0;
  double F_P = 1.0;
  Regime regime = Regime::Balanced;
  double emission_rate = 0.0;  // Hz, at the emitter
  double detected_rate = 0.0;  // Hz, both channels, including dark and background
  std::optional<double> g2_0;  // undefined when nothing is detected
  std::optional<double> odmr_contrast;
  std::optional<double> eta;  // T / sqrt(Hz)
};

VariantSummary summarize(const Scenario& s, const VariantSetup& v);
Json to_json(const VariantSummary& v);

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::string format = "csv";  // csv | json
};

struct RunResult {
  bool complete = true;
  std::vector<std::string> errors;
  std::vector<std::string> products;  // file names relative to out_dir
  std::vector<VariantSummary> summaries;
  Json fits = Json::object();  // variant -> product -> fit result
  Json manifest;
};

/// Runs every variant and writes the requested products plus manifest.json.
/// Failures of individual products are recorded and the run continues.
RunResult run_scenario(const Scenario& s, const RunOptions& options, const PresetLibrary& presets = PresetLibrary());

struct SweepOptions {
  std::string path;  // dotted numeric path into the resolved config
  std::vector<double> values;
  unsigned jobs = 1;
  std::filesystem::path out_dir = ".";
  std::string format = "csv";
};

struct SweepRow {
  double value = 0.0;
  VariantSummary summary;
  std::optional<double> g2_0_fit;
  bool complete = true;
};

/// Runs the scenario once per value (concurrently, up to `jobs`). Products of
/// run i go to out_dir/run_<i>; the table goes to out_dir/sweep.csv.
std::vector<SweepRow> sweep(const Json& config, const SweepOptions& options,
                            const PresetLibrary& presets = PresetLibrary());

void write_sweep_csv(std::ostream& os, const std::string& path, const std::vector<SweepRow>& rows);

}  // namespace tipcav
