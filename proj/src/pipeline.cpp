#include "tipcav/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <future>
#include <ostream>
#include <sstream>
#include <thread>

#include "tipcav/correlator.hpp"
#include "tipcav/fitting.hpp"
#include "tipcav/manifest.hpp"
#include "tipcav/rng.hpp"
#include "tipcav/spin_odmr.hpp"
#include "tipcav/stream_io.hpp"
#include "tipcav/trajectory.hpp"

namespace tipcav {

namespace {

// Sub-stream offsets per product family.
constexpr std::uint64_t kCwStream = 1;
constexpr std::uint64_t kPulsedStream = 2;
constexpr std::uint64_t kOdmrStream = 3;

std::uint64_t product_seed(std::uint64_t variant_seed, std::uint64_t stream) {
  return mix_seed(variant_seed ^ mix_seed(stream));
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

struct Spectral {
  double off = 0.0;       // detected off-resonance rate
  double contrast = 0.0;  // detected contrast
  double fwhm_mhz = 0.0;  // including power broadening
};

// Detected ODMR line parameters of the steady-state model.
Spectral odmr_line(const SpinLevelSystem& spin, const DetectorModel& det) {
  const double extra = det.dark_rate + det.background_rate;
  const double off = det.efficiency * odmr_rate_at_mixing(spin, 0.0) + extra;
  auto rate = [&](double nu) {
    return det.efficiency * odmr_rate_at_mixing(spin, spin.k_mw * lorentzian(nu, spin.nu0, spin.delta_nu)) + extra;
  };
  const double depth = off - rate(spin.nu0);
  Spectral out{off, off > 0.0 ? depth / off : 0.0, 0.0};
  if (!(depth > 0.0)) return out;
  // Half depth lies within nu0 + [0, hi]; the dip decreases monotonically.
  double lo = 0.0, hi = spin.delta_nu;
  while (off - rate(spin.nu0 + hi) > 0.5 * depth && hi < 1e9 * spin.delta_nu) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (off - rate(spin.nu0 + mid) > 0.5 * depth) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.fwhm_mhz = lo + hi;
  return out;
}

LagBins g2_bins(const G2Analysis& a) {
  return a.log_bins_per_decade > 0 ? LagBins::log_spaced(a.window, a.bin_width, a.log_bins_per_decade)
                                   : LagBins::uniform(a.window, a.bin_width);
}

class ProductWriter {
 public:
  ProductWriter(const RunOptions& options, RunResult& result) : options_(options), result_(result) {}

  void write(const std::string& name, const std::string& contents) {
    entries_.push_back(write_product(options_.out_dir, name, contents));
    result_.products.push_back(name);
  }

  // Runs one product step; failures are recorded, not propagated.
  void attempt(const std::string& what, const std::function<void()>& step) {
    try {
      step();
    } catch (const std::exception& e) {
      result_.complete = false;
      result_.errors.push_back(what + ": " + e.what());
    }
  }

  const std::string& format() const { return options_.format; }
  Json entries() const { return entries_; }

 private:
  const RunOptions& options_;
  RunResult& result_;
  Json entries_ = Json::array();
};

template <typename T>
std::string table(const T& value, const std::string& format, void (*csv)(std::ostream&, const T&)) {
  if (format == "json") return dump(to_json(value));
  std::ostringstream os;
  csv(os, value);
  return os.str();
}

std::string summary_header() {
  return "variant,k_pump_hz,gamma_r_hz,lifetime_ps,xi_exc,F_P,regime,emission_rate_hz,detected_rate_hz,g2_0,"
         "odmr_contrast,eta_T_per_sqrt_Hz";
}

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::string summary_row(const VariantSummary& v) {
  std::ostringstream os;
  os << v.name << ',' << format_number(v.k_pump) << ',' << format_number(v.gamma_r) << ','
     << format_number(v.lifetime_ps) << ',' << format_number(v.xi_exc) << ',' << format_number(v.F_P) << ','
     << to_string(v.regime) << ',' << format_number(v.emission_rate) << ',' << format_number(v.detected_rate) << ','
     << optional_number(v.g2_0) << ',' << optional_number(v.odmr_contrast) << ',' << optional_number(v.eta);
  return os.str();
}

void run_variant(const Scenario& vs, const VariantSetup& setup, ProductWriter& out, RunResult& result) {
  const std::string& v = setup.name;
  const std::string ext = out.format() == "json" ? ".json" : ".csv";
  Json fits = Json::object();

  const bool want_cw = vs.wants("g2") || vs.wants("g2_fit") ||
                       (vs.wants("streams") && vs.acquisition.mode == AcquisitionMode::Cw);
  const bool want_pulsed = vs.wants("decay") || vs.wants("lifetime_fit") ||
                           (vs.wants("streams") && vs.acquisition.mode == AcquisitionMode::Pulsed);

  if (want_cw) {
    out.attempt(v + " cw", [&] {
      const auto [a, b] = simulate_cw(setup.system, vs.acquisition.duration, setup.detector,
                                      RngSeed{product_seed(setup.seed, kCwStream)}, vs.acquisition.splitter);
      if (vs.wants("streams")) {
        for (const auto* s : {&a, &b}) {
          std::ostringstream os;
          write_ptsm(os, *s);
          out.write(v + "_ch" + std::to_string(s->channel) + ".ptsm", os.str());
        }
      }
      if (!(vs.wants("g2") || vs.wants("g2_fit"))) return;
      const G2Curve curve = cross_correlate(a, b, g2_bins(vs.g2), vs.threads);
      if (vs.wants("g2")) out.write(v + "_g2" + ext, table(curve, out.format(), &write_g2_csv));
      if (vs.wants("g2_fit")) {
        out.attempt(v + " g2_fit", [&] {
          G2Init init = vs.g2.init;
          if (setup.system.k_isc == 0.0) init.two_level = true;
          const FitResult fit = fit_g2(curve, init);
          fits["g2_fit"] = to_json(fit);
          out.write(v + "_g2_fit.json", dump(fits["g2_fit"]));
        });
      }
    });
  }

  if (want_pulsed) {
    out.attempt(v + " pulsed", [&] {
      const PhotonStream s = simulate_pulsed(setup.system, vs.acquisition.pulse, setup.detector,
                                             RngSeed{product_seed(setup.seed, kPulsedStream)});
      if (vs.wants("streams")) {
        std::ostringstream os;
        write_ptsm(os, s);
        out.write(v + "_pulsed.ptsm", os.str());
      }
      if (!(vs.wants("decay") || vs.wants("lifetime_fit"))) return;
      const DecayHistogram h = decay_histogram(s, vs.acquisition.pulse, vs.decay.bin_width);
      if (vs.wants("decay")) out.write(v + "_decay" + ext, table(h, out.format(), &write_decay_csv));
      if (vs.wants("lifetime_fit")) {
        out.attempt(v + " lifetime_fit", [&] {
          const FitResult fit = fit_lifetime(h, vs.decay.irf, LifetimeInit{vs.decay.tau_init, {}, {}});
          fits["lifetime_fit"] = to_json(fit);
          out.write(v + "_lifetime_fit.json", dump(fits["lifetime_fit"]));
        });
      }
    });
  }

  if (vs.saturation && (vs.wants("saturation") || vs.wants("saturation_fit"))) {
    out.attempt(v + " saturation", [&] {
      std::vector<SaturationPoint> pts;
      for (double p : vs.saturation->powers_mw) {
        LevelSystem sys = vs.emitter;
        sys.k_pump = vs.saturation->pump_per_mw * p;
        sys = couple(sys, setup.enhancement);
        const double rate =
            setup.detector.efficiency * emission_rate(sys) + setup.detector.dark_rate + setup.detector.background_rate;
        pts.push_back({p, rate});
      }
      if (vs.wants("saturation")) {
        if (out.format() == "json") {
          Json j;
          j["kind"] = "saturation_curve";
          Json rows = Json::array();
          for (const auto& pt : pts) rows.push_back({{"P_mW", pt.power_mw}, {"rate_cts_s", pt.rate}});
          j["points"] = rows;
          out.write(v + "_saturation.json", dump(j));
        } else {
          std::ostringstream os;
          write_saturation_csv(os, pts);
          out.write(v + "_saturation.csv", os.str());
        }
      }
      if (vs.wants("saturation_fit")) {
        const FitResult fit = fit_saturation(pts);
        fits["saturation_fit"] = to_json(fit);
        out.write(v + "_saturation_fit.json", dump(fits["saturation_fit"]));
      }
    });
  }

  if (vs.odmr && (vs.wants("odmr_spectrum") || vs.wants("odmr_fit") || vs.wants("sensitivity"))) {
    out.attempt(v + " odmr", [&] {
      const SpinLevelSystem spin = vs.odmr->spin_system(setup.system);
      const auto freqs = vs.odmr->frequencies();
      std::optional<OdmrSampling> sampling;
      if (vs.odmr->dwell_s > 0.0) sampling = OdmrSampling{vs.odmr->dwell_s, {product_seed(setup.seed, kOdmrStream)}};
      const OdmrSpectrum spectrum = odmr_spectrum(spin, freqs, setup.detector, sampling);
      if (vs.wants("odmr_spectrum")) out.write(v + "_odmr" + ext, table(spectrum, out.format(), &write_odmr_csv));
      if (!(vs.wants("odmr_fit") || vs.wants("sensitivity"))) return;
      const FitResult fit = fit_odmr(spectrum, OdmrInit{spin.nu0, {}, {}, {}});
      if (vs.wants("odmr_fit")) {
        fits["odmr_fit"] = to_json(fit);
        out.write(v + "_odmr_fit.json", dump(fits["odmr_fit"]));
      }
      if (vs.wants("sensitivity")) {
        SensitivityInputs in;
        in.A = vs.odmr->A;
        in.g_factor = vs.odmr->g_factor;
        in.delta_nu = std::abs(fit.value("delta_nu")) * 1e6;
        in.C = fit.value("contrast");
        in.R = fit.value("baseline_rate");
        out.write(v + "_sensitivity.json", dump(to_json(sensitivity_report(in))));
      }
    });
  }

  result.fits[v] = fits;
}

}  // namespace

VariantSetup build_variant(const Scenario& s, std::size_t index) {
  VariantSetup out;
  out.name = s.variants.empty() ? "default" : s.variants.front().name;
  out.system = s.emitter;
  out.detector = s.detector;
  if (s.cavity) {
    out.coupled = true;
    if (s.cavity->enhancement) {
      out.enhancement.xi_exc = s.cavity->enhancement->xi_exc;
      out.enhancement.F_P = s.cavity->enhancement->F_P;
      out.enhancement.regime = classify_regime(out.enhancement.F_P, out.enhancement.xi_exc);
    } else {
      out.enhancement = enhancement_at(s.cavity->mode, s.cavity->context);
    }
    out.system = couple(s.emitter, out.enhancement);
    if (s.cavity->background_scales_with_excitation) out.detector.background_rate *= out.enhancement.xi_exc;
  }
  out.seed = mix_seed(s.acquisition.seed.value_or(0) + index);
  return out;
}

VariantSummary summarize(const Scenario& s, const VariantSetup& v) {
  VariantSummary out;
  out.name = v.name;
  out.k_pump = v.system.k_pump;
  out.gamma_r = v.system.gamma_r;
  out.lifetime_ps = v.system.lifetime() * kPsPerSecond;
  out.xi_exc = v.enhancement.xi_exc;
  out.F_P = v.enhancement.F_P;
  out.regime = v.enhancement.regime;
  out.emission_rate = emission_rate(v.system);
  const double signal = v.detector.efficiency * out.emission_rate;
  const double noise = v.detector.dark_rate + v.detector.background_rate;
  out.detected_rate = signal + noise;
  if (out.detected_rate > 0.0) {
    const double rho = signal / out.detected_rate;
    out.g2_0 = 1.0 - rho * rho;
  }
  if (s.odmr) {
    const SpinLevelSystem spin = s.odmr->spin_system(v.system);
    const Spectral line = odmr_line(spin, v.detector);
    out.odmr_contrast = line.contrast;
    if (line.contrast > 0.0 && line.contrast < 1.0 && line.off > 0.0) {
      out.eta = sensitivity({s.odmr->A, line.fwhm_mhz * 1e6, line.contrast, line.off, s.odmr->g_factor});
    }
  }
  return out;
}

Json to_json(const VariantSummary& v) {
  Json j;
  j["variant"] = v.name;
  j["k_pump_hz"] = v.k_pump;
  j["gamma_r_hz"] = v.gamma_r;
  j["lifetime_ps"] = v.lifetime_ps;
  j["xi_exc"] = v.xi_exc;
  j["F_P"] = v.F_P;
  j["regime"] = std::string(to_string(v.regime));
  j["emission_rate_hz"] = v.emission_rate;
  j["detected_rate_hz"] = v.detected_rate;
  j["g2_0"] = v.g2_0 ? Json(*v.g2_0) : Json(nullptr);
  j["odmr_contrast"] = v.odmr_contrast ? Json(*v.odmr_contrast) : Json(nullptr);
  j["eta_T_per_sqrt_Hz"] = v.eta ? Json(*v.eta) : Json(nullptr);
  return j;
}

RunResult run_scenario(const Scenario& s, const RunOptions& options, const PresetLibrary& presets) {
  if (options.format != "csv" && options.format != "json") throw ConfigError("format", "expected csv or json");
  RunResult result;
  ProductWriter out(options, result);

  for (std::size_t k = 0; k < s.variants.size(); ++k) {
    const Variant& variant = s.variants[k];
    out.attempt(variant.name, [&] {
      const Scenario vs = variant_scenario(s, variant, presets);
      const VariantSetup setup = build_variant(vs, k);
      result.summaries.push_back(summarize(vs, setup));
      run_variant(vs, setup, out, result);
    });
  }

  if (s.wants("summary")) {
    out.attempt("summary", [&] {
      if (options.format == "json") {
        Json j;
        j["kind"] = "summary";
        j["scenario"] = s.name;
        Json rows = Json::array();
        for (const auto& v : result.summaries) rows.push_back(to_json(v));
        j["variants"] = rows;
        j["fits"] = result.fits;
        out.write("summary.json", dump(j));
      } else {
        std::ostringstream os;
        os << summary_header() << '\n';
        for (const auto& v : result.summaries) os << summary_row(v) << '\n';
        out.write("summary.csv", os.str());
      }
    });
  }

  Json m;
  m["kind"] = kManifestKind;
  m["manifest_version"] = 1;
  m["tool"] = "tipcav";
  m["version"] = kVersion;
  m["scenario"] = s.name;
  m["seed"] = s.acquisition.seed ? Json(*s.acquisition.seed) : Json(nullptr);
  m["format"] = options.format;
  m["complete"] = result.complete;
  m["errors"] = result.errors;
  m["products"] = out.entries();
  m["config"] = s.resolved;
  result.manifest = m;
  write_product(options.out_dir, "manifest.json", dump(m));
  return result;
}

std::vector<SweepRow> sweep(const Json& config, const SweepOptions& options, const PresetLibrary& presets) {
  const Json resolved = resolve_config(config, presets);
  (void)get_numeric_path(resolved, options.path);
  const Scenario base = parse_scenario(resolved, presets);

  // Build every instance up front so configuration errors surface before
  // any work starts.
  std::vector<Scenario> instances;
  for (std::size_t i = 0; i < options.values.size(); ++i) {
    Json c = with_numeric_path(resolved, options.path, options.values[i]);
    if (base.acquisition.seed) c["acquisition"]["seed"] = mix_seed(*base.acquisition.seed + i) >> 1;
    instances.push_back(parse_scenario(c, presets));
  }

  std::vector<std::vector<SweepRow>> per_value(instances.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < instances.size(); i = next++) {
      const Scenario& sc = instances[i];
      std::vector<SweepRow> rows;
      if (sc.outputs.empty()) {
        for (std::size_t k = 0; k < sc.variants.size(); ++k) {
          const Scenario vs = variant_scenario(sc, sc.variants[k], presets);
          rows.push_back({options.values[i], summarize(vs, build_variant(vs, k)), std::nullopt, true});
        }
      } else {
        RunOptions ro{options.out_dir / ("run_" + std::to_string(i)), options.format};
        const RunResult r = run_scenario(sc, ro, presets);
        for (const auto& summary : r.summaries) {
          SweepRow row{options.values[i], summary, std::nullopt, r.complete};
          const Json& f = r.fits.contains(summary.name) ? r.fits.at(summary.name) : Json();
          if (f.is_object() && f.contains("g2_fit")) row.g2_0_fit = f["g2_fit"]["derived"]["g2_0_effective"].get<double>();
          rows.push_back(std::move(row));
        }
      }
      per_value[i] = std::move(rows);
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(instances.size())));
  std::vector<std::future<void>> futures;
  for (unsigned j = 0; j < jobs && !instances.empty(); ++j) futures.push_back(std::async(std::launch::async, worker));
  for (auto& f : futures) f.get();

  std::vector<SweepRow> rows;
  for (auto& r : per_value) std::move(r.begin(), r.end(), std::back_inserter(rows));
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::string& path, const std::vector<SweepRow>& rows) {
  os << path << ',' << summary_header() << ",g2_0_fit,complete\n";
  for (const auto& r : rows) {
    os << format_number(r.value) << ',' << summary_row(r.summary) << ',' << optional_number(r.g2_0_fit) << ','
       << (r.complete ? "true" : "false") << '\n';
  }
}

}  // namespace tipcav
