#include "tipcav/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>

namespace tipcav {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Typed reads from one JSON object; unknown keys are an error.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected a table");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return number_at(key);
  }

  double required_number(const std::string& key) {
    if (!has(key)) throw ConfigError(join(path_, key), "required");
    return number_at(key);
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    if (!has(key)) return fallback;
    const Json& j = j_.at(key);
    if (j.is_number_unsigned()) {
      if (j.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
        throw ConfigError(join(path_, key), "integer out of range");
      }
      return static_cast<std::int64_t>(j.get<std::uint64_t>());
    }
    if (j.is_number_integer()) return j.get<std::int64_t>();
    const double v = number_at(key);
    if (v != std::floor(v) || std::abs(v) > 9.0e18) throw ConfigError(join(path_, key), "expected an integer");
    return static_cast<std::int64_t>(v);
  }

  /// Non-negative integer over the full unsigned 64-bit range.
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const Json& j = j_.at(key);
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    const std::int64_t v = integer(key, 0);
    if (v < 0) throw ConfigError(join(path_, key), "must be >= 0");
    return static_cast<std::uint64_t>(v);
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) throw ConfigError(join(path_, key), "expected true/false");
    return j_.at(key).get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) throw ConfigError(join(path_, key), "expected a string");
    return j_.at(key).get<std::string>();
  }

  std::optional<Section> child(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return Section(j_.at(key), join(path_, key));
  }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string key_path(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(join(path_, k), "unknown key");
    }
  }

 private:
  double number_at(const std::string& key) const {
    const Json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(join(path_, key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(join(path_, key), "must be finite");
    return d;
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

/// Config key for a model validation message of the form "Type.field ...":
/// the field, renamed through `aliases` where the config spells it
/// differently, under `section`. Falls back to the section itself.
std::string key_for(const std::string& section, const std::string& message,
                    const std::map<std::string, std::string>& aliases) {
  const auto dot = message.find('.');
  if (dot == std::string::npos) return section;
  auto end = dot + 1;
  while (end < message.size() && (std::isalnum(static_cast<unsigned char>(message[end])) || message[end] == '_')) ++end;
  const std::string field = message.substr(dot + 1, end - dot - 1);
  if (field.empty() || message.find(' ') < dot) return section;
  const auto it = aliases.find(field);
  return section + "." + (it == aliases.end() ? field : it->second);
}

template <typename F>
void validated(const std::string& key, F&& check, const std::map<std::string, std::string>& aliases = {}) {
  try {
    check();
  } catch (const InvalidParameter& e) {
    throw ConfigError(key_for(key, e.what(), aliases), e.what());
  } catch (const AbsorbingStateError& e) {
    throw ConfigError(key, e.what());
  }
}

LevelSystem parse_emitter(Section s) {
  LevelSystem sys;
  sys.k_pump = s.number("k_pump", 0.0);
  if (s.has("lifetime_ns")) {
    const double tau = s.required_number("lifetime_ns");
    if (!(tau > 0.0)) throw ConfigError(s.key_path("lifetime_ns"), "must be > 0");
    if (s.has("gamma_r")) throw ConfigError(s.key_path("gamma_r"), "give either gamma_r or lifetime_ns");
    sys.gamma_r = 1e9 / tau;
  } else {
    sys.gamma_r = s.required_number("gamma_r");
  }
  sys.gamma_nr = s.number("gamma_nr", 0.0);
  sys.k_isc = s.number("k_isc", 0.0);
  sys.k_d = s.number("k_d", 0.0);
  s.finish();
  validated("emitter", [&] {
    sys.validate();
    if (sys.has_absorbing_state()) throw AbsorbingStateError("k_isc > 0 requires k_d > 0");
  });
  return sys;
}

PlasmonMode parse_mode(Section s) {
  PlasmonMode m;
  m.E_p = s.required_number("E_p");
  m.Gamma_p = s.required_number("Gamma_p");
  m.xi_max = s.required_number("xi_max");
  m.F_max = s.required_number("F_max");
  m.delta_em = s.number("delta_em", 0.0);
  m.d0 = s.number("d0", 5.0);
  m.pol_contrast = s.number("pol_contrast", 1.0);
  m.quenching_rate = s.number("quenching_rate", 0.0);
  s.finish();
  validated("cavity.mode", [&] { m.validate(); });
  return m;
}

CavitySpec parse_cavity(Section s) {
  CavitySpec c;
  if (auto m = s.child("mode")) {
    c.mode = parse_mode(*m);
  } else if (!s.has("enhancement")) {
    throw ConfigError(s.key_path("mode"), "required unless cavity.enhancement is given");
  }
  if (auto ctx = s.child("context")) {
    c.context.d = ctx->number("d", 0.0);
    c.context.theta = ctx->number("theta", 0.0);
    c.context.E_zpl = ctx->number("E_zpl", 1.91);
    c.context.E_laser = ctx->number("E_laser", 2.09);
    ctx->finish();
  }
  validated("cavity.context", [&] { c.context.validate(); });
  if (auto e = s.child("enhancement")) {
    EnhancementOverride o;
    o.xi_exc = e->required_number("xi_exc");
    o.F_P = e->required_number("F_P");
    e->finish();
    if (!(o.xi_exc > 0.0)) throw ConfigError("cavity.enhancement.xi_exc", "must be > 0");
    if (!(o.F_P > 0.0)) throw ConfigError("cavity.enhancement.F_P", "must be > 0");
    c.enhancement = o;
  }
  c.background_scales_with_excitation = s.boolean("background_scales_with_excitation", false);
  s.finish();
  return c;
}

DetectorModel parse_detector(Section s) {
  DetectorModel d;
  d.efficiency = s.number("efficiency", 1.0);
  d.dark_rate = s.number("dark_rate", 0.0);
  d.dead_time = s.number("dead_time_ps", 0.0);
  d.irf_sigma = s.number("irf_sigma_ps", 0.0);
  d.background_rate = s.number("background_rate", 0.0);
  s.finish();
  validated("detector", [&] { d.validate(); }, {{"dead_time", "dead_time_ps"}, {"irf_sigma", "irf_sigma_ps"}});
  return d;
}

Acquisition parse_acquisition(Section s) {
  Acquisition a;
  const std::string mode = s.string("mode", "cw");
  if (mode == "cw") {
    a.mode = AcquisitionMode::Cw;
  } else if (mode == "pulsed") {
    a.mode = AcquisitionMode::Pulsed;
  } else if (mode == "odmr") {
    a.mode = AcquisitionMode::Odmr;
  } else {
    throw ConfigError("acquisition.mode", "expected cw, pulsed or odmr");
  }
  a.duration = s.integer("duration_ps", 0);
  if (s.has("seed")) {
    a.seed = s.unsigned_integer("seed", 0);
  }
  a.splitter = s.number("splitter", 0.5);
  if (!(a.splitter > 0.0 && a.splitter < 1.0)) throw ConfigError("acquisition.splitter", "must lie in (0, 1)");
  if (auto p = s.child("pulse")) {
    a.pulse.period = p->number("period_ps", a.pulse.period);
    a.pulse.pulse_width = p->number("width_ps", 0.0);
    const std::int64_t pulses = p->integer("pulses", 0);
    if (pulses < 0) throw ConfigError("acquisition.pulse.pulses", "must be >= 0");
    a.pulse.pulses = static_cast<std::uint64_t>(pulses);
    a.pulse.excitation_probability = p->number("excitation_probability", 1.0);
    p->finish();
    validated("acquisition.pulse", [&] { a.pulse.validate(); }, {{"period", "period_ps"}, {"pulse_width", "width_ps"}});
  }
  s.finish();
  if (a.duration < 0) throw ConfigError("acquisition.duration_ps", "must be >= 0");
  return a;
}

void parse_analysis(Section s, Scenario& out) {
  if (auto g = s.child("g2")) {
    out.g2.window = g->integer("window_ps", out.g2.window);
    out.g2.bin_width = g->integer("bin_width_ps", out.g2.bin_width);
    out.g2.log_bins_per_decade = static_cast<int>(g->integer("log_bins_per_decade", 0));
    if (!(out.g2.bin_width > 0)) throw ConfigError("analysis.g2.bin_width_ps", "must be > 0");
    if (!(out.g2.window > out.g2.bin_width)) throw ConfigError("analysis.g2.window_ps", "must exceed bin_width_ps");
    if (out.g2.log_bins_per_decade < 0) throw ConfigError("analysis.g2.log_bins_per_decade", "must be >= 0");
    if (auto init = g->child("init")) {
      out.g2.init.rho = init->number("rho", out.g2.init.rho);
      out.g2.init.a = init->number("a", out.g2.init.a);
      out.g2.init.lambda_1 = init->number("lambda_1", out.g2.init.lambda_1);
      out.g2.init.lambda_2 = init->number("lambda_2", out.g2.init.lambda_2);
      out.g2.init.two_level = init->boolean("two_level", false);
      init->finish();
    }
    g->finish();
  }
  if (auto d = s.child("decay")) {
    out.decay.bin_width = d->number("bin_width_ps", out.decay.bin_width);
    out.decay.tau_init = d->number("tau_init_ps", out.decay.tau_init);
    if (auto irf = d->child("irf")) {
      out.decay.irf.sigma = irf->number("sigma_ps", 0.0);
      out.decay.irf.t0 = irf->number("t0_ps", 0.0);
      irf->finish();
    }
    if (!(out.decay.bin_width > 0.0)) throw ConfigError("analysis.decay.bin_width_ps", "must be > 0");
    if (!(out.decay.tau_init > 0.0)) throw ConfigError("analysis.decay.tau_init_ps", "must be > 0");
    if (!(out.decay.irf.sigma >= 0.0)) throw ConfigError("analysis.decay.irf.sigma_ps", "must be >= 0");
    d->finish();
  }
  if (auto sat = s.child("saturation")) {
    SaturationAnalysis a;
    if (!sat->has("powers_mw")) throw ConfigError("analysis.saturation.powers_mw", "required");
    const Json& powers = sat->raw("powers_mw");
    if (!powers.is_array()) throw ConfigError("analysis.saturation.powers_mw", "expected a list of numbers");
    for (const auto& p : powers) {
      if (!p.is_number() || !(p.get<double>() >= 0.0)) {
        throw ConfigError("analysis.saturation.powers_mw", "powers must be numbers >= 0");
      }
      a.powers_mw.push_back(p.get<double>());
    }
    a.pump_per_mw = sat->required_number("pump_per_mw");
    if (!(a.pump_per_mw > 0.0)) throw ConfigError("analysis.saturation.pump_per_mw", "must be > 0");
    sat->finish();
    out.saturation = a;
  }
  if (auto o = s.child("odmr")) {
    OdmrAnalysis a;
    a.k_isc_bright = o->number("k_isc_bright", a.k_isc_bright);
    a.k_isc_dark = o->number("k_isc_dark", a.k_isc_dark);
    a.branch_to_bright = o->number("branch_to_bright", a.branch_to_bright);
    a.nu0 = o->number("nu0_mhz", a.nu0);
    a.delta_nu = o->number("delta_nu_mhz", a.delta_nu);
    a.k_mw = o->number("k_mw", a.k_mw);
    a.start_mhz = o->number("start_mhz", a.start_mhz);
    a.stop_mhz = o->number("stop_mhz", a.stop_mhz);
    a.points = static_cast<int>(o->integer("points", a.points));
    a.dwell_s = o->number("dwell_s", 0.0);
    const std::string lineshape = o->string("lineshape", "lorentzian");
    if (lineshape == "lorentzian") {
      a.A = kLorentzianLineshape;
    } else if (lineshape == "gaussian") {
      a.A = kGaussianLineshape;
    } else {
      throw ConfigError("analysis.odmr.lineshape", "expected lorentzian or gaussian");
    }
    a.A = o->number("A", a.A);
    a.g_factor = o->number("g_factor", a.g_factor);
    o->finish();
    if (a.points < 5) throw ConfigError("analysis.odmr.points", "need at least 5 points");
    if (!(a.stop_mhz > a.start_mhz)) throw ConfigError("analysis.odmr.stop_mhz", "must exceed start_mhz");
    if (!(a.dwell_s >= 0.0)) throw ConfigError("analysis.odmr.dwell_s", "must be >= 0");
    if (!(a.A > 0.0)) throw ConfigError("analysis.odmr.A", "must be > 0");
    if (!(a.g_factor > 0.0)) throw ConfigError("analysis.odmr.g_factor", "must be > 0");
    out.odmr = a;
  }
  s.finish();
}

Json* find_path(Json& config, const std::string& path) {
  Json* node = &config;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty() || !node->is_object() || !node->contains(key)) return nullptr;
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return node;
}

}  // namespace

Json PresetLibrary::load(const std::filesystem::path& dir, const std::string& name) const {
  const auto file = root_ / dir / (name + ".json");
  std::ifstream is(file);
  if (!is) throw ConfigError("preset", "unknown preset '" + name + "' (looked for " + file.string() + ")");
  try {
    return Json::parse(is);
  } catch (const Json::parse_error& e) {
    throw ConfigError("preset", file.string() + ": " + e.what());
  }
}

Json PresetLibrary::scenario(const std::string& name) const { return load("scenarios", name); }
Json PresetLibrary::plasmon(const std::string& name) const { return load("plasmon", name); }

std::vector<std::string> PresetLibrary::scenario_names() const {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(root_ / "scenarios", ec)) {
    if (e.path().extension() == ".json") names.push_back(e.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

const std::vector<std::string>& known_outputs() {
  static const std::vector<std::string> names{"streams",      "g2",         "g2_fit",   "decay",
                                              "lifetime_fit", "saturation", "saturation_fit",
                                              "odmr_spectrum", "odmr_fit",  "sensitivity", "summary"};
  return names;
}

SpinLevelSystem OdmrAnalysis::spin_system(const LevelSystem& base) const {
  SpinLevelSystem s;
  s.base = base;
  s.k_isc_bright = k_isc_bright;
  s.k_isc_dark = k_isc_dark;
  s.branch_to_bright = branch_to_bright;
  s.nu0 = nu0;
  s.delta_nu = delta_nu;
  s.k_mw = k_mw;
  return s;
}

std::vector<double> OdmrAnalysis::frequencies() const {
  std::vector<double> f(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) f[static_cast<std::size_t>(i)] = start_mhz + (stop_mhz - start_mhz) * i / (points - 1);
  return f;
}

bool Scenario::wants(const std::string& product) const {
  return std::find(outputs.begin(), outputs.end(), product) != outputs.end();
}

bool Scenario::stochastic() const {
  for (const char* p : {"streams", "g2", "g2_fit", "decay", "lifetime_fit"}) {
    if (wants(p)) return true;
  }
  return odmr && odmr->dwell_s > 0.0 && (wants("odmr_spectrum") || wants("odmr_fit") || wants("sensitivity"));
}

Json resolve_config(const Json& config, const PresetLibrary& presets) {
  if (!config.is_object()) throw ConfigError("<root>", "expected a table");
  Json out = config;
  if (out.contains("extends")) {
    if (!out["extends"].is_string()) throw ConfigError("extends", "expected a preset name");
    Json base = resolve_config(presets.scenario(out["extends"].get<std::string>()), presets);
    out.erase("extends");
    base.merge_patch(out);
    out = std::move(base);
  }
  if (out.contains("cavity") && out["cavity"].is_object() && out["cavity"].contains("mode_preset")) {
    Json& cav = out["cavity"];
    if (!cav["mode_preset"].is_string()) throw ConfigError("cavity.mode_preset", "expected a preset name");
    Json mode = presets.plasmon(cav["mode_preset"].get<std::string>());
    mode.erase("description");
    if (cav.contains("mode")) mode.merge_patch(cav["mode"]);
    cav["mode"] = mode;
    cav.erase("mode_preset");
  }
  return out;
}

Scenario parse_scenario(const Json& config, const PresetLibrary& presets) {
  Scenario s;
  s.resolved = resolve_config(config, presets);
  Section root(s.resolved, "");
  s.name = root.string("name", "scenario");
  (void)root.string("description", "");
  if (auto e = root.child("emitter")) {
    s.emitter = parse_emitter(*e);
  } else {
    throw ConfigError("emitter", "required");
  }
  if (auto c = root.child("cavity")) s.cavity = parse_cavity(*c);
  if (auto d = root.child("detector")) s.detector = parse_detector(*d);
  if (auto a = root.child("acquisition")) s.acquisition = parse_acquisition(*a);
  if (auto a = root.child("analysis")) parse_analysis(*a, s);

  if (root.has("outputs")) {
    const Json& outs = root.raw("outputs");
    if (!outs.is_array()) throw ConfigError("outputs", "expected a list of product names");
    for (const auto& o : outs) {
      if (!o.is_string()) throw ConfigError("outputs", "expected a list of product names");
      const auto name = o.get<std::string>();
      const auto& known = known_outputs();
      if (std::find(known.begin(), known.end(), name) == known.end()) {
        throw ConfigError("outputs", "unknown product '" + name + "'");
      }
      s.outputs.push_back(name);
    }
  }

  if (root.has("variants")) {
    const Json& vs = root.raw("variants");
    if (!vs.is_array()) throw ConfigError("variants", "expected a list");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      Section v(vs[i], "variants[" + std::to_string(i) + "]");
      Variant var;
      var.name = v.string("name", "");
      if (var.name.empty()) throw ConfigError(v.key_path("name"), "required");
      var.uncoupled = v.boolean("uncoupled", false);
      if (v.has("overrides")) {
        var.overrides = v.raw("overrides");
        if (!var.overrides.is_object()) throw ConfigError(v.key_path("overrides"), "expected a table of paths");
      }
      v.finish();
      s.variants.push_back(std::move(var));
    }
  } else {
    s.variants.push_back({"uncoupled", true, Json::object()});
    if (s.cavity) s.variants.push_back({"coupled", false, Json::object()});
  }

  const std::int64_t threads = root.integer("threads", 1);
  if (threads < 1) throw ConfigError("threads", "must be >= 1");
  s.threads = static_cast<unsigned>(threads);
  root.finish();

  if (s.stochastic() && !s.acquisition.seed) {
    throw ConfigError("acquisition.seed", "required for stochastic outputs");
  }
  if ((s.wants("streams") || s.wants("g2") || s.wants("g2_fit")) && s.acquisition.mode == AcquisitionMode::Cw &&
      s.acquisition.duration <= 0) {
    throw ConfigError("acquisition.duration_ps", "must be > 0 for cw acquisition");
  }
  if ((s.wants("decay") || s.wants("lifetime_fit")) && s.acquisition.pulse.pulses == 0) {
    throw ConfigError("acquisition.pulse.pulses", "must be > 0 for decay products");
  }
  if ((s.wants("saturation") || s.wants("saturation_fit")) && !s.saturation) {
    throw ConfigError("analysis.saturation", "required for saturation products");
  }
  if ((s.wants("odmr_spectrum") || s.wants("odmr_fit") || s.wants("sensitivity")) && !s.odmr) {
    throw ConfigError("analysis.odmr", "required for ODMR products");
  }
  for (const auto& v : s.variants) {
    for (const auto& [path, value] : v.overrides.items()) {
      Json probe = s.resolved;
      if (!find_path(probe, path)) throw ConfigError("variants." + v.name + ".overrides." + path, "path not found");
      (void)value;
    }
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path, const PresetLibrary& presets) {
  std::ifstream is(path);
  if (!is) throw ConfigError("<file>", "cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(is);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<file>", path.string() + ": " + e.what());
  }
  return parse_scenario(j, presets);
}

double get_numeric_path(const Json& config, const std::string& path) {
  Json copy = config;
  const Json* node = find_path(copy, path);
  if (!node) throw ConfigError(path, "path not found");
  if (!node->is_number()) throw ConfigError(path, "not a numeric field");
  return node->get<double>();
}

Json with_numeric_path(Json config, const std::string& path, double value) {
  Json* node = find_path(config, path);
  if (!node) throw ConfigError(path, "path not found");
  if (!node->is_number()) throw ConfigError(path, "not a numeric field");
  if (node->is_number_integer() && value == std::floor(value)) {
    *node = static_cast<std::int64_t>(value);
  } else {
    *node = value;
  }
  return config;
}

Scenario variant_scenario(const Scenario& s, const Variant& v, const PresetLibrary& presets) {
  Json config = s.resolved;
  for (const auto& [path, value] : v.overrides.items()) {
    Json* node = find_path(config, path);
    if (!node) throw ConfigError("variants." + v.name + ".overrides." + path, "path not found");
    *node = value;
  }
  if (v.uncoupled) config.erase("cavity");
  config.erase("variants");
  Scenario out = parse_scenario(config, presets);
  out.variants = {v};
  return out;
}

}  // namespace tipcav
