#include "tipcav/io_tables.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "tipcav/stream_io.hpp"

namespace tipcav {

namespace {

std::vector<std::vector<double>> read_numeric_csv(std::istream& is, std::size_t columns) {
  std::vector<std::vector<double>> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      const char c = line[0];
      if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.')) continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError("CSV: non-numeric cell '" + cell + "'");
      }
    }
    if (row.size() < columns) throw FormatError("CSV: expected " + std::to_string(columns) + " columns");
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename T>
std::vector<T> get_vector(const Json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("JSON: missing key '") + key + "'");
  return j.at(key).get<std::vector<T>>();
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_g2_csv(std::ostream& os, const G2Curve& c) {
  os << "tau_ps,counts,g2\n";
  for (std::size_t i = 0; i < c.size(); ++i) {
    os << format_number(c.center(i)) << ',' << c.counts[i] << ',' << format_number(c.normalized[i]) << '\n';
  }
}

void write_decay_csv(std::ostream& os, const DecayHistogram& h) {
  os << "delay_ps,counts\n";
  for (std::size_t i = 0; i < h.size(); ++i) os << format_number(h.bin_lo[i]) << ',' << h.counts[i] << '\n';
}

void write_odmr_csv(std::ostream& os, const OdmrSpectrum& s) {
  os << "nu_MHz,rate_cts_s\n";
  for (std::size_t i = 0; i < s.frequencies.size(); ++i) {
    os << format_number(s.frequencies[i]) << ',' << format_number(s.rates[i]) << '\n';
  }
}

void write_saturation_csv(std::ostream& os, const std::vector<SaturationPoint>& pts) {
  os << "P_mW,rate_cts_s\n";
  for (const auto& p : pts) os << format_number(p.power_mw) << ',' << format_number(p.rate) << '\n';
}

Json to_json(const G2Curve& c) {
  Json j;
  j["kind"] = "g2_curve";
  j["window_ps"] = c.window;
  j["bin_width_ps"] = c.bin_width;
  j["span_ps"] = c.span;
  j["n_a"] = c.n_a;
  j["n_b"] = c.n_b;
  j["rate_a_hz"] = c.span > 0 ? static_cast<double>(c.n_a) * kPsPerSecond / static_cast<double>(c.span) : 0.0;
  j["rate_b_hz"] = c.span > 0 ? static_cast<double>(c.n_b) * kPsPerSecond / static_cast<double>(c.span) : 0.0;
  j["total_pairs_norm"] = c.total_pairs_norm;
  j["degenerate"] = c.degenerate;
  j["lag_lo_ps"] = c.lag_lo;
  j["lag_hi_ps"] = c.lag_hi;
  j["counts"] = c.counts;
  j["g2"] = c.normalized;
  return j;
}

Json to_json(const DecayHistogram& h) {
  Json j;
  j["kind"] = "decay_histogram";
  j["period_ps"] = h.period;
  j["bin_width_ps"] = h.bin_width;
  j["n_pulses"] = h.n_pulses;
  j["bin_lo_ps"] = h.bin_lo;
  j["counts"] = h.counts;
  return j;
}

Json to_json(const OdmrSpectrum& s) {
  Json j;
  j["kind"] = "odmr_spectrum";
  j["contrast"] = s.contrast;
  j["nu_MHz"] = s.frequencies;
  j["rate_cts_s"] = s.rates;
  return j;
}

Json to_json(const FitResult& f) {
  Json j;
  j["kind"] = "fit_result";
  Json params = Json::array();
  for (std::size_t i = 0; i < f.names.size(); ++i) {
    Json p;
    p["name"] = f.names[i];
    p["value"] = f.values[i];
    if (std::isfinite(f.stderrs[i])) {
      p["stderr"] = f.stderrs[i];
    } else {
      p["stderr"] = nullptr;
    }
    params.push_back(p);
  }
  j["params"] = params;
  j["residual_norm"] = f.residual_norm;
  j["converged"] = f.converged;
  j["singular"] = f.singular;
  j["iterations"] = f.iterations;
  j["gradient_norm"] = f.gradient_norm;
  Json derived = Json::object();
  for (const auto& [k, v] : f.derived) derived[k] = v;
  j["derived"] = derived;
  return j;
}

Json to_json(const SensitivityReport& r) {
  Json j;
  j["kind"] = "sensitivity";
  j["inputs"] = {{"A", r.inputs.A},
                 {"delta_nu_hz", r.inputs.delta_nu},
                 {"C", r.inputs.C},
                 {"R_cts_s", r.inputs.R},
                 {"g_factor", r.inputs.g_factor},
                 {"h_J_s", kPlanck},
                 {"mu_B_J_per_T", kBohrMagneton}};
  j["h_over_g_mu_B_T_per_Hz"] = r.field_per_frequency;
  j["delta_nu_over_C_sqrt_R"] = r.linewidth_over_signal;
  j["eta_T_per_sqrt_Hz"] = r.eta;
  j["eta_uT_per_sqrt_Hz"] = r.eta * 1e6;
  return j;
}

G2Curve g2_curve_from_json(const Json& j) {
  G2Curve c;
  c.lag_lo = get_vector<Picoseconds>(j, "lag_lo_ps");
  c.lag_hi = get_vector<Picoseconds>(j, "lag_hi_ps");
  c.counts = get_vector<std::uint64_t>(j, "counts");
  c.normalized = get_vector<double>(j, "g2");
  if (c.lag_hi.size() != c.lag_lo.size() || c.counts.size() != c.lag_lo.size() ||
      c.normalized.size() != c.lag_lo.size()) {
    throw FormatError("g2 JSON: array lengths differ");
  }
  c.total_pairs_norm = j.value("total_pairs_norm", 0.0);
  c.degenerate = j.value("degenerate", c.total_pairs_norm <= 0.0);
  c.window = j.value("window_ps", Picoseconds{0});
  c.bin_width = j.value("bin_width_ps", Picoseconds{0});
  c.span = j.value("span_ps", Picoseconds{0});
  c.n_a = j.value("n_a", std::uint64_t{0});
  c.n_b = j.value("n_b", std::uint64_t{0});
  return c;
}

DecayHistogram decay_histogram_from_json(const Json& j) {
  DecayHistogram h;
  h.period = j.at("period_ps").get<double>();
  h.bin_width = j.at("bin_width_ps").get<double>();
  h.n_pulses = j.value("n_pulses", std::uint64_t{0});
  h.bin_lo = get_vector<double>(j, "bin_lo_ps");
  h.counts = get_vector<std::uint64_t>(j, "counts");
  if (h.bin_lo.size() != h.counts.size()) throw FormatError("decay JSON: array lengths differ");
  return h;
}

OdmrSpectrum odmr_spectrum_from_json(const Json& j) {
  OdmrSpectrum s;
  s.frequencies = get_vector<double>(j, "nu_MHz");
  s.rates = get_vector<double>(j, "rate_cts_s");
  s.contrast = j.value("contrast", 0.0);
  if (s.frequencies.size() != s.rates.size()) throw FormatError("ODMR JSON: array lengths differ");
  return s;
}

G2Curve read_g2_csv(std::istream& is) {
  const auto rows = read_numeric_csv(is, 3);
  if (rows.size() < 2) throw FormatError("g2 CSV: need at least two rows");
  G2Curve c;
  const double step = rows[1][0] - rows[0][0];
  std::vector<double> norms;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double centre = rows[i][0];
    const double next = i + 1 < rows.size() ? rows[i + 1][0] - centre : step;
    const double prev = i > 0 ? centre - rows[i - 1][0] : step;
    const double w = std::max(1.0, std::round(0.5 * (next + prev)));
    const auto lo = static_cast<Picoseconds>(std::llround(centre - 0.5 * (w - 1.0)));
    c.lag_lo.push_back(lo);
    c.lag_hi.push_back(lo + static_cast<Picoseconds>(w) - 1);
    c.counts.push_back(static_cast<std::uint64_t>(std::llround(rows[i][1])));
    c.normalized.push_back(rows[i][2]);
    if (rows[i][1] > 0.0 && rows[i][2] > 0.0) norms.push_back(rows[i][1] / rows[i][2] / w);
  }
  if (!norms.empty()) {
    std::nth_element(norms.begin(), norms.begin() + static_cast<std::ptrdiff_t>(norms.size() / 2), norms.end());
    c.total_pairs_norm = norms[norms.size() / 2];
  }
  c.degenerate = c.total_pairs_norm <= 0.0;
  c.window = std::max(std::abs(c.lag_lo.front()), std::abs(c.lag_hi.back()));
  c.bin_width = static_cast<Picoseconds>(std::llround(step));
  return c;
}

DecayHistogram read_decay_csv(std::istream& is, double period) {
  const auto rows = read_numeric_csv(is, 2);
  if (rows.size() < 2) throw FormatError("decay CSV: need at least two rows");
  DecayHistogram h;
  h.period = period;
  h.bin_width = rows[1][0] - rows[0][0];
  for (const auto& r : rows) {
    h.bin_lo.push_back(r[0]);
    h.counts.push_back(static_cast<std::uint64_t>(std::llround(r[1])));
  }
  return h;
}

OdmrSpectrum read_odmr_csv(std::istream& is) {
  OdmrSpectrum s;
  for (const auto& r : read_numeric_csv(is, 2)) {
    s.frequencies.push_back(r[0]);
    s.rates.push_back(r[1]);
  }
  return s;
}

std::vector<SaturationPoint> read_saturation_csv(std::istream& is) {
  std::vector<SaturationPoint> pts;
  for (const auto& r : read_numeric_csv(is, 2)) pts.push_back({r[0], r[1]});
  return pts;
}

}  // namespace tipcav
