#pragma once

#include <iosfwd>
#include <json.hpp>
#include <string>
#include <vector>

#include "tipcav/correlator.hpp"
#include "tipcav/fitting.hpp"
#include "tipcav/spin_odmr.hpp"

namespace tipcav {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal form of a double.
std::string format_number(double v);

// CSV writers. Each starts with a single header line.
void write_g2_csv(std::ostream& os, const G2Curve& c);          // tau_ps,counts,g2
void write_decay_csv(std::ostream& os, const DecayHistogram& h);  // delay_ps,counts
void write_odmr_csv(std::ostream& os, const OdmrSpectrum& s);    // nu_MHz,rate_cts_s
void write_saturation_csv(std::ostream& os, const std::vector<SaturationPoint>& pts);  // P_mW,rate_cts_s

Json to_json(const G2Curve& c);
Json to_json(const DecayHistogram& h);
Json to_json(const OdmrSpectrum& s);
Json to_json(const FitResult& f);
Json to_json(const SensitivityReport& r);

G2Curve g2_curve_from_json(const Json& j);
DecayHistogram decay_histogram_from_json(const Json& j);
OdmrSpectrum odmr_spectrum_from_json(const Json& j);

/// Reads back the CSV forms. A g2 CSV carries no bin bounds or
/// normalization; bins are reconstructed as uniform around tau and the
/// denominator from counts / g2.
G2Curve read_g2_csv(std::istream& is);
DecayHistogram read_decay_csv(std::istream& is, double period);
OdmrSpectrum read_odmr_csv(std::istream& is);
std::vector<SaturationPoint> read_saturation_csv(std::istream& is);

}  // namespace tipcav
