#include "tipcav/spin_odmr.hpp"

#include <cmath>

#include "tipcav/cavity.hpp"
#include "tipcav/rng.hpp"

namespace tipcav {

void SpinLevelSystem::validate() const {
  LevelSystem b = base;
  b.k_isc = 0.0;
  b.validate();
  if (!(k_isc_bright >= 0.0) || !std::isfinite(k_isc_bright)) {
    throw InvalidParameter("SpinLevelSystem.k_isc_bright must be >= 0");
  }
  if (!(k_isc_dark >= k_isc_bright) || !std::isfinite(k_isc_dark)) {
    throw InvalidParameter("SpinLevelSystem.k_isc_dark must be >= k_isc_bright");
  }
  if (!(branch_to_bright >= 0.0 && branch_to_bright <= 1.0)) {
    throw InvalidParameter("SpinLevelSystem.branch_to_bright must lie in [0, 1]");
  }
  if (!(delta_nu > 0.0)) throw InvalidParameter("SpinLevelSystem.delta_nu must be > 0");
  if (!(k_mw >= 0.0) || !std::isfinite(k_mw)) throw InvalidParameter("SpinLevelSystem.k_mw must be >= 0");
  if (k_isc_dark > 0.0 && base.k_d <= 0.0) {
    throw AbsorbingStateError("SpinLevelSystem: shelving without deshelving is absorbing");
  }
}

SpinRateMatrix spin_rate_matrix(const SpinLevelSystem& sys, double mw_rate) {
  SpinRateMatrix m = SpinRateMatrix::Zero();
  auto add = [&m](int from, int to, double rate) {
    m(to, from) += rate;
    m(from, from) -= rate;
  };
  const auto& b = sys.base;
  const double beta = sys.branch_to_bright;
  const std::array<std::array<int, 3>, 2> manifolds{{{kGroundBright, kExcitedBright, kShelvedBright},
                                                     {kGroundDark, kExcitedDark, kShelvedDark}}};
  const std::array<double, 2> isc{sys.k_isc_bright, sys.k_isc_dark};
  for (std::size_t k = 0; k < 2; ++k) {
    const auto [g, e, s] = manifolds[k];
    add(g, e, b.k_pump);
    add(e, g, b.gamma_r + b.gamma_nr);
    add(e, s, isc[k]);
    add(s, kGroundBright, b.k_d * beta);
    add(s, kGroundDark, b.k_d * (1.0 - beta));
  }
  add(kGroundBright, kGroundDark, mw_rate);
  add(kGroundDark, kGroundBright, mw_rate);
  return m;
}

SpinPopulations spin_steady_state(const SpinLevelSystem& sys, double mw_rate) {
  sys.validate();
  SpinRateMatrix a = spin_rate_matrix(sys, mw_rate);
  a.row(5).setOnes();
  Eigen::Matrix<double, 6, 1> rhs = Eigen::Matrix<double, 6, 1>::Zero();
  rhs[5] = 1.0;
  Eigen::FullPivLU<SpinRateMatrix> lu(a);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible()) {
    throw AbsorbingStateError("six-level system has no unique steady state");
  }
  const Eigen::Matrix<double, 6, 1> p = lu.solve(rhs);
  SpinPopulations out{};
  for (int i = 0; i < 6; ++i) out[static_cast<std::size_t>(i)] = std::max(0.0, p[i]);
  return out;
}

double odmr_rate_at_mixing(const SpinLevelSystem& sys, double mw_rate) {
  if (sys.base.k_pump == 0.0) return 0.0;
  const auto p = spin_steady_state(sys, mw_rate);
  return sys.base.gamma_r * (p[kExcitedBright] + p[kExcitedDark]);
}

double odmr_steady_rates(const SpinLevelSystem& sys, bool mw_on) {
  return odmr_rate_at_mixing(sys, mw_on ? sys.k_mw : 0.0);
}

double odmr_contrast(const SpinLevelSystem& sys) {
  const double off = odmr_steady_rates(sys, false);
  if (!(off > 0.0)) throw InvalidParameter("odmr_contrast: mw-off rate is zero");
  const double on = odmr_steady_rates(sys, true);
  return (off - on) / off;
}

OdmrSpectrum odmr_spectrum(const SpinLevelSystem& sys, std::span<const double> freqs_mhz, const DetectorModel& det,
                           const std::optional<OdmrSampling>& sampling) {
  if (freqs_mhz.empty()) throw InvalidParameter("odmr_spectrum: empty frequency grid");
  det.validate();
  if (sampling && !(sampling->dwell_s > 0.0)) throw InvalidParameter("odmr_spectrum: dwell must be > 0");

  OdmrSpectrum out;
  out.frequencies.assign(freqs_mhz.begin(), freqs_mhz.end());
  out.rates.reserve(freqs_mhz.size());
  out.contrast = odmr_contrast(sys);
  std::optional<Rng> rng;
  if (sampling) rng.emplace(sampling->seed.value, 0x0d3a);
  for (double nu : freqs_mhz) {
    const double mixing = sys.k_mw * lorentzian(nu, sys.nu0, sys.delta_nu);
    double rate = det.efficiency * odmr_rate_at_mixing(sys, mixing) + det.dark_rate + det.background_rate;
    if (rng) rate = static_cast<double>(rng->poisson(rate * sampling->dwell_s)) / sampling->dwell_s;
    out.rates.push_back(rate);
  }
  return out;
}

SensitivityReport sensitivity_report(const SensitivityInputs& in) {
  if (!(in.C > 0.0 && in.C < 1.0)) throw InvalidParameter("sensitivity: contrast must lie in (0, 1)");
  if (!(in.R > 0.0)) throw InvalidParameter("sensitivity: count rate must be > 0");
  if (!(in.A > 0.0) || !(in.delta_nu > 0.0) || !(in.g_factor > 0.0)) {
    throw InvalidParameter("sensitivity: A, delta_nu and g_factor must be > 0");
  }
  SensitivityReport r;
  r.inputs = in;
  r.field_per_frequency = kPlanck / (in.g_factor * kBohrMagneton);
  r.linewidth_over_signal = in.delta_nu / (in.C * std::sqrt(in.R));
  r.eta = in.A * r.field_per_frequency * r.linewidth_over_signal;
  return r;
}

double sensitivity(const SensitivityInputs& in) { return sensitivity_report(in).eta; }

}  // namespace tipcav
