#include "tipcav/cavity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tipcav {

void PlasmonMode::validate() const {
  if (!(E_p >= 1.5 && E_p <= 2.5)) throw InvalidParameter("PlasmonMode.E_p must lie in [1.5, 2.5] eV");
  if (!(Gamma_p > 0.0)) throw InvalidParameter("PlasmonMode.Gamma_p must be > 0");
  if (!(xi_max >= 1.0)) throw InvalidParameter("PlasmonMode.xi_max must be >= 1");
  if (!(F_max >= 1.0)) throw InvalidParameter("PlasmonMode.F_max must be >= 1");
  if (!(d0 > 0.0)) throw InvalidParameter("PlasmonMode.d0 must be > 0");
  if (!(pol_contrast >= 1.0)) throw InvalidParameter("PlasmonMode.pol_contrast must be >= 1");
  if (!std::isfinite(delta_em)) throw InvalidParameter("PlasmonMode.delta_em must be finite");
  if (!(quenching_rate >= 0.0)) throw InvalidParameter("PlasmonMode.quenching_rate must be >= 0");
}

void CouplingContext::validate() const {
  if (!(d >= 0.0)) throw InvalidParameter("CouplingContext.d must be >= 0");
  if (!(theta >= 0.0 && theta <= 90.0)) throw InvalidParameter("CouplingContext.theta must lie in [0, 90]");
  if (!(E_laser > E_zpl)) throw InvalidParameter("CouplingContext.E_laser must exceed E_zpl");
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::EmissionDominated: return "EmissionDominated";
    case Regime::Balanced: return "Balanced";
    case Regime::ExcitationDominated: return "ExcitationDominated";
  }
  return "?";
}

double lorentzian(double E, double E0, double Gamma) {
  if (!(Gamma > 0.0)) throw InvalidParameter("lorentzian: Gamma must be > 0");
  const double hw = 0.5 * Gamma;
  const double dE = E - E0;
  return hw * hw / (dE * dE + hw * hw);
}

double distance_decay(double d, double d0) {
  if (!(d >= 0.0)) throw InvalidParameter("distance_decay: d must be >= 0");
  if (std::isinf(d)) return 0.0;
  return std::exp(-d / d0);
}

double polarization_factor(double theta_deg, double pol_contrast) {
  if (!(theta_deg >= 0.0 && theta_deg <= 90.0)) {
    throw InvalidParameter("polarization_factor: theta must lie in [0, 90]");
  }
  const double th = theta_deg * std::numbers::pi / 180.0;
  const double c = std::cos(th), s = std::sin(th);
  return c * c + s * s / pol_contrast;
}

Regime classify_regime(double F_P, double xi_exc, double band) {
  if (std::abs(F_P - xi_exc) <= band * std::max(F_P, xi_exc)) return Regime::Balanced;
  return F_P > xi_exc ? Regime::EmissionDominated : Regime::ExcitationDominated;
}

EnhancementResult enhancement_at(const PlasmonMode& mode, const CouplingContext& ctx, double band) {
  mode.validate();
  ctx.validate();
  const double decay = distance_decay(ctx.d, mode.d0);
  EnhancementResult r;
  r.xi_exc = 1.0 + (mode.xi_max - 1.0) * lorentzian(ctx.E_laser, mode.E_p + mode.delta_em, mode.Gamma_p) *
                       decay * polarization_factor(ctx.theta, mode.pol_contrast);
  r.F_P = 1.0 + (mode.F_max - 1.0) * lorentzian(ctx.E_zpl, mode.E_p, mode.Gamma_p) * decay;
  r.regime = classify_regime(r.F_P, r.xi_exc, band);
  r.quenching_rate = mode.quenching_rate * decay;
  return r;
}

LevelSystem couple(const LevelSystem& sys, const EnhancementResult& enh) {
  sys.validate();
  if (!(enh.F_P >= 0.0) || !(enh.xi_exc >= 0.0)) throw InvalidParameter("couple: enhancement factors must be >= 0");
  LevelSystem out = sys;
  out.gamma_r = sys.gamma_r * enh.F_P;
  out.k_pump = sys.k_pump * enh.xi_exc;
  out.gamma_nr = sys.gamma_nr + enh.quenching_rate;
  return out;
}

}  // namespace tipcav
