#pragma once

#include <string_view>

#include "tipcav/photophysics.hpp"

namespace tipcav {

/// Phenomenological tip-cavity plasmon. Both enhancement spectra are
/// Lorentzians of common width; the excitation spectrum is offset by
/// delta_em from the Purcell spectrum.
struct PlasmonMode {
  double E_p = 2.00;          // eV
  double Gamma_p = 0.20;      // eV, FWHM
  double xi_max = 1.0;        // peak excitation-rate enhancement
  double F_max = 1.0;         // peak Purcell factor
  double delta_em = 0.0;      // eV
  double d0 = 5.0;            // nm
  double pol_contrast = 1.0;  // p/s field-intensity ratio
  double quenching_rate = 0.0;  // Hz added to gamma_nr on contact; 0 by default

  void validate() const;
};

struct CouplingContext {
  double d = 0.0;         // nm
  double theta = 0.0;     // deg, 0 = parallel to the tip axis
  double E_zpl = 1.91;    // eV
  double E_laser = 2.09;  // eV

  void validate() const;
};

enum class Regime { EmissionDominated, Balanced, ExcitationDominated };

std::string_view to_string(Regime r);

struct EnhancementResult {
  double xi_exc = 1.0;
  double F_P = 1.0;
  Regime regime = Regime::Balanced;
  double quenching_rate = 0.0;
};

/// Half-width of the balanced band relative to max(F_P, xi_exc).
inline constexpr double kBalancedBand = 0.1;

double lorentzian(double E, double E0, double Gamma);
double distance_decay(double d, double d0);
double polarization_factor(double theta_deg, double pol_contrast);

Regime classify_regime(double F_P, double xi_exc, double band = kBalancedBand);

EnhancementResult enhancement_at(const PlasmonMode& mode, const CouplingContext& ctx,
                                 double band = kBalancedBand);

/// Purcell enhancement on gamma_r, excitation enhancement on k_pump; other
/// rates untouched apart from the optional quenching addend.
LevelSystem couple(const LevelSystem& sys, const EnhancementResult& enh);

}  // namespace tipcav
