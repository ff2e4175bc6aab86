#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <span>
#include <vector>

#include "tipcav/photophysics.hpp"
#include "tipcav/trajectory.hpp"

namespace tipcav {

/// Three photophysical levels in each of two effective spin manifolds.
/// The dark manifold shelves faster; the metastable state returns to the
/// bright ground state with probability branch_to_bright. Microwaves mix
/// the two ground states at rate k_mw * lorentzian(nu; nu0, delta_nu).
/// base.k_isc is ignored in favour of the per-manifold rates.
struct SpinLevelSystem {
  LevelSystem base;
  double k_isc_bright = 1e6;
  double k_isc_dark = 2e7;
  double branch_to_bright = 0.9;
  double nu0 = 2870.0;     // MHz
  double delta_nu = 110.0;  // MHz
  double k_mw = 1e10;      // Hz

  void validate() const;
};

/// Level order in the six-level state vector.
enum SpinLevel : int { kGroundBright, kExcitedBright, kShelvedBright, kGroundDark, kExcitedDark, kShelvedDark };

using SpinRateMatrix = Eigen::Matrix<double, 6, 6>;
using SpinPopulations = std::array<double, 6>;

SpinRateMatrix spin_rate_matrix(const SpinLevelSystem& sys, double mw_rate);
SpinPopulations spin_steady_state(const SpinLevelSystem& sys, double mw_rate);

/// gamma_r (p_e,bright + p_e,dark) with the drive on resonance or off.
double odmr_steady_rates(const SpinLevelSystem& sys, bool mw_on);
/// Emitted rate for an arbitrary microwave mixing rate.
double odmr_rate_at_mixing(const SpinLevelSystem& sys, double mw_rate);

/// (R_off - R_on) / R_off.
double odmr_contrast(const SpinLevelSystem& sys);

struct OdmrSpectrum {
  std::vector<double> frequencies;  // MHz
  std::vector<double> rates;        // detected cts/s
  double contrast = 0.0;
};

struct OdmrSampling {
  double dwell_s = 1.0;
  RngSeed seed;
};

/// Detected rate efficiency * R(nu) + dark + background at every frequency;
/// with `sampling`, each point is replaced by Poisson counts / dwell.
OdmrSpectrum odmr_spectrum(const SpinLevelSystem& sys, std::span<const double> freqs_mhz, const DetectorModel& det,
                           const std::optional<OdmrSampling>& sampling = std::nullopt);

/// Lineshape factor for a Lorentzian dip, 4 / (3 sqrt 3).
inline constexpr double kLorentzianLineshape = 0.76980035891950100;
/// Lineshape factor for a Gaussian dip, sqrt(e / (8 ln 2)).
inline constexpr double kGaussianLineshape = 0.70014745890209160;

inline constexpr double kPlanck = 6.62607015e-34;          // J s
inline constexpr double kBohrMagneton = 9.2740100783e-24;  // J / T

struct SensitivityInputs {
  double A = kLorentzianLineshape;
  double delta_nu = 110e6;  // Hz
  double C = 0.023;
  double R = 1.88e5;  // cts/s
  double g_factor = 2.0;
};

struct SensitivityReport {
  SensitivityInputs inputs;
  double field_per_frequency = 0.0;  // h / (g mu_B), T/Hz
  double linewidth_over_signal = 0.0;  // delta_nu / (C sqrt R), Hz^(1/2)
  double eta = 0.0;  // T / sqrt(Hz)
};

/// Shot-noise-limited DC field sensitivity
///   eta = A h / (g mu_B) * delta_nu / (C sqrt R).
double sensitivity(const SensitivityInputs& in);
SensitivityReport sensitivity_report(const SensitivityInputs& in);

}  // namespace tipcav
