#pragma once

#include <array>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

namespace tipcav {

/// Thrown when a rate system has an absorbing state (e.g. shelving without
/// deshelving), so no normalizable steady state exists.
class AbsorbingStateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Intrinsic three-level emitter rates, all in Hz.
///
///   g --k_pump--> e --gamma_r + gamma_nr--> g
///                 e --k_isc--> s --k_d--> g
struct LevelSystem {
  double k_pump = 0.0;
  double gamma_r = 1.0 / 2.9e-9;
  double gamma_nr = 0.0;
  double k_isc = 0.0;
  double k_d = 0.0;

  /// Total excited-state out-rate.
  double excited_decay_rate() const { return gamma_r + gamma_nr + k_isc; }
  double lifetime() const { return 1.0 / excited_decay_rate(); }
  double quantum_efficiency() const { return gamma_r / excited_decay_rate(); }
  bool has_absorbing_state() const { return k_isc > 0.0 && k_d <= 0.0; }

  /// Throws InvalidParameter on negative/non-finite rates or gamma_r <= 0.
  void validate() const;
};

enum class Level { Ground = 0, Excited = 1, Shelved = 2 };

struct Populations {
  double ground = 1.0;
  double excited = 0.0;
  double shelved = 0.0;

  double sum() const { return ground + excited + shelved; }
  std::array<double, 3> as_array() const { return {ground, excited, shelved}; }
};

/// Column-stochastic generator, dp/dt = M p with p = (g, e, s).
using RateMatrix = std::array<std::array<double, 3>, 3>;

RateMatrix rate_matrix(const LevelSystem& sys);

Populations steady_state(const LevelSystem& sys);

/// Summary of the closed-form g2. When the reduced 2x2 system has complex
/// eigenvalues (fast deshelving), `oscillatory` is set and lambda_1/lambda_2
/// hold the real part; the curve itself is still exact.
struct G2Params {
  double lambda_1 = 0.0;
  double lambda_2 = 0.0;
  double a = 0.0;
  bool oscillatory = false;
  double omega = 0.0;
};

/// g2(tau) = p_e(tau | start in g) / p_e(inf) for a single emitter.
class G2Function {
 public:
  explicit G2Function(const LevelSystem& sys);

  const G2Params& params() const { return params_; }

  /// tau in seconds; symmetric in tau.
  double operator()(double tau) const;
  /// Mean of g2 over [t0, t1] (seconds), computed in closed form.
  double average(double t0, double t1) const;

 private:
  double integral_from_zero(double t) const;

  G2Params params_;
  std::complex<double> l1_, l2_, c1_, c2_;
  bool two_level_ = false;
};

G2Function g2_analytical(const LevelSystem& sys);

struct SaturationModel {
  double I_inf = 1.0;  // cts/s
  double P_sat = 1.0;  // mW

  double operator()(double power_mw) const;
};

double saturation_curve(const SaturationModel& model, double power_mw);

/// Emitted photon rate gamma_r * p_e at each pump rate (Hz).
double emission_rate(const LevelSystem& sys);
std::vector<double> emission_rate_vs_pump(LevelSystem sys, std::span<const double> k_pump);

/// The three-level steady state is exactly first order in k_pump:
///   R = I_inf * k / (k + k_sat)
/// with I_inf = gamma_r k_d / (k_d + k_isc) and k_sat = K k_d / (k_d + k_isc).
SaturationModel effective_saturation(const LevelSystem& sys);

}  // namespace tipcav
