#include "tipcav/photophysics.hpp"

#include <cmath>
#include <string>

namespace tipcav {

namespace {

void require_rate(double value, const char* name) {
  if (!std::isfinite(value) || value < 0.0) {
    throw InvalidParameter(std::string("LevelSystem.") + name + " must be finite and >= 0");
  }
}

}  // namespace

void LevelSystem::validate() const {
  require_rate(k_pump, "k_pump");
  require_rate(gamma_r, "gamma_r");
  require_rate(gamma_nr, "gamma_nr");
  require_rate(k_isc, "k_isc");
  require_rate(k_d, "k_d");
  if (gamma_r <= 0.0) throw InvalidParameter("LevelSystem.gamma_r must be > 0");
}

RateMatrix rate_matrix(const LevelSystem& sys) {
  constexpr int g = 0, e = 1, s = 2;
  RateMatrix m{};
  // m[to][from]
  m[e][g] = sys.k_pump;
  m[g][g] = -sys.k_pump;
  m[g][e] = sys.gamma_r + sys.gamma_nr;
  m[s][e] = sys.k_isc;
  m[e][e] = -(sys.gamma_r + sys.gamma_nr + sys.k_isc);
  m[g][s] = sys.k_d;
  m[s][s] = -sys.k_d;
  return m;
}

Populations steady_state(const LevelSystem& sys) {
  sys.validate();
  if (sys.has_absorbing_state()) {
    throw AbsorbingStateError("k_isc > 0 with k_d = 0: metastable state is absorbing");
  }
  if (sys.k_pump == 0.0) return {1.0, 0.0, 0.0};

  // Balance: k_pump p_g = K p_e and k_isc p_e = k_d p_s.
  const double total = sys.excited_decay_rate();
  const double shelf_ratio = sys.k_isc > 0.0 ? sys.k_isc / sys.k_d : 0.0;
  const double ground_ratio = total / sys.k_pump;
  const double pe = 1.0 / (ground_ratio + 1.0 + shelf_ratio);
  Populations p;
  p.excited = pe;
  p.ground = ground_ratio * pe;
  p.shelved = shelf_ratio * pe;
  return p;
}

G2Function::G2Function(const LevelSystem& sys) {
  sys.validate();
  if (sys.has_absorbing_state()) {
    throw AbsorbingStateError("g2 undefined: metastable state is absorbing");
  }
  if (sys.k_pump <= 0.0) throw InvalidParameter("g2 undefined: emitter is not pumped (k_pump = 0)");

  const double kp = sys.k_pump;
  const double total = sys.excited_decay_rate();

  if (sys.k_isc == 0.0) {
    two_level_ = true;
    l1_ = kp + total;
    l2_ = 0.0;
    c1_ = -1.0;
    c2_ = 0.0;
    params_.lambda_1 = kp + total;
    params_.lambda_2 = 0.0;
    params_.a = 0.0;
    return;
  }

  // Reduced system on (p_e, p_s) after eliminating p_g:
  //   lambda^2 - S lambda + P = 0
  const double kd = sys.k_d;
  const double sum = kp + total + kd;
  const double prod = (kp + total) * kd + kp * sys.k_isc;
  const double disc = (kp + total - kd) * (kp + total - kd) - 4.0 * kp * sys.k_isc;

  std::complex<double> root = std::sqrt(std::complex<double>(disc, 0.0));
  if (std::abs(root) < 1e-9 * sum) root = 1e-9 * sum;  // repeated root
  l1_ = 0.5 * (sum + root);
  l2_ = prod / l1_;

  // g2'(0) = k_pump / p_e(inf) fixes the bunching amplitude.
  const double slope0 = kp + total + kp * sys.k_isc / kd;
  const std::complex<double> a = (slope0 - l1_) / (l1_ - l2_);
  c1_ = -(1.0 + a);
  c2_ = a;

  params_.oscillatory = disc < 0.0;
  params_.lambda_1 = l1_.real();
  params_.lambda_2 = l2_.real();
  params_.omega = params_.oscillatory ? std::abs(l1_.imag()) : 0.0;
  params_.a = a.real();
}

double G2Function::operator()(double tau) const {
  const double t = std::abs(tau);
  std::complex<double> v = 1.0 + c1_ * std::exp(-l1_ * t);
  if (!two_level_) v += c2_ * std::exp(-l2_ * t);
  return v.real();
}

double G2Function::integral_from_zero(double t) const {
  auto term = [t](std::complex<double> c, std::complex<double> l) {
    const std::complex<double> x = l * t;
    // (1 - e^{-x}) / l, with a series near x = 0
    std::complex<double> f;
    if (std::abs(x) < 1e-5) {
      f = t * (1.0 - 0.5 * x + x * x / 6.0);
    } else {
      f = (1.0 - std::exp(-x)) / l;
    }
    return c * f;
  };
  std::complex<double> v = t + term(c1_, l1_);
  if (!two_level_) v += term(c2_, l2_);
  return v.real();
}

double G2Function::average(double t0, double t1) const {
  if (t1 < t0) std::swap(t0, t1);
  if (t1 == t0) return (*this)(t0);
  auto signed_integral = [this](double t) {
    return t >= 0.0 ? integral_from_zero(t) : -integral_from_zero(-t);
  };
  return (signed_integral(t1) - signed_integral(t0)) / (t1 - t0);
}

G2Function g2_analytical(const LevelSystem& sys) { return G2Function(sys); }

double SaturationModel::operator()(double power_mw) const {
  return saturation_curve(*this, power_mw);
}

double saturation_curve(const SaturationModel& model, double power_mw) {
  if (!(power_mw >= 0.0)) throw InvalidParameter("saturation_curve: power must be >= 0");
  if (power_mw == 0.0) return 0.0;
  return model.I_inf * power_mw / (power_mw + model.P_sat);
}

double emission_rate(const LevelSystem& sys) {
  return sys.gamma_r * steady_state(sys).excited;
}

std::vector<double> emission_rate_vs_pump(LevelSystem sys, std::span<const double> k_pump) {
  std::vector<double> out;
  out.reserve(k_pump.size());
  for (double k : k_pump) {
    if (!(k >= 0.0)) throw InvalidParameter("emission_rate_vs_pump: pump rates must be >= 0");
    sys.k_pump = k;
    out.push_back(emission_rate(sys));
  }
  return out;
}

SaturationModel effective_saturation(const LevelSystem& sys) {
  sys.validate();
  if (sys.has_absorbing_state()) throw AbsorbingStateError("effective_saturation: absorbing metastable state");
  const double unshelved = sys.k_isc > 0.0 ? sys.k_d / (sys.k_d + sys.k_isc) : 1.0;
  return {sys.gamma_r * unshelved, sys.excited_decay_rate() * unshelved};
}

}  // namespace tipcav
