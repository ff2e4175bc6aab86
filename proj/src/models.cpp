#include "tipcav/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tipcav::models {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

// phi(x) = (1 - e^{-x}) / x and its derivative.
double phi(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - 0.5 * x;
  return -std::expm1(-x) / x;
}

double dphi(double x) {
  if (std::abs(x) < 1e-2) return -0.5 + x / 3.0 - x * x / 8.0 + x * x * x / 30.0;
  return (std::exp(-x) * (1.0 + x) - 1.0) / (x * x);
}

int tail_pulses(double tau, double period) {
  if (period <= 0.0) return 0;
  return static_cast<int>(std::min(200.0, std::ceil(40.0 * tau / period) + 1.0));
}

}  // namespace

double erfcx(double z) {
  if (z < 25.0) return std::exp(z * z) * std::erfc(z);
  const double iz2 = 1.0 / (z * z);
  return (1.0 / (z * std::sqrt(std::numbers::pi))) *
         (1.0 - 0.5 * iz2 + 0.75 * iz2 * iz2 - 1.875 * iz2 * iz2 * iz2 + 6.5625 * iz2 * iz2 * iz2 * iz2);
}

double exp_gauss(double u, double tau, double sigma) {
  if (sigma <= 0.0) {
    if (u > 0.0) return std::exp(-u / tau) / tau;
    return u == 0.0 ? 0.5 / tau : 0.0;
  }
  const double z = (sigma / tau - u / sigma) / kSqrt2;
  if (z < 0.0) {
    return std::exp(0.5 * sigma * sigma / (tau * tau) - u / tau) * std::erfc(z) / (2.0 * tau);
  }
  return std::exp(-0.5 * u * u / (sigma * sigma)) * erfcx(z) / (2.0 * tau);
}

double exp_gauss_dtau(double u, double tau, double sigma) {
  const double e = exp_gauss(u, tau, sigma);
  double d = e * (u - tau - (sigma * sigma) / tau) / (tau * tau);
  if (sigma > 0.0) {
    const double gauss = std::exp(-0.5 * u * u / (sigma * sigma)) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
    d += sigma * sigma * gauss / (tau * tau * tau);
  }
  return d;
}

double LifetimeModel::operator()(double x, std::span<const double> p, std::span<double> grad) const {
  const double tau = p[0], amplitude = p[1], baseline = p[2];
  const int tails = tail_pulses(tau, period);
  const int first = period > 0.0 ? -1 : 0;
  double shape = 0.0, dshape = 0.0;
  for (int k = first; k <= tails; ++k) {
    const double u = x - t0 + k * period;
    shape += exp_gauss(u, tau, sigma);
    if (!grad.empty()) dshape += exp_gauss_dtau(u, tau, sigma);
  }
  if (!grad.empty()) {
    grad[0] = amplitude * dshape;
    grad[1] = shape;
    grad[2] = 1.0;
  }
  return amplitude * shape + baseline;
}

double saturation(double x, std::span<const double> p, std::span<double> grad) {
  const double i_inf = p[0], p_sat = p[1];
  const double denom = x + p_sat;
  if (!grad.empty()) {
    grad[0] = x / denom;
    grad[1] = -i_inf * x / (denom * denom);
  }
  return i_inf * x / denom;
}

double mean_exp_abs(double lambda, double lo, double hi, double* dlambda) {
  if (hi < lo) std::swap(lo, hi);
  if (hi == lo) {
    const double e = std::exp(-lambda * std::abs(lo));
    if (dlambda) *dlambda = -std::abs(lo) * e;
    return e;
  }
  if (lo >= 0.0 || hi <= 0.0) {
    const double near = lo >= 0.0 ? lo : -hi;
    const double w = hi - lo;
    const double e = std::exp(-lambda * near);
    if (dlambda) *dlambda = -near * e * phi(lambda * w) + e * w * dphi(lambda * w);
    return e * phi(lambda * w);
  }
  const double left = -lo, right = hi, w = hi - lo;
  if (dlambda) *dlambda = (left * left * dphi(lambda * left) + right * right * dphi(lambda * right)) / w;
  return (left * phi(lambda * left) + right * phi(lambda * right)) / w;
}

double g2_bin(double lo, double hi, std::span<const double> p, std::span<double> grad) {
  const double rho = p[0], a = p[1], l1 = p[2], l2 = p[3];
  // lambdas are per ns, lags are ps
  const double lo_ns = lo * 1e-3, hi_ns = hi * 1e-3;
  double d1 = 0.0, d2 = 0.0;
  const double m1 = mean_exp_abs(l1, lo_ns, hi_ns, grad.empty() ? nullptr : &d1);
  const double m2 = mean_exp_abs(l2, lo_ns, hi_ns, grad.empty() ? nullptr : &d2);
  const double shape = (1.0 + a) * m1 - a * m2;
  if (!grad.empty()) {
    grad[0] = -2.0 * rho * shape;
    grad[1] = -rho * rho * (m1 - m2);
    grad[2] = -rho * rho * (1.0 + a) * d1;
    grad[3] = rho * rho * a * d2;
  }
  return 1.0 - rho * rho * shape;
}

double odmr(double x, std::span<const double> p, std::span<double> grad) {
  const double nu0 = p[0], width = p[1], contrast = p[2], baseline = p[3];
  const double h = 0.5 * width;
  const double dx = x - nu0;
  const double denom = dx * dx + h * h;
  const double line = h * h / denom;
  if (!grad.empty()) {
    grad[0] = -baseline * contrast * 2.0 * dx * h * h / (denom * denom);
    grad[1] = -baseline * contrast * h * dx * dx / (denom * denom);
    grad[2] = -baseline * line;
    grad[3] = 1.0 - contrast * line;
  }
  return baseline * (1.0 - contrast * line);
}

}  // namespace tipcav::models
