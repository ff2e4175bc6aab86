#pragma once

#include <span>

namespace tipcav::models {

/// Exponential decay (rate 1/tau, unit area) convolved with a unit-area
/// Gaussian of std sigma, evaluated at offset u from the Gaussian centre.
/// sigma = 0 gives the bare exponential, with value 1/(2 tau) at u = 0.
double exp_gauss(double u, double tau, double sigma);
/// d exp_gauss / d tau.
double exp_gauss_dtau(double u, double tau, double sigma);

/// exp(z^2) erfc(z), stable for large positive z.
double erfcx(double z);

// Each model: value at x for parameter vector p; if `grad` is non-empty it
// receives d value / d p.

/// p = {tau, amplitude, baseline}; x = delay ps within the period.
/// amplitude * sum_k exp_gauss(x - t0 + k period) + baseline, summing the
/// tails of earlier pulses and the wrap of negative jitter.
struct LifetimeModel {
  double sigma = 0.0;
  double t0 = 0.0;
  double period = 0.0;  // 0 = no folding
  double operator()(double x, std::span<const double> p, std::span<double> grad = {}) const;
};

/// p = {I_inf, P_sat}; x = power mW.
double saturation(double x, std::span<const double> p, std::span<double> grad = {});

/// p = {rho, a, lambda_1, lambda_2} with lambdas in 1/ns; averaged over the
/// lag interval [lo, hi] in ps (lo == hi gives the point value):
///   1 - rho^2 [(1 + a) e^{-lambda_1 |tau|} - a e^{-lambda_2 |tau|}]
double g2_bin(double lo, double hi, std::span<const double> p, std::span<double> grad = {});

/// p = {nu0, delta_nu, contrast, baseline}; x = MHz.
double odmr(double x, std::span<const double> p, std::span<double> grad = {});

/// Mean of exp(-lambda |tau|) over [lo, hi]; optional d/d lambda.
double mean_exp_abs(double lambda, double lo, double hi, double* dlambda = nullptr);

}  // namespace tipcav::models
