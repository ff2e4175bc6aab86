#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tipcav/correlator.hpp"
#include "tipcav/lm.hpp"

namespace tipcav {

struct OdmrSpectrum;

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> stderrs;
  double residual_norm = 0.0;  // sum of squared (weighted) residuals
  bool converged = false;
  bool singular = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::vector<double> cost_history;
  /// Quantities computed from the fitted parameters.
  std::map<std::string, double> derived;

  double value(const std::string& name) const;
  double stderr_of(const std::string& name) const;
};

struct IrfModel {
  double sigma = 0.0;  // ps
  double t0 = 0.0;     // ps
};

struct LifetimeInit {
  double tau = 1000.0;  // ps
  std::optional<double> amplitude;
  std::optional<double> baseline;
};

/// Reconvolution fit of amplitude * (exp decay (x) Gaussian IRF) + baseline
/// by Poisson maximum likelihood (iteratively reweighted least squares,
/// started from weights 1 / (counts + 1)). A partial last bin is modelled
/// with its true width. Parameters: tau (ps), amplitude, baseline.
FitResult fit_lifetime(const DecayHistogram& h, const IrfModel& irf, const LifetimeInit& init,
                       const LmOptions& options = {});

struct SaturationPoint {
  double power_mw;
  double rate;
};

struct SaturationInit {
  std::optional<double> I_inf;
  std::optional<double> P_sat;
};

/// Unweighted fit of I_inf P / (P + P_sat).
FitResult fit_saturation(std::span<const SaturationPoint> points, const SaturationInit& init = {},
                         const LmOptions& options = {});

struct G2Init {
  double rho = 0.9;
  double a = 0.5;
  double lambda_1 = 1e9;  // Hz
  double lambda_2 = 1e7;  // Hz
  bool two_level = false;  // fix a = 0 (lambda_2 then unused)
};

/// Background-corrected three-level g2 model, averaged over each lag bin.
/// Parameters: rho, a, lambda_1 (Hz), lambda_2 (Hz). Derived values:
/// g2_0_effective = 1 - rho^2, g2_0_raw (measured zero-lag bin),
/// g2_0_corrected (raw with the rho background removed), g2_max (peak of
/// the fitted curve).
FitResult fit_g2(const G2Curve& curve, const G2Init& init = {}, const LmOptions& options = {});

struct OdmrInit {
  std::optional<double> nu0;
  std::optional<double> delta_nu;
  std::optional<double> contrast;
  std::optional<double> baseline_rate;
};

/// Unweighted fit of baseline (1 - C lorentzian(nu; nu0, delta_nu)).
/// Parameters: nu0 (MHz), delta_nu (MHz), contrast, baseline_rate.
FitResult fit_odmr(const OdmrSpectrum& spectrum, const OdmrInit& init = {}, const LmOptions& options = {});

}  // namespace tipcav
