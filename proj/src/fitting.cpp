#include "tipcav/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "tipcav/models.hpp"
#include "tipcav/photophysics.hpp"
#include "tipcav/spin_odmr.hpp"

namespace tipcav {

namespace {

using ModelFn = std::function<double(std::size_t i, std::span<const double> p, std::span<double> grad)>;

struct CurveData {
  std::vector<double> y;
  std::vector<double> sqrt_weight;
};

FitResult fit_curve(const ModelFn& model, const CurveData& data, std::vector<std::string> names,
                    const Eigen::VectorXd& init, std::function<bool(const Eigen::VectorXd&)> feasible,
                    const LmOptions& options) {
  const std::size_t n = data.y.size();
  const auto np = init.size();
  LeastSquaresProblem problem;
  problem.n_residuals = n;
  problem.feasible = std::move(feasible);
  problem.evaluate = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    std::vector<double> grad(static_cast<std::size_t>(np));
    const std::span<const double> ps(p.data(), static_cast<std::size_t>(np));
    for (std::size_t i = 0; i < n; ++i) {
      const double w = data.sqrt_weight[i];
      const auto row = static_cast<Eigen::Index>(i);
      if (J) {
        const double v = model(i, ps, grad);
        r[row] = w * (v - data.y[i]);
        for (Eigen::Index k = 0; k < np; ++k) (*J)(row, k) = w * grad[static_cast<std::size_t>(k)];
      } else {
        r[row] = w * (model(i, ps, {}) - data.y[i]);
      }
    }
  };

  const LmResult lm = levenberg_marquardt(problem, init, options);
  FitResult out;
  out.names = std::move(names);
  out.values.assign(lm.params.data(), lm.params.data() + np);
  out.stderrs.resize(static_cast<std::size_t>(np));
  for (Eigen::Index k = 0; k < np; ++k) {
    const double v = lm.covariance(k, k);
    out.stderrs[static_cast<std::size_t>(k)] = std::isnan(v) ? v : std::sqrt(std::max(v, 0.0));
  }
  out.residual_norm = lm.cost;
  out.converged = lm.converged;
  out.singular = lm.singular;
  out.iterations = lm.iterations;
  out.gradient_norm = lm.gradient_norm;
  out.cost_history = lm.cost_history;
  return out;
}

}  // namespace

double FitResult::value(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("FitResult: no parameter " + name);
  return values[static_cast<std::size_t>(it - names.begin())];
}

double FitResult::stderr_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("FitResult: no parameter " + name);
  return stderrs[static_cast<std::size_t>(it - names.begin())];
}

FitResult fit_lifetime(const DecayHistogram& h, const IrfModel& irf, const LifetimeInit& init,
                       const LmOptions& options) {
  if (h.size() == 0 || h.total() == 0) throw InvalidParameter("fit_lifetime: empty histogram");
  if (!(init.tau > 0.0)) throw InvalidParameter("fit_lifetime: initial tau must be > 0");
  if (!(irf.sigma >= 0.0)) throw InvalidParameter("fit_lifetime: IRF sigma must be >= 0");

  CurveData data;
  std::vector<double> x, width;  // width relative to the nominal bin (last bin may be partial)
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto c = static_cast<double>(h.counts[i]);
    x.push_back(h.center(i));
    width.push_back((h.bin_hi(i) - h.bin_lo[i]) / h.bin_width);
    data.y.push_back(c);
    data.sqrt_weight.push_back(1.0 / std::sqrt(c + 1.0));
  }

  const models::LifetimeModel model{irf.sigma, irf.t0, h.period};

  // Baseline from the quietest tenth of the bins, amplitude from the rest.
  std::vector<double> sorted = data.y;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t q = std::max<std::size_t>(1, sorted.size() / 10);
  double quiet = 0.0;
  for (std::size_t i = 0; i < q; ++i) quiet += sorted[i];
  quiet /= static_cast<double>(q);
  const double baseline0 = init.baseline.value_or(quiet);
  const double signal = std::max(1.0, static_cast<double>(h.total()) - baseline0 * static_cast<double>(h.size()));
  const double amplitude0 = init.amplitude.value_or(signal * h.bin_width);

  const ModelFn binned = [&](std::size_t i, std::span<const double> p, std::span<double> g) {
    const double v = model(x[i], p, g);
    for (double& gk : g) gk *= width[i];
    return v * width[i];
  };
  const auto feasible = [](const Eigen::VectorXd& p) { return p[0] > 0.0; };

  Eigen::VectorXd p(3);
  p << init.tau, amplitude0, baseline0;
  FitResult fit = fit_curve(binned, data, {"tau", "amplitude", "baseline"}, p, feasible, options);

  // Data-derived weights bias low-count tails. Reweighting with the model
  // (1 / m_i) until the parameters settle yields the Poisson
  // maximum-likelihood estimate.
  for (int pass = 0; pass < 20 && fit.converged; ++pass) {
    p << fit.values[0], fit.values[1], fit.values[2];
    const std::span<const double> ps(p.data(), 3);
    for (std::size_t i = 0; i < h.size(); ++i) data.sqrt_weight[i] = 1.0 / std::sqrt(std::max(binned(i, ps, {}), 1e-3));
    FitResult next = fit_curve(binned, data, {"tau", "amplitude", "baseline"}, p, feasible, options);
    const double change = std::abs(next.values[0] - fit.values[0]) / fit.values[0];
    fit = std::move(next);
    if (change < 1e-9) break;
  }
  return fit;
}

FitResult fit_saturation(std::span<const SaturationPoint> points, const SaturationInit& init,
                         const LmOptions& options) {
  if (points.size() < 3) throw InvalidParameter("fit_saturation: need at least 3 points");
  CurveData data;
  std::vector<double> x;
  double max_rate = 0.0;
  for (const auto& pt : points) {
    if (!(pt.power_mw >= 0.0)) throw InvalidParameter("fit_saturation: powers must be >= 0");
    x.push_back(pt.power_mw);
    data.y.push_back(pt.rate);
    data.sqrt_weight.push_back(1.0);
    max_rate = std::max(max_rate, pt.rate);
  }
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  Eigen::VectorXd p0(2);
  p0 << init.I_inf.value_or(1.5 * max_rate), init.P_sat.value_or(std::max(sorted[sorted.size() / 2], 1e-12));
  return fit_curve(
      [&](std::size_t i, std::span<const double> p, std::span<double> g) { return models::saturation(x[i], p, g); },
      data, {"I_inf", "P_sat"}, p0, [](const Eigen::VectorXd& p) { return p[1] > 0.0; }, options);
}

FitResult fit_g2(const G2Curve& curve, const G2Init& init, const LmOptions& options) {
  if (curve.degenerate || curve.size() == 0) throw InvalidParameter("fit_g2: curve has no normalization");
  CurveData data;
  std::vector<double> lo, hi;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double den = curve.denominator(i);
    lo.push_back(static_cast<double>(curve.lag_lo[i]) - 0.5);
    hi.push_back(static_cast<double>(curve.lag_hi[i]) + 0.5);
    data.y.push_back(curve.normalized[i]);
    data.sqrt_weight.push_back(den / std::sqrt(static_cast<double>(curve.counts[i]) + 1.0));
  }

  Eigen::VectorXd p0(4);
  p0 << init.rho, init.two_level ? 0.0 : init.a, init.lambda_1 * 1e-9, init.lambda_2 * 1e-9;
  LmOptions opts = options;
  if (init.two_level) opts.fixed = {false, true, false, true};

  FitResult r = fit_curve(
      [&](std::size_t i, std::span<const double> p, std::span<double> g) { return models::g2_bin(lo[i], hi[i], p, g); },
      data, {"rho", "a", "lambda_1", "lambda_2"}, p0,
      [](const Eigen::VectorXd& p) { return p[2] > 0.0 && p[3] > 0.0; }, opts);

  // Back to Hz; rho sign is irrelevant.
  r.values[0] = std::abs(r.values[0]);
  for (std::size_t k : {2u, 3u}) {
    r.values[k] *= 1e9;
    r.stderrs[k] *= 1e9;
  }

  const double rho = r.values[0];
  r.derived["g2_0_effective"] = 1.0 - rho * rho;
  const std::size_t z = curve.zero_bin();
  if (z < curve.size()) {
    const double raw = curve.normalized[z];
    r.derived["g2_0_raw"] = raw;
    if (rho > 0.0) r.derived["g2_0_corrected"] = (raw - (1.0 - rho * rho)) / (rho * rho);
  }
  const std::vector<double> pf{rho, r.values[1], r.values[2] * 1e-9, r.values[3] * 1e-9};
  double peak = 0.0, peak_tau = 0.0;
  const double reach = static_cast<double>(curve.window);
  for (int k = 0; k <= 4000; ++k) {
    const double tau = reach * std::pow(10.0, -4.0 + 4.0 * k / 4000.0);
    const double v = models::g2_bin(tau, tau, pf);
    if (v > peak) {
      peak = v;
      peak_tau = tau;
    }
  }
  r.derived["g2_max"] = peak;
  r.derived["g2_max_tau_ps"] = peak_tau;
  return r;
}

FitResult fit_odmr(const OdmrSpectrum& spectrum, const OdmrInit& init, const LmOptions& options) {
  const std::size_t n = spectrum.frequencies.size();
  if (n < 5 || spectrum.rates.size() != n) throw InvalidParameter("fit_odmr: need at least 5 frequency points");

  CurveData data;
  data.y = spectrum.rates;
  data.sqrt_weight.assign(n, 1.0);

  const auto [min_it, max_it] = std::minmax_element(spectrum.rates.begin(), spectrum.rates.end());
  const double top = *max_it, bottom = *min_it;
  const double nu_min = spectrum.frequencies[static_cast<std::size_t>(min_it - spectrum.rates.begin())];
  const auto [f_lo, f_hi] = std::minmax_element(spectrum.frequencies.begin(), spectrum.frequencies.end());
  // Width guess: span of points below the half-depth level.
  const double half = 0.5 * (top + bottom);
  double below_lo = nu_min, below_hi = nu_min;
  for (std::size_t i = 0; i < n; ++i) {
    if (spectrum.rates[i] <= half) {
      below_lo = std::min(below_lo, spectrum.frequencies[i]);
      below_hi = std::max(below_hi, spectrum.frequencies[i]);
    }
  }
  const double width_guess = std::max(below_hi - below_lo, (*f_hi - *f_lo) / static_cast<double>(n));

  Eigen::VectorXd p0(4);
  p0 << init.nu0.value_or(nu_min), init.delta_nu.value_or(width_guess),
      init.contrast.value_or(top > 0.0 ? std::max(1e-6, 1.0 - bottom / top) : 0.0), init.baseline_rate.value_or(top);
  const std::vector<double>& f = spectrum.frequencies;
  return fit_curve(
      [&](std::size_t i, std::span<const double> p, std::span<double> g) { return models::odmr(f[i], p, g); }, data,
      {"nu0", "delta_nu", "contrast", "baseline_rate"}, p0, [](const Eigen::VectorXd& p) { return p[1] > 0.0; },
      options);
}

}  // namespace tipcav
