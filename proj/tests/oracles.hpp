#pragma once

// Independent reference implementations used only by the tests: explicit
// RK4 integration of hand-written rate equations, and a brute-force
// coincidence counter.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tipcav/photophysics.hpp"
#include "tipcav/spin_odmr.hpp"
#include "tipcav/trajectory.hpp"

namespace oracle {

template <std::size_t N, typename Deriv>
std::array<double, N> rk4(std::array<double, N> y, double t_end, int steps, Deriv&& f) {
  const double h = t_end / steps;
  auto axpy = [](const std::array<double, N>& a, double s, const std::array<double, N>& b) {
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = a[i] + s * b[i];
    return out;
  };
  for (int k = 0; k < steps; ++k) {
    const auto k1 = f(y);
    const auto k2 = f(axpy(y, 0.5 * h, k1));
    const auto k3 = f(axpy(y, 0.5 * h, k2));
    const auto k4 = f(axpy(y, h, k3));
    for (std::size_t i = 0; i < N; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return y;
}

/// Three-level rate equations written out term by term: (g, e, s).
inline std::array<double, 3> three_level_rhs(const tipcav::LevelSystem& s, const std::array<double, 3>& p) {
  const double g = p[0], e = p[1], m = p[2];
  const double down = s.gamma_r + s.gamma_nr;
  return {-s.k_pump * g + down * e + s.k_d * m, s.k_pump * g - (down + s.k_isc) * e, s.k_isc * e - s.k_d * m};
}

inline double max_rate(const tipcav::LevelSystem& s) {
  return std::max({s.k_pump, s.gamma_r + s.gamma_nr + s.k_isc, s.k_d});
}

inline double min_positive_rate(const tipcav::LevelSystem& s) {
  double m = 1e300;
  for (double r : {s.k_pump, s.gamma_r + s.gamma_nr + s.k_isc, s.k_d}) {
    if (r > 0.0) m = std::min(m, r);
  }
  return m;
}

/// Populations at time t from p0, integrated with a step of at most
/// 0.02 / max_rate.
inline std::array<double, 3> evolve(const tipcav::LevelSystem& s, std::array<double, 3> p0, double t) {
  if (t <= 0.0) return p0;
  const int steps = std::max(200, static_cast<int>(std::ceil(t * max_rate(s) / 0.02)));
  return rk4<3>(p0, t, steps, [&](const std::array<double, 3>& p) { return three_level_rhs(s, p); });
}

/// Long-time limit: t = 100 / slowest rate.
inline std::array<double, 3> long_time(const tipcav::LevelSystem& s) {
  return evolve(s, {1.0, 0.0, 0.0}, 100.0 / min_positive_rate(s));
}

/// g2(tau) = p_e(tau | ground) / p_e(inf), by integration.
inline double g2(const tipcav::LevelSystem& s, double tau, double pe_inf) {
  return evolve(s, {1.0, 0.0, 0.0}, tau)[1] / pe_inf;
}

/// Six-level spin model written out independently:
/// 0 g_bright, 1 e_bright, 2 s_bright, 3 g_dark, 4 e_dark, 5 s_dark.
inline std::array<double, 6> six_level_rhs(const tipcav::SpinLevelSystem& sp, double mw,
                                           const std::array<double, 6>& p) {
  const auto& b = sp.base;
  const double down = b.gamma_r + b.gamma_nr;
  const double beta = sp.branch_to_bright;
  const double from_s = b.k_d * (p[2] + p[5]);
  std::array<double, 6> d{};
  d[0] = -b.k_pump * p[0] + down * p[1] + beta * from_s - mw * p[0] + mw * p[3];
  d[1] = b.k_pump * p[0] - (down + sp.k_isc_bright) * p[1];
  d[2] = sp.k_isc_bright * p[1] - b.k_d * p[2];
  d[3] = -b.k_pump * p[3] + down * p[4] + (1.0 - beta) * from_s - mw * p[3] + mw * p[0];
  d[4] = b.k_pump * p[3] - (down + sp.k_isc_dark) * p[4];
  d[5] = sp.k_isc_dark * p[4] - b.k_d * p[5];
  return d;
}

inline std::array<double, 6> six_level_long_time(const tipcav::SpinLevelSystem& sp, double mw) {
  const auto& b = sp.base;
  // Gershgorin bound on the fastest eigenvalue.
  const double fastest = b.k_pump + mw + b.gamma_r + b.gamma_nr + sp.k_isc_dark + b.k_d;
  double slowest = 1e300;
  for (double r : {b.k_pump, b.k_d, sp.k_isc_bright, sp.k_isc_dark, mw}) {
    if (r > 0.0) slowest = std::min(slowest, r);
  }
  // Spin repolarization runs at ~ k_pump * k_isc / (gamma + k_isc); add it.
  const double repol = b.k_pump * sp.k_isc_bright / (b.gamma_r + b.k_pump + sp.k_isc_bright);
  if (repol > 0.0) slowest = std::min(slowest, repol);
  const double t = 60.0 / slowest;
  // Accurate transients where affordable; never beyond the RK4 stability limit.
  const double stable = std::ceil(t * fastest / 2.0);
  const double accurate = std::min(4e7, std::ceil(t * fastest / 0.05));
  const int steps = static_cast<int>(std::max(stable, accurate));
  std::array<double, 6> p0{0.5, 0.0, 0.0, 0.5, 0.0, 0.0};
  return rk4<6>(p0, t, steps, [&](const std::array<double, 6>& p) { return six_level_rhs(sp, mw, p); });
}

/// Emitted rate gamma_r (p_e,bright + p_e,dark) from the integrated oracle.
inline double six_level_rate(const tipcav::SpinLevelSystem& sp, double mw) {
  const auto p = six_level_long_time(sp, mw);
  return sp.base.gamma_r * (p[1] + p[4]);
}

/// O(N*M) coincidence histogram for tau = b - a on symmetric bins given as
/// (lo, hi) inclusive lag ranges.
inline std::vector<std::uint64_t> brute_force(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b,
                                              const std::vector<std::int64_t>& lo,
                                              const std::vector<std::int64_t>& hi) {
  std::vector<std::uint64_t> counts(lo.size(), 0);
  if (lo.empty()) return counts;
  for (auto ta : a) {
    for (auto tb : b) {
      const std::int64_t tau = tb - ta;
      if (tau < lo.front() || tau > hi.back()) continue;
      // Last bin whose lower edge is <= tau.
      const auto k = static_cast<std::size_t>(std::upper_bound(lo.begin(), lo.end(), tau) - lo.begin()) - 1;
      if (tau <= hi[k]) ++counts[k];
    }
  }
  return counts;
}

}  // namespace oracle
