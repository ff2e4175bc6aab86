#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "tipcav/fitting.hpp"
#include "tipcav/spin_odmr.hpp"

using namespace tipcav;

namespace {

SpinLevelSystem reference_spin() {
  SpinLevelSystem s;
  s.base.gamma_r = 1e8;
  s.base.gamma_nr = 2e7;
  s.base.k_d = 1e6;
  s.base.k_pump = 1e7;
  s.k_isc_bright = 1e6;
  s.k_isc_dark = 5e6;
  s.branch_to_bright = 0.7;
  s.nu0 = 3480.0;
  s.delta_nu = 80.0;
  s.k_mw = 1e6;
  return s;
}

}  // namespace

TEST_CASE("six-level rate matrix conserves probability") {
  const auto m = spin_rate_matrix(reference_spin(), 3e5);
  for (int c = 0; c < 6; ++c) CHECK(m.col(c).sum() == doctest::Approx(0.0).scale(1e9));
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      if (r != c) CHECK(m(r, c) >= 0.0);
    }
  }
}

TEST_CASE("six-level steady state matches long-time integration") {
  std::vector<SpinLevelSystem> systems{reference_spin()};
  auto b = reference_spin();
  b.base.k_pump = 5e7;
  b.k_mw = 2e5;
  b.branch_to_bright = 0.9;
  systems.push_back(b);
  auto c = reference_spin();
  c.k_isc_dark = c.k_isc_bright;
  systems.push_back(c);
  for (const auto& s : systems) {
    for (double mw : {0.0, s.k_mw}) {
      const auto p = spin_steady_state(s, mw);
      const auto q = oracle::six_level_long_time(s, mw);
      double sum = 0.0;
      for (std::size_t i = 0; i < 6; ++i) {
        CHECK(std::abs(p[i] - q[i]) < 1e-8);
        sum += p[i];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("odmr contrast") {
  const auto s = reference_spin();
  const double c = odmr_contrast(s);
  CHECK(c > 0.0);
  CHECK(c < 1.0);

  // No spin-dependent shelving: nothing to read out.
  auto flat = s;
  flat.k_isc_dark = flat.k_isc_bright;
  CHECK(std::abs(odmr_contrast(flat)) < 1e-12);

  // Contrast grows monotonically with the drive and saturates.
  double last = -1.0;
  for (double mw : {0.0, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8}) {
    auto d = s;
    d.k_mw = mw;
    const double v = odmr_contrast(d);
    CHECK(v >= last - 1e-15);
    last = v;
  }
  auto zero = s;
  zero.k_mw = 0.0;
  CHECK(std::abs(odmr_contrast(zero)) < 1e-15);

  auto dark = s;
  dark.base.k_pump = 0.0;
  CHECK_THROWS_AS(odmr_contrast(dark), InvalidParameter);
  auto absorbing = s;
  absorbing.base.k_d = 0.0;
  CHECK_THROWS_AS(odmr_contrast(absorbing), AbsorbingStateError);
  auto bad = s;
  bad.branch_to_bright = 1.5;
  CHECK_THROWS_AS(odmr_contrast(bad), InvalidParameter);
}

TEST_CASE("odmr spectrum") {
  auto s = reference_spin();
  s.k_mw = 2e3;  // weak drive: little power broadening
  std::vector<double> f;
  for (double nu = 3100.0; nu <= 3860.0; nu += 10.0) f.push_back(nu);
  DetectorModel det;
  det.efficiency = 0.01;
  det.dark_rate = 100.0;
  const OdmrSpectrum sp = odmr_spectrum(s, f, det);
  const auto min_it = std::min_element(sp.rates.begin(), sp.rates.end());
  CHECK(f[static_cast<std::size_t>(min_it - sp.rates.begin())] == doctest::Approx(3480.0));
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK(sp.rates[i] == doctest::Approx(sp.rates[f.size() - 1 - i]).epsilon(1e-10));  // symmetric about nu0
  }
  const FitResult r = fit_odmr(sp);
  CHECK(r.converged);
  CHECK(r.value("nu0") == doctest::Approx(3480.0).epsilon(1e-6));
  CHECK(r.value("delta_nu") == doctest::Approx(80.0).epsilon(0.05));
  CHECK(r.value("delta_nu") >= 80.0 * (1 - 1e-6));  // broadening only widens

  const OdmrSpectrum a = odmr_spectrum(s, f, det, OdmrSampling{1.0, {7}});
  const OdmrSpectrum b = odmr_spectrum(s, f, det, OdmrSampling{1.0, {7}});
  CHECK(a.rates == b.rates);
  CHECK_THROWS_AS(odmr_spectrum(s, std::vector<double>{}, det), InvalidParameter);
}

TEST_CASE("shot-noise sensitivity") {
  SensitivityInputs in;  // Lorentzian, 110 MHz, C = 0.023, R = 1.88e5, g = 2
  const auto r = sensitivity_report(in);
  CHECK(r.eta * 1e6 == doctest::Approx(303.33).epsilon(5e-4));
  CHECK(r.field_per_frequency == doctest::Approx(3.5723e-11).epsilon(1e-4));

  SensitivityInputs wide{kLorentzianLineshape, 179.5e6, 0.083, 2.63e5, 2.0};
  CHECK(sensitivity(wide) * 1e6 == doctest::Approx(115.97).epsilon(5e-4));

  CHECK(kLorentzianLineshape == doctest::Approx(4.0 / (3.0 * std::sqrt(3.0))));
  CHECK(kGaussianLineshape == doctest::Approx(std::sqrt(std::exp(1.0) / (8.0 * std::log(2.0)))));

  in.C = 0.0;
  CHECK_THROWS_AS(sensitivity(in), InvalidParameter);
  in.C = 0.02;
  in.R = 0.0;
  CHECK_THROWS_AS(sensitivity(in), InvalidParameter);
}
