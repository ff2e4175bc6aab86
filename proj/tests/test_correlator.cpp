#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tipcav/correlator.hpp"
#include "tipcav/rng.hpp"

using namespace tipcav;

namespace {

PhotonStream random_stream(std::uint64_t seed, std::size_t n, Picoseconds duration, std::uint8_t channel) {
  Rng rng(seed);
  PhotonStream s;
  s.channel = channel;
  s.duration = duration;
  const double mean_gap = static_cast<double>(duration) / static_cast<double>(n + 1);
  Picoseconds t = 0;
  while (true) {
    // Clustered arrivals exercise dense and empty lag regions.
    t += 1 + static_cast<Picoseconds>(rng.exponential(1.0 / mean_gap) * (rng.bernoulli(0.2) ? 0.01 : 1.2));
    if (t >= duration) break;
    s.timestamps.push_back(t);
  }
  return s;
}

void check_against_brute_force(const PhotonStream& a, const PhotonStream& b, const LagBins& bins, unsigned threads) {
  const G2Curve c = cross_correlate(a, b, bins, threads);
  const auto ref = oracle::brute_force(a.timestamps, b.timestamps, c.lag_lo, c.lag_hi);
  CHECK(c.counts == ref);
}

}  // namespace

TEST_CASE("lag bins") {
  const LagBins u = LagBins::uniform(1000, 100);
  CHECK(u.size() % 2 == 1);
  CHECK(u.lo(u.center()) == -u.hi(u.center()));
  for (std::size_t i = 0; i < u.size(); ++i) {
    CHECK(u.lo(i) == -u.hi(u.size() - 1 - i));  // mirror symmetry
    if (i + 1 < u.size()) CHECK(u.hi(i) + 1 == u.lo(i + 1));  // contiguous
  }
  CHECK(u.lo(0) == -1000);
  CHECK(u.hi(u.size() - 1) == 1000);
  for (Picoseconds tau = -1000; tau <= 1000; ++tau) {
    const std::size_t i = u.index(tau);
    CHECK_FALSE((tau < u.lo(i) || tau > u.hi(i)));
  }

  const LagBins g = LagBins::log_spaced(1'000'000, 20, 10);
  CHECK_FALSE(g.is_uniform());
  CHECK(g.hi(g.size() - 1) == 1'000'000);
  for (std::size_t i = 0; i + 1 < g.size(); ++i) CHECK(g.hi(i) + 1 == g.lo(i + 1));
  for (Picoseconds tau : {-1'000'000L, -12345L, -10L, 0L, 9L, 10L, 11L, 777L, 999'999L, 1'000'000L}) {
    const std::size_t i = g.index(tau);
    CHECK_FALSE((tau < g.lo(i) || tau > g.hi(i)));
  }

  CHECK_THROWS_AS(LagBins::uniform(100, 0), InvalidParameter);
  CHECK_THROWS_AS(LagBins::uniform(100, 200), InvalidParameter);
  CHECK_THROWS_AS(LagBins::log_spaced(1000, 10, 0), InvalidParameter);
}

TEST_CASE("correlator is bit-identical to the brute force") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto a = random_stream(seed, 3000 + 1000 * seed, 50'000'000, 0);
    const auto b = random_stream(seed + 100, 2000 + 1000 * seed, 40'000'000, 1);
    check_against_brute_force(a, b, LagBins::uniform(20'000, 64), 1);
    check_against_brute_force(a, b, LagBins::uniform(20'000, 65), 4);
    check_against_brute_force(a, b, LagBins::log_spaced(200'000, 16, 8), 3);
    check_against_brute_force(a, a, LagBins::uniform(5'000, 1), 2);
  }
}

TEST_CASE("thread count does not change results") {
  const auto a = random_stream(5, 100000, 10'000'000'000, 0);
  const auto b = random_stream(6, 100000, 10'000'000'000, 1);
  const LagBins bins = LagBins::uniform(100'000, 100);
  const G2Curve one = cross_correlate(a, b, bins, 1);
  for (unsigned t : {2u, 3u, 8u}) CHECK(cross_correlate(a, b, bins, t).counts == one.counts);
}

TEST_CASE("symmetry and shift invariance") {
  const auto a = random_stream(21, 5000, 100'000'000, 0);
  const auto b = random_stream(22, 5000, 100'000'000, 1);
  const LagBins bins = LagBins::uniform(50'000, 250);
  const G2Curve ab = cross_correlate(a, b, bins);
  const G2Curve ba = cross_correlate(b, a, bins);
  for (std::size_t i = 0; i < ab.size(); ++i) CHECK(ab.counts[i] == ba.counts[ab.size() - 1 - i]);

  PhotonStream as = a, bs = b;
  for (auto& t : as.timestamps) t += 1'000'000;
  for (auto& t : bs.timestamps) t += 1'000'000;
  as.duration += 1'000'000;
  bs.duration += 1'000'000;
  CHECK(cross_correlate(as, bs, bins).counts == ab.counts);
}

TEST_CASE("normalization of uncorrelated streams") {
  const auto a = random_stream(31, 200000, 20'000'000'000, 0);
  const auto b = random_stream(32, 200000, 20'000'000'000, 1);
  PhotonStream pa = a, pb = b;  // plain Poisson streams
  Rng rng(9);
  for (auto* s : {&pa, &pb}) {
    s->timestamps.clear();
    double t = 0.0;
    while ((t += rng.exponential(1e-5)) < 2e10) {
      const auto ts = static_cast<Picoseconds>(t);
      if (s->timestamps.empty() || ts > s->timestamps.back()) s->timestamps.push_back(ts);
    }
  }
  const G2Curve c = cross_correlate(pa, pb, 1'000'000, 20'000);
  double mean = 0.0;
  for (double v : c.normalized) mean += v;
  mean /= static_cast<double>(c.size());
  CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("degenerate and invalid inputs") {
  PhotonStream empty;
  empty.duration = 1000;
  const auto a = random_stream(1, 100, 1'000'000, 0);
  const G2Curve c = cross_correlate(a, empty, 1000, 10);
  CHECK(c.degenerate);
  for (auto v : c.counts) CHECK(v == 0);

  PhotonStream unsorted = a;
  std::swap(unsorted.timestamps[0], unsorted.timestamps[1]);
  CHECK_THROWS_AS(cross_correlate(unsorted, a, 1000, 10), InvalidParameter);
}

TEST_CASE("decay histogram folds by period") {
  PhotonStream s;
  s.duration = 100'000;
  s.timestamps = {5, 1007, 2000, 2999, 10'010};
  PulseTrain t;
  t.period = 1000.0;
  t.pulses = 100;
  const DecayHistogram h = decay_histogram(s, t, 10.0);
  CHECK(h.size() == 100);
  CHECK(h.total() == 5);
  CHECK(h.counts[0] == 3);   // 5, 2000, 10010
  CHECK(h.counts[99] == 1);  // 2999
  CHECK(h.counts[7 / 10] == 3);
  CHECK_THROWS_AS(decay_histogram(s, t, 1000.0), InvalidParameter);
}
