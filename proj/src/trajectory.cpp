#include "tipcav/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tipcav/rng.hpp"

namespace tipcav {

namespace {

// Sub-stream identifiers for Rng(seed, stream).
enum Stream : std::uint64_t { kTrajectory = 1, kRouting = 2, kDetector0 = 10, kDetector1 = 11 };

// Upper bound on a simulated span; keeps ps arithmetic exact in doubles.
constexpr Picoseconds kMaxDuration = Picoseconds{1} << 52;

void check_rates_for_simulation(const LevelSystem& sys) {
  for (double r : {sys.k_pump, sys.gamma_r, sys.gamma_nr, sys.k_isc, sys.k_d}) {
    if (!std::isfinite(r) || r < 0.0) throw InvalidParameter("simulation: rates must be finite and >= 0");
  }
  if (sys.has_absorbing_state()) throw AbsorbingStateError("simulation: metastable state is absorbing");
}

Level sample_state(const Populations& p, Rng& rng) {
  const double u = rng.uniform();
  if (u < p.ground) return Level::Ground;
  if (u < p.ground + p.excited) return Level::Excited;
  return Level::Shelved;
}

double out_rate(const LevelSystem& sys, Level state, bool pumped) {
  switch (state) {
    case Level::Ground: return pumped ? sys.k_pump : 0.0;
    case Level::Excited: return sys.excited_decay_rate();
    case Level::Shelved: return sys.k_d;
  }
  return 0.0;
}

// Picks the transition out of `state` given u ~ U[0, total).
Jump pick_transition(const LevelSystem& sys, Level state, double u, double time) {
  switch (state) {
    case Level::Ground: return {time, Level::Ground, Level::Excited, false};
    case Level::Excited:
      if (u < sys.gamma_r) return {time, Level::Excited, Level::Ground, true};
      if (u < sys.gamma_r + sys.gamma_nr) return {time, Level::Excited, Level::Ground, false};
      return {time, Level::Excited, Level::Shelved, false};
    case Level::Shelved: return {time, Level::Shelved, Level::Ground, false};
  }
  return {time, state, state, false};
}

// Time unit is whatever `scale` converts seconds into.
template <typename OnJump>
Level evolve(const LevelSystem& sys, Level state, double& t, double t_end, double scale, bool pumped, Rng& rng,
             OnJump&& on_jump) {
  while (true) {
    const double total = out_rate(sys, state, pumped);
    if (total <= 0.0) {
      t = t_end;
      return state;
    }
    const double wait = rng.exponential(total) * scale;
    if (t + wait >= t_end) {
      t = t_end;
      return state;
    }
    t += wait;
    const Jump j = pick_transition(sys, state, rng.uniform() * total, t);
    on_jump(j);
    state = j.to;
  }
}

void check_duration(Picoseconds duration) {
  if (duration <= 0) throw InvalidParameter("simulation: duration must be > 0");
  if (duration > kMaxDuration) throw InvalidParameter("simulation: duration overflows the ps timeline");
}

}  // namespace

void DetectorModel::validate() const {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw InvalidParameter("DetectorModel.efficiency must lie in [0, 1]");
  if (!(dark_rate >= 0.0) || !std::isfinite(dark_rate)) throw InvalidParameter("DetectorModel.dark_rate must be >= 0");
  if (!(dead_time >= 0.0) || !std::isfinite(dead_time)) throw InvalidParameter("DetectorModel.dead_time must be >= 0");
  if (!(irf_sigma >= 0.0) || !std::isfinite(irf_sigma)) throw InvalidParameter("DetectorModel.irf_sigma must be >= 0");
  if (!(background_rate >= 0.0) || !std::isfinite(background_rate)) {
    throw InvalidParameter("DetectorModel.background_rate must be >= 0");
  }
}

void PulseTrain::validate() const {
  if (!(pulse_width >= 0.0)) throw InvalidParameter("PulseTrain.pulse_width must be >= 0");
  if (!(period > pulse_width)) throw InvalidParameter("PulseTrain.period must exceed pulse_width");
  if (!(excitation_probability >= 0.0 && excitation_probability <= 1.0)) {
    throw InvalidParameter("PulseTrain.excitation_probability must lie in [0, 1]");
  }
  if (pulses > 0 && period * static_cast<double>(pulses) > static_cast<double>(kMaxDuration)) {
    throw InvalidParameter("PulseTrain: pulses * period overflows the ps timeline");
  }
}

double PhotonStream::mean_rate() const {
  if (duration <= 0) return 0.0;
  return static_cast<double>(timestamps.size()) * kPsPerSecond / static_cast<double>(duration);
}

bool PhotonStream::is_sorted_strict() const {
  return std::adjacent_find(timestamps.begin(), timestamps.end(),
                            [](Picoseconds a, Picoseconds b) { return b <= a; }) == timestamps.end();
}

void simulate_jumps(const LevelSystem& sys, double duration_s, RngSeed seed, const JumpVisitor& visit) {
  check_rates_for_simulation(sys);
  if (!(duration_s > 0.0)) throw InvalidParameter("simulate_jumps: duration must be > 0");
  Rng rng(seed.value, kTrajectory);
  Level state = sys.gamma_r > 0.0 ? sample_state(steady_state(sys), rng) : Level::Ground;
  double t = 0.0;
  evolve(sys, state, t, duration_s, 1.0, true, rng, [&](const Jump& j) { visit(j); });
}

PhotonStream apply_detector(std::vector<double> photon_times_ps, Picoseconds duration, const DetectorModel& det,
                            double uncorrelated_rate_hz, std::uint8_t channel, std::uint64_t seed) {
  det.validate();
  Rng rng(seed);

  std::vector<double> detected;
  detected.reserve(static_cast<std::size_t>(photon_times_ps.size() * det.efficiency) + 16);
  for (double t : photon_times_ps) {
    if (!rng.bernoulli(det.efficiency)) continue;
    if (det.irf_sigma > 0.0) t += det.irf_sigma * rng.normal();
    detected.push_back(t);
  }
  photon_times_ps.clear();
  photon_times_ps.shrink_to_fit();

  if (uncorrelated_rate_hz > 0.0) {
    const double rate_per_ps = uncorrelated_rate_hz / kPsPerSecond;
    const auto span = static_cast<double>(duration);
    for (double t = rng.exponential(rate_per_ps); t < span; t += rng.exponential(rate_per_ps)) {
      detected.push_back(t);
    }
  }
  std::sort(detected.begin(), detected.end());

  PhotonStream out;
  out.channel = channel;
  out.duration = duration;
  out.timestamps.reserve(detected.size());
  const double min_gap = std::max(det.dead_time, 1.0);
  bool have_last = false;
  Picoseconds last = 0;
  for (double t : detected) {
    if (t < 0.0) continue;
    const auto ts = static_cast<Picoseconds>(std::floor(t));
    if (ts >= duration) break;
    if (have_last && static_cast<double>(ts - last) < min_gap) continue;
    out.timestamps.push_back(ts);
    last = ts;
    have_last = true;
  }
  return out;
}

std::pair<PhotonStream, PhotonStream> simulate_cw(const LevelSystem& sys, Picoseconds duration,
                                                  const DetectorModel& det, RngSeed seed, double splitter) {
  check_rates_for_simulation(sys);
  check_duration(duration);
  det.validate();
  if (!(splitter > 0.0 && splitter < 1.0)) throw InvalidParameter("simulate_cw: splitter must lie in (0, 1)");

  std::vector<double> ch0, ch1;
  if (sys.gamma_r > 0.0) {
    Rng rng(seed.value, kTrajectory);
    Rng route(seed.value, kRouting);
    Level state = sample_state(steady_state(sys), rng);
    double t = 0.0;
    evolve(sys, state, t, static_cast<double>(duration), kPsPerSecond, true, rng, [&](const Jump& j) {
      if (!j.radiative) return;
      (route.uniform() < splitter ? ch0 : ch1).push_back(j.time);
    });
  }

  const double uncorrelated = det.dark_rate + det.background_rate;
  return {apply_detector(std::move(ch0), duration, det, uncorrelated * splitter, 0,
                         mix_seed(seed.value ^ mix_seed(kDetector0))),
          apply_detector(std::move(ch1), duration, det, uncorrelated * (1.0 - splitter), 1,
                         mix_seed(seed.value ^ mix_seed(kDetector1)))};
}

PhotonStream simulate_pulsed(const LevelSystem& sys, const PulseTrain& train, const DetectorModel& det,
                             RngSeed seed) {
  check_rates_for_simulation(sys);
  train.validate();
  det.validate();
  const auto duration = static_cast<Picoseconds>(std::llround(train.period * static_cast<double>(train.pulses)));
  check_duration(duration);

  std::vector<double> photons;
  Rng rng(seed.value, kTrajectory);
  Level state = Level::Ground;
  for (std::uint64_t k = 0; k < train.pulses; ++k) {
    const double onset = train.period * static_cast<double>(k);
    const double next = onset + train.period;
    double t = onset;
    if (state == Level::Ground && rng.bernoulli(train.excitation_probability)) {
      state = Level::Excited;
      if (train.pulse_width > 0.0) t += train.pulse_width * rng.uniform();
    }
    state = evolve(sys, state, t, next, kPsPerSecond, false, rng, [&](const Jump& j) {
      if (j.radiative) photons.push_back(j.time);
    });
  }
  return apply_detector(std::move(photons), duration, det, det.dark_rate + det.background_rate, 0,
                        mix_seed(seed.value ^ mix_seed(kDetector0)));
}

}  // namespace tipcav
