#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "tipcav/photophysics.hpp"

namespace tipcav {

using Picoseconds = std::int64_t;

inline constexpr double kPsPerSecond = 1e12;

struct DetectorModel {
  double efficiency = 1.0;
  double dark_rate = 0.0;        // Hz, whole detection system
  double dead_time = 0.0;        // ps, per channel
  double irf_sigma = 0.0;        // ps, Gaussian jitter
  double background_rate = 0.0;  // Hz, uncorrelated signal-like counts

  void validate() const;
};

struct PulseTrain {
  double period = 12500.0;  // ps
  double pulse_width = 0.0;  // ps, 0 = delta pulse
  std::uint64_t pulses = 0;
  double excitation_probability = 1.0;  // g -> e promotion per pulse

  void validate() const;
};

/// Sorted, strictly increasing photon arrival times on one channel.
struct PhotonStream {
  std::uint8_t channel = 0;
  std::vector<Picoseconds> timestamps;
  Picoseconds duration = 0;

  std::size_t size() const { return timestamps.size(); }
  bool empty() const { return timestamps.empty(); }
  double mean_rate() const;  // Hz
  bool is_sorted_strict() const;
};

struct RngSeed {
  std::uint64_t value = 0;
};

/// One raw jump of the emitter, before the detector.
struct Jump {
  double time;  // s
  Level from;
  Level to;
  bool radiative;
};

using JumpVisitor = std::function<void(const Jump&)>;

/// Exact event-driven trajectory on [0, duration_s), starting from a state
/// drawn from the steady state. Calls `visit` for every jump.
void simulate_jumps(const LevelSystem& sys, double duration_s, RngSeed seed, const JumpVisitor& visit);

/// Continuous-wave HBT acquisition. Returns (channel 0, channel 1).
std::pair<PhotonStream, PhotonStream> simulate_cw(const LevelSystem& sys, Picoseconds duration,
                                                  const DetectorModel& det, RngSeed seed,
                                                  double splitter = 0.5);

/// Pulsed acquisition on a single detector. Pulse k starts at k * period.
PhotonStream simulate_pulsed(const LevelSystem& sys, const PulseTrain& train, const DetectorModel& det,
                             RngSeed seed);

/// Applies thinning, jitter, uncorrelated counts and dead time to emitted
/// photon times (ps, any order) for a single channel.
PhotonStream apply_detector(std::vector<double> photon_times_ps, Picoseconds duration, const DetectorModel& det,
                            double uncorrelated_rate_hz, std::uint8_t channel, std::uint64_t seed);

}  // namespace tipcav
