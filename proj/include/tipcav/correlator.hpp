#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "tipcav/trajectory.hpp"

namespace tipcav {

/// Symmetric integer lag binning. With positive bounds u_1 < ... < u_n
/// (u_n = window + 1), the centre bin is |tau| < u_1 and positive bin j is
/// u_j <= tau < u_{j+1}; negative bins mirror them exactly.
class LagBins {
 public:
  static LagBins uniform(Picoseconds window, Picoseconds bin_width);
  static LagBins log_spaced(Picoseconds window, Picoseconds first_width, int bins_per_decade);

  Picoseconds window() const { return bounds_.back() - 1; }
  std::size_t size() const { return 2 * bounds_.size() - 1; }
  std::size_t center() const { return bounds_.size() - 1; }
  bool is_uniform() const { return width_ > 0; }
  Picoseconds nominal_width() const { return width_; }
  const std::vector<Picoseconds>& bounds() const { return bounds_; }

  /// Inclusive integer lag range of bin i.
  Picoseconds lo(std::size_t i) const;
  Picoseconds hi(std::size_t i) const;
  Picoseconds width(std::size_t i) const { return hi(i) - lo(i) + 1; }

  /// Bin index for |tau| <= window.
  std::size_t index(Picoseconds tau) const {
    const Picoseconds m = tau < 0 ? -tau : tau;
    std::size_t j;
    if (m < bounds_.front()) {
      j = 0;
    } else if (width_ > 0) {
      j = 1 + static_cast<std::size_t>((m - bounds_.front()) / width_);
    } else {
      j = index_log(m);
    }
    return tau < 0 ? center() - j : center() + j;
  }

 private:
  std::size_t index_log(Picoseconds m) const;

  std::vector<Picoseconds> bounds_;
  Picoseconds width_ = 0;
};

struct G2Curve {
  std::vector<Picoseconds> lag_lo;  // inclusive
  std::vector<Picoseconds> lag_hi;  // inclusive
  std::vector<std::uint64_t> counts;
  std::vector<double> normalized;
  /// Expected coincidences per ps of lag for uncorrelated streams,
  /// N_a N_b / T over the overlapping span T.
  double total_pairs_norm = 0.0;
  bool degenerate = false;  // zero denominator

  std::uint64_t n_a = 0, n_b = 0;
  Picoseconds span = 0;
  Picoseconds window = 0;
  Picoseconds bin_width = 0;  // 0 for log-spaced bins

  std::size_t size() const { return counts.size(); }
  double center(std::size_t i) const { return 0.5 * static_cast<double>(lag_lo[i] + lag_hi[i]); }
  Picoseconds width(std::size_t i) const { return lag_hi[i] - lag_lo[i] + 1; }
  /// Expected coincidences in bin i if uncorrelated.
  double denominator(std::size_t i) const { return total_pairs_norm * static_cast<double>(width(i)); }
  std::size_t zero_bin() const;
};

/// Full cross-correlation of all pairs with |t_b - t_a| <= window, by a
/// sorted-merge sweep. `threads` > 1 splits stream a into time slices.
G2Curve cross_correlate(const PhotonStream& a, const PhotonStream& b, const LagBins& bins, unsigned threads = 1);
G2Curve cross_correlate(const PhotonStream& a, const PhotonStream& b, Picoseconds window, Picoseconds bin_width,
                        unsigned threads = 1);

/// Fills counts by the sweep; exposed for benchmarking and partial sums.
void accumulate_coincidences(std::span<const Picoseconds> a, std::span<const Picoseconds> b, const LagBins& bins,
                             std::span<std::uint64_t> counts);

struct DecayHistogram {
  std::vector<double> bin_lo;  // delay ps
  double bin_width = 0.0;
  double period = 0.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t n_pulses = 0;

  std::size_t size() const { return counts.size(); }
  double bin_hi(std::size_t i) const { return std::min(bin_lo[i] + bin_width, period); }
  double center(std::size_t i) const { return 0.5 * (bin_lo[i] + bin_hi(i)); }
  std::uint64_t total() const;
};

DecayHistogram decay_histogram(const PhotonStream& s, const PulseTrain& train, double bin_width);

}  // namespace tipcav
