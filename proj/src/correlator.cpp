#include "tipcav/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace tipcav {

LagBins LagBins::uniform(Picoseconds window, Picoseconds bin_width) {
  if (!(bin_width > 0)) throw InvalidParameter("LagBins: bin_width must be > 0");
  if (!(window > bin_width)) throw InvalidParameter("LagBins: window must exceed bin_width");
  LagBins b;
  b.width_ = bin_width;
  const Picoseconds end = window + 1;
  for (Picoseconds u = (bin_width + 1) / 2; u < end; u += bin_width) b.bounds_.push_back(u);
  b.bounds_.push_back(end);
  return b;
}

LagBins LagBins::log_spaced(Picoseconds window, Picoseconds first_width, int bins_per_decade) {
  if (!(first_width > 0)) throw InvalidParameter("LagBins: first bin width must be > 0");
  if (!(window > first_width)) throw InvalidParameter("LagBins: window must exceed first bin width");
  if (bins_per_decade <= 0) throw InvalidParameter("LagBins: bins_per_decade must be > 0");
  LagBins b;
  const double ratio = std::pow(10.0, 1.0 / bins_per_decade);
  const Picoseconds end = window + 1;
  Picoseconds u = (first_width + 1) / 2;
  while (u < end) {
    b.bounds_.push_back(u);
    const auto grown = static_cast<Picoseconds>(std::llround(static_cast<double>(u) * ratio));
    u = std::max(u + first_width, grown);
  }
  b.bounds_.push_back(end);
  return b;
}

std::size_t LagBins::index_log(Picoseconds m) const {
  const auto it = std::upper_bound(bounds_.begin(), bounds_.end(), m);
  return static_cast<std::size_t>(it - bounds_.begin());
}

Picoseconds LagBins::lo(std::size_t i) const {
  const std::size_t c = center();
  if (i == c) return -(bounds_.front() - 1);
  if (i > c) return bounds_[i - c - 1];
  return -(bounds_[c - i] - 1);
}

Picoseconds LagBins::hi(std::size_t i) const {
  const std::size_t c = center();
  if (i == c) return bounds_.front() - 1;
  if (i > c) return bounds_[i - c] - 1;
  return -bounds_[c - i - 1];
}

std::size_t G2Curve::zero_bin() const {
  for (std::size_t i = 0; i < size(); ++i) {
    if (lag_lo[i] <= 0 && lag_hi[i] >= 0) return i;
  }
  return size();
}

void accumulate_coincidences(std::span<const Picoseconds> a, std::span<const Picoseconds> b, const LagBins& bins,
                             std::span<std::uint64_t> counts) {
  const Picoseconds window = bins.window();
  std::size_t start = 0;
  const std::size_t nb = b.size();
  for (const Picoseconds ta : a) {
    const Picoseconds first = ta - window;
    while (start < nb && b[start] < first) ++start;
    const Picoseconds last = ta + window;
    for (std::size_t j = start; j < nb && b[j] <= last; ++j) {
      ++counts[bins.index(b[j] - ta)];
    }
  }
}

G2Curve cross_correlate(const PhotonStream& a, const PhotonStream& b, const LagBins& bins, unsigned threads) {
  if (!a.is_sorted_strict() || !b.is_sorted_strict()) {
    throw InvalidParameter("cross_correlate: streams must be strictly increasing");
  }

  G2Curve curve;
  const std::size_t n = bins.size();
  curve.lag_lo.resize(n);
  curve.lag_hi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    curve.lag_lo[i] = bins.lo(i);
    curve.lag_hi[i] = bins.hi(i);
  }
  curve.counts.assign(n, 0);
  curve.normalized.assign(n, 0.0);
  curve.window = bins.window();
  curve.bin_width = bins.nominal_width();
  curve.n_a = a.size();
  curve.n_b = b.size();
  curve.span = std::min(a.duration, b.duration);

  if (a.empty() || b.empty() || curve.span <= 0) {
    curve.degenerate = true;
    return curve;
  }

  // Each slice of a locates its own start in b; counts do not depend on the
  // thread count.
  const std::span<const Picoseconds> sa(a.timestamps), sb(b.timestamps);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(sa.size() / 4096 + 1)));
  if (threads == 1) {
    accumulate_coincidences(sa, sb, bins, curve.counts);
  } else {
    std::vector<std::vector<std::uint64_t>> partial(threads, std::vector<std::uint64_t>(n, 0));
    std::vector<std::jthread> workers;
    const std::size_t chunk = (sa.size() + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      const std::size_t begin = std::min(sa.size(), w * chunk);
      const std::size_t end = std::min(sa.size(), begin + chunk);
      workers.emplace_back([&, w, begin, end] {
        if (begin == end) return;
        const auto slice = sa.subspan(begin, end - begin);
        const auto from = std::lower_bound(sb.begin(), sb.end(), slice.front() - bins.window());
        accumulate_coincidences(slice, sb.subspan(static_cast<std::size_t>(from - sb.begin())), bins, partial[w]);
      });
    }
    workers.clear();
    for (const auto& p : partial) {
      for (std::size_t i = 0; i < n; ++i) curve.counts[i] += p[i];
    }
  }

  curve.total_pairs_norm =
      static_cast<double>(curve.n_a) * static_cast<double>(curve.n_b) / static_cast<double>(curve.span);
  for (std::size_t i = 0; i < n; ++i) {
    curve.normalized[i] = static_cast<double>(curve.counts[i]) / curve.denominator(i);
  }
  return curve;
}

G2Curve cross_correlate(const PhotonStream& a, const PhotonStream& b, Picoseconds window, Picoseconds bin_width,
                        unsigned threads) {
  return cross_correlate(a, b, LagBins::uniform(window, bin_width), threads);
}

std::uint64_t DecayHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

DecayHistogram decay_histogram(const PhotonStream& s, const PulseTrain& train, double bin_width) {
  if (!(train.period > 0.0)) throw InvalidParameter("decay_histogram: period must be > 0");
  if (!(bin_width > 0.0)) throw InvalidParameter("decay_histogram: bin_width must be > 0");
  if (!(bin_width < train.period)) throw InvalidParameter("decay_histogram: bin_width must be < period");

  DecayHistogram h;
  h.period = train.period;
  h.bin_width = bin_width;
  h.n_pulses = train.pulses;
  const auto nbins = static_cast<std::size_t>(std::ceil(train.period / bin_width));
  h.bin_lo.resize(nbins);
  for (std::size_t i = 0; i < nbins; ++i) h.bin_lo[i] = static_cast<double>(i) * bin_width;
  h.counts.assign(nbins, 0);
  for (Picoseconds t : s.timestamps) {
    const double x = static_cast<double>(t);
    double delay = x - std::floor(x / train.period) * train.period;
    if (delay >= train.period) delay -= train.period;
    const auto bin = std::min(nbins - 1, static_cast<std::size_t>(delay / bin_width));
    ++h.counts[bin];
  }
  return h;
}

}  // namespace tipcav
