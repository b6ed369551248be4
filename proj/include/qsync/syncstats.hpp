#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "qsync/phasespace.hpp"

namespace qsync {

using Rng = std::mt19937_64;

/// Distance on the circle, min_n |theta - psi + 2 pi n|, in [0, pi].
double argdist(double theta, double psi);

/// Three-angle statistic in [0, 1]; 0 for coincident angles, 1/4 for pi/3
/// spacing, 1 for equally spaced angles.
double chi3(double phi1, double phi2, double phi3);

/// Two-angle statistic argdist(phi1p, 0) / pi.
double chi2(double phi1p);

struct ChiSampleSet {
  std::vector<double> values;
  std::uint64_t sample_id = 0;
  double eta = 0.0;
  double threshold = 0.0;
  std::size_t count() const { return values.size(); }
};

enum class RegionSampling { weighted, uniform };

/// Draws n points from the region (cell chosen with probability proportional
/// to S_d, or uniformly, then jittered uniformly over one cell centred on the
/// grid point) and evaluates chi3(phi1p, phi2p, 0) for two axes or
/// chi2(phi1p) for one axis.
ChiSampleSet sample_chi(const ThresholdRegion& region, std::size_t n, Rng& rng,
                        RegionSampling mode = RegionSampling::weighted);

struct IntervalProbabilities {
  static constexpr std::array<std::array<double, 2>, 3> intervals{
      {{0.0, 2.0 / 16.0}, {3.0 / 16.0, 5.0 / 16.0}, {14.0 / 16.0, 1.0}}};

  double p1 = 0.0, p2 = 0.0, p3 = 0.0;
  std::size_t count = 0;
  /// P2 / (3 P1); empty when P1 = 0.
  std::optional<double> ratio;
};

/// Which of the three intervals holds chi (0, 1, 2), or -1.
int interval_index(double chi);

IntervalProbabilities interval_probabilities(std::span<const double> samples);

/// Per-group interval counts, the unit resampled by the bootstrap.
struct IntervalCounts {
  std::array<std::size_t, 3> hits{};
  std::size_t total = 0;
};

IntervalCounts interval_counts(std::span<const double> samples);

struct BootstrapSummary {
  IntervalProbabilities point;
  std::array<double, 3> p_sigma{};     ///< bootstrap sd of P1, P2, P3
  std::array<double, 3> diff_sigma{};  ///< sd of P1-P2, P1-P3, P2-P3
  std::optional<double> ratio_lo, ratio_hi;  ///< 2.5 / 97.5 percentiles
  int resamples = 0;
  int undefined_ratio_resamples = 0;
};

/// Resamples whole groups (records) with replacement.
BootstrapSummary bootstrap_intervals(std::span<const IntervalCounts> groups, int resamples,
                                     std::uint64_t seed);

struct UniformityReport {
  std::size_t n = 0;
  double ks_chi = 0.0;       ///< KS distance of chi to U[0, 1]
  double ks_l = 0.0;         ///< KS distance of l = sqrt(chi) to F(l) = l^2
  double cdf_l_half = 0.0;   ///< empirical P(l <= 1/2)
};

/// chi of i.i.d. uniform angle triples.
UniformityReport uniformity_oracle(std::size_t n, Rng& rng);

/// sup |F_emp - F| for a continuous reference CDF.
template <class Cdf>
double ks_distance(std::vector<double> values, Cdf cdf);

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::size_t total = 0;

  std::size_t bins() const { return counts.size(); }
  double density(std::size_t bin) const;
  /// Interior bins whose count is at least both neighbours' and strictly above one of them.
  std::vector<std::size_t> local_maxima() const;
};

/// Equal-width bins on [0, 1]; 1 falls into the last bin, values outside are rejected.
Histogram histogram(std::span<const double> values, std::size_t bins = 64);

/// (bin_left, bin_right, density).
void write_histogram_csv(std::ostream& out, const Histogram& h);

template <class Cdf>
double ks_distance(std::vector<double> values, Cdf cdf) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = cdf(values[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

}  // namespace qsync
