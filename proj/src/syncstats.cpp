#include "qsync/syncstats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace qsync {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;
}  // namespace

double argdist(double theta, double psi) {
  double d = std::fmod(std::abs(theta - psi), kTwoPi);
  return std::min(d, kTwoPi - d);
}

double chi3(double phi1, double phi2, double phi3) {
  const double sum = phi1 + phi2 + phi3;
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < 3; ++j) {
    const double mean = (kTwoPi * j + sum) / 3.0;
    const double spread = argdist(phi1, mean) + argdist(phi2, mean) + argdist(phi3, mean);
    best = std::min(best, spread);
  }
  const double l = std::min(1.0, 3.0 * best / (4.0 * kPi));
  return l * l;
}

double chi2(double phi1p) { return argdist(phi1p, 0.0) / kPi; }

ChiSampleSet sample_chi(const ThresholdRegion& region, std::size_t n, Rng& rng, RegionSampling mode) {
  if (region.cells.empty()) throw std::invalid_argument("sample_chi: empty region");
  if (n == 0) throw std::invalid_argument("sample_chi: need at least one sample");
  if (region.axes != 1 && region.axes != 2) throw std::invalid_argument("sample_chi: 1 or 2 axes only");
  std::vector<double> w(region.cells.size(), 1.0);
  if (mode == RegionSampling::weighted) {
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) total += w[i] = std::max(0.0, region.weights.at(i));
    if (!(total > 0.0)) std::fill(w.begin(), w.end(), 1.0);
  }
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  const double h = region.spacing();
  const auto points = static_cast<std::size_t>(region.points);

  ChiSampleSet out;
  out.values.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t flat = region.cells[pick(rng)];
    if (region.axes == 1) {
      const double a = (static_cast<double>(flat) + jitter(rng)) * h;
      out.values.push_back(chi2(a));
    } else {
      const double a = (static_cast<double>(flat / points) + jitter(rng)) * h;
      const double b = (static_cast<double>(flat % points) + jitter(rng)) * h;
      out.values.push_back(chi3(a, b, 0.0));
    }
  }
  return out;
}

int interval_index(double chi) {
  const auto& iv = IntervalProbabilities::intervals;
  for (int a = 0; a < 3; ++a)
    if (chi >= iv[a][0] && chi <= iv[a][1]) return a;
  return -1;
}

IntervalCounts interval_counts(std::span<const double> samples) {
  IntervalCounts c;
  for (double x : samples) {
    const int a = interval_index(x);
    if (a >= 0) ++c.hits[a];
  }
  c.total = samples.size();
  return c;
}

namespace {

IntervalProbabilities from_counts(const std::array<std::size_t, 3>& hits, std::size_t total) {
  if (total == 0) throw std::invalid_argument("interval_probabilities: no samples");
  IntervalProbabilities p;
  const double n = static_cast<double>(total);
  p.p1 = hits[0] / n;
  p.p2 = hits[1] / n;
  p.p3 = hits[2] / n;
  p.count = total;
  if (hits[0] > 0) p.ratio = p.p2 / (3.0 * p.p1);
  return p;
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

IntervalProbabilities interval_probabilities(std::span<const double> samples) {
  const auto c = interval_counts(samples);
  return from_counts(c.hits, c.total);
}

BootstrapSummary bootstrap_intervals(std::span<const IntervalCounts> groups, int resamples, std::uint64_t seed) {
  if (groups.empty()) throw std::invalid_argument("bootstrap_intervals: no groups");
  if (resamples < 2) throw std::invalid_argument("bootstrap_intervals: need at least 2 resamples");
  BootstrapSummary out;
  std::array<std::size_t, 3> hits{};
  std::size_t total = 0;
  for (const auto& g : groups) {
    for (int a = 0; a < 3; ++a) hits[a] += g.hits[a];
    total += g.total;
  }
  out.point = from_counts(hits, total);
  out.resamples = resamples;

  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, groups.size() - 1);
  std::array<std::vector<double>, 3> ps, diffs;
  std::vector<double> ratios;
  for (int r = 0; r < resamples; ++r) {
    std::array<std::size_t, 3> h{};
    std::size_t t = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const auto& g = groups[pick(rng)];
      for (int a = 0; a < 3; ++a) h[a] += g.hits[a];
      t += g.total;
    }
    if (t == 0) continue;
    const auto p = from_counts(h, t);
    ps[0].push_back(p.p1);
    ps[1].push_back(p.p2);
    ps[2].push_back(p.p3);
    diffs[0].push_back(p.p1 - p.p2);
    diffs[1].push_back(p.p1 - p.p3);
    diffs[2].push_back(p.p2 - p.p3);
    if (p.ratio)
      ratios.push_back(*p.ratio);
    else
      ++out.undefined_ratio_resamples;
  }
  for (int a = 0; a < 3; ++a) {
    out.p_sigma[a] = stddev(ps[a]);
    out.diff_sigma[a] = stddev(diffs[a]);
  }
  if (!ratios.empty()) {
    out.ratio_lo = percentile(ratios, 0.025);
    out.ratio_hi = percentile(ratios, 0.975);
  }
  return out;
}

UniformityReport uniformity_oracle(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  std::vector<double> chis(n), ls(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = angle(rng), b = angle(rng), c = angle(rng);
    chis[i] = chi3(a, b, c);
    ls[i] = std::sqrt(chis[i]);
  }
  UniformityReport rep;
  rep.n = n;
  rep.cdf_l_half = static_cast<double>(std::count_if(ls.begin(), ls.end(), [](double l) { return l <= 0.5; })) /
                   static_cast<double>(n);
  rep.ks_chi = ks_distance(std::move(chis), [](double x) { return std::clamp(x, 0.0, 1.0); });
  rep.ks_l = ks_distance(std::move(ls), [](double l) {
    const double c = std::clamp(l, 0.0, 1.0);
    return c * c;
  });
  return rep;
}

double Histogram::density(std::size_t bin) const {
  if (total == 0) return 0.0;
  return static_cast<double>(counts.at(bin)) / (static_cast<double>(total) * (edges[bin + 1] - edges[bin]));
}

std::vector<std::size_t> Histogram::local_maxima() const {
  std::vector<std::size_t> out;
  const std::size_t n = counts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t left = i > 0 ? counts[i - 1] : 0;
    const std::size_t right = i + 1 < n ? counts[i + 1] : 0;
    if (counts[i] >= left && counts[i] >= right && (counts[i] > left || counts[i] > right)) out.push_back(i);
  }
  return out;
}

Histogram histogram(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("histogram: need at least one bin");
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = static_cast<double>(i) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double x : values) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("histogram: value outside [0, 1]");
    const auto b = std::min(bins - 1, static_cast<std::size_t>(x * static_cast<double>(bins)));
    ++h.counts[b];
  }
  h.total = values.size();
  return h;
}

void write_histogram_csv(std::ostream& out, const Histogram& h) {
  out << "bin_left,bin_right,density\n";
  out.precision(17);
  for (std::size_t i = 0; i < h.bins(); ++i) out << h.edges[i] << ',' << h.edges[i + 1] << ',' << h.density(i) << '\n';
}

}  // namespace qsync
