#include "qsync/phasespace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace qsync {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double binomial(int n, int k) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

double beta(double a, double b) {
  return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

double wrap(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0) w += kTwoPi;
  if (w >= kTwoPi) w -= kTwoPi;
  return w;
}

double circular_gap(double a, double b) {
  const double d = std::abs(wrap(a) - wrap(b));
  return std::min(d, kTwoPi - d);
}

}  // namespace

Eigen::VectorXd wigner_d_top(int twice_spin, double theta) {
  const int d = twice_spin + 1;
  Eigen::VectorXd out(d);
  const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
  // index i <-> m = S - i, so S + m = 2S - i and S - m = i.
  for (int i = 0; i < d; ++i)
    out(i) = std::sqrt(binomial(twice_spin, i)) * std::pow(c, twice_spin - i) * std::pow(s, i);
  return out;
}

Vector coherent_state(const AngleTuple& angles, const SpinSpec& spec) {
  if (angles.phis.size() != spec.sites() || angles.thetas.size() != spec.sites())
    throw std::invalid_argument("coherent_state: need one (phi, theta) per site");
  Vector state = Vector::Ones(1);
  for (std::size_t j = 0; j < spec.sites(); ++j) {
    const int ts = spec.twice_spin(j);
    const Eigen::VectorXd dcol = wigner_d_top(ts, angles.thetas[j]);
    Vector local(ts + 1);
    for (int i = 0; i <= ts; ++i) {
      const double m = 0.5 * ts - i;
      local(i) = std::polar(dcol(i), -m * angles.phis[j]);
    }
    Vector next(state.size() * local.size());
    for (Eigen::Index a = 0; a < state.size(); ++a) next.segment(a * local.size(), local.size()) = state(a) * local;
    state = std::move(next);
  }
  return state;
}

double husimi_q(const Operator& rho, const AngleTuple& angles, const SpinSpec& spec) {
  if (rho.rows() != spec.dim() || rho.cols() != spec.dim())
    throw std::invalid_argument("husimi_q: dimension mismatch");
  const Vector coh = coherent_state(angles, spec);
  return coh.dot(rho * coh).real();
}

Eigen::MatrixXd theta_moments(int twice_spin) {
  if (twice_spin <= 0) throw std::invalid_argument("theta_moments: spin must be positive");
  const int d = twice_spin + 1;
  Eigen::MatrixXd c(d, d);
  // sin(theta) dtheta with theta = 2u turns the integrand into
  // 4 cos^(p+1) u sin^(q+1) u on [0, pi/2], i.e. 2 B(p/2 + 1, q/2 + 1).
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const int p = 2 * twice_spin - i - j;
      const int q = i + j;
      c(i, j) = std::sqrt(binomial(twice_spin, i) * binomial(twice_spin, j)) * 2.0 *
                beta(0.5 * p + 1.0, 0.5 * q + 1.0);
    }
  return c;
}

cplx TrigPolynomial::coefficient(const FrequencyKey& k) const {
  const auto it = coeffs_.find(k);
  return it == coeffs_.end() ? cplx(0) : it->second;
}

void TrigPolynomial::add(const FrequencyKey& k, cplx value) {
  if (k.size() != variables_) throw std::invalid_argument("TrigPolynomial: key arity mismatch");
  coeffs_[k] += value;
}

void TrigPolynomial::prune(double tol) {
  std::erase_if(coeffs_, [tol](const auto& kv) { return std::abs(kv.second) <= tol; });
}

double TrigPolynomial::evaluate(std::span<const double> angles) const {
  if (angles.size() != variables_) throw std::invalid_argument("TrigPolynomial: arity mismatch");
  double total = 0.0;
  for (const auto& [k, a] : coeffs_) {
    double phase = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) phase += k[j] * angles[j];
    total += (a * std::polar(1.0, phase)).real();
  }
  return total;
}

Eigen::VectorXd TrigPolynomial::gradient(std::span<const double> angles) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(variables_));
  for (const auto& [k, a] : coeffs_) {
    double phase = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) phase += k[j] * angles[j];
    const cplx term = cplx(0, 1) * a * std::polar(1.0, phase);
    for (std::size_t j = 0; j < k.size(); ++j) g(static_cast<Eigen::Index>(j)) += k[j] * term.real();
  }
  return g;
}

Eigen::MatrixXd TrigPolynomial::hessian(std::span<const double> angles) const {
  const auto n = static_cast<Eigen::Index>(variables_);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [k, a] : coeffs_) {
    double phase = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) phase += k[j] * angles[j];
    const double term = -(a * std::polar(1.0, phase)).real();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) h(i, j) += k[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(j)] * term;
  }
  return h;
}

double TrigPolynomial::integral() const {
  return std::pow(kTwoPi, static_cast<double>(variables_)) *
         coefficient(FrequencyKey(variables_, 0)).real();
}

double TrigPolynomial::reality_defect() const {
  double worst = 0.0;
  for (const auto& [k, a] : coeffs_) {
    FrequencyKey neg(k);
    for (auto& x : neg) x = -x;
    worst = std::max(worst, std::abs(a - std::conj(coefficient(neg))));
  }
  return worst;
}

PhasePolynomial phase_distribution(const Operator& rho, const SpinSpec& spec) {
  const int d = spec.dim();
  if (rho.rows() != d || rho.cols() != d)
    throw std::invalid_argument("phase_distribution: dimension mismatch");
  const std::size_t n = spec.sites();
  std::vector<Eigen::MatrixXd> kernels;
  PhasePolynomial out;
  out.spec = spec;
  out.poly = TrigPolynomial(n);
  out.normalization = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    kernels.push_back(theta_moments(spec.twice_spin(j)));
    out.normalization *= (spec.twice_spin(j) + 1.0) / (2.0 * kTwoPi);
  }
  std::vector<std::vector<int>> digits(static_cast<std::size_t>(d));
  std::vector<std::vector<int>> twice_m(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    digits[static_cast<std::size_t>(i)] = spec.digits(i);
    twice_m[static_cast<std::size_t>(i)] = spec.twice_magnetizations(i);
  }
  FrequencyKey key(n);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) {
      const cplx value = rho(r, c);
      if (value == cplx(0)) continue;
      double weight = out.normalization;
      const auto& dr = digits[static_cast<std::size_t>(r)];
      const auto& dc = digits[static_cast<std::size_t>(c)];
      for (std::size_t j = 0; j < n; ++j) {
        weight *= kernels[j](dr[j], dc[j]);
        key[j] = (twice_m[static_cast<std::size_t>(r)][j] - twice_m[static_cast<std::size_t>(c)][j]) / 2;
      }
      out.poly.add(key, weight * value);
    }
  return out;
}

double ReducedPhaseDistribution::uniform_level() const {
  return std::pow(1.0 / kTwoPi, static_cast<double>(axes()));
}

ReducedPhaseDistribution reduce_over_global_phase(const PhasePolynomial& s) {
  const std::size_t n = s.poly.variables();
  if (n < 2) throw std::invalid_argument("reduce_over_global_phase: need at least two sites");
  ReducedPhaseDistribution out;
  out.sites = n;
  out.poly = TrigPolynomial(n - 1);
  // S(phi' + phi_N, phi_N) = sum_k a_k exp(i k'.phi') exp(i (sum k) phi_N); the
  // phi_N integral keeps sum k = 0 with weight 2 pi.
  for (const auto& [k, a] : s.poly.coefficients()) {
    int total = 0;
    for (int x : k) total += x;
    if (total != 0) continue;
    out.poly.add(FrequencyKey(k.begin(), k.end() - 1), kTwoPi * a);
  }
  return out;
}

double PhaseGrid::spacing() const { return kTwoPi / points; }

std::vector<int> PhaseGrid::cell(std::size_t flat) const {
  std::vector<int> c(axes);
  for (std::size_t a = axes; a-- > 0;) {
    c[a] = static_cast<int>(flat % static_cast<std::size_t>(points));
    flat /= static_cast<std::size_t>(points);
  }
  return c;
}

std::vector<double> PhaseGrid::angles(std::size_t flat) const {
  const auto c = cell(flat);
  std::vector<double> out(axes);
  for (std::size_t a = 0; a < axes; ++a) out[a] = c[a] * spacing();
  return out;
}

PhaseGrid evaluate_on_grid(const ReducedPhaseDistribution& sd, int points) {
  if (points < 4) throw std::invalid_argument("evaluate_on_grid: need at least 4 points per axis");
  PhaseGrid grid;
  grid.axes = sd.axes();
  grid.points = points;
  std::size_t total = 1;
  for (std::size_t a = 0; a < grid.axes; ++a) total *= static_cast<std::size_t>(points);
  grid.values.assign(total, 0.0);
  const double h = grid.spacing();
  for (const auto& [k, coeff] : sd.poly.coefficients()) {
    // Per-axis phase tables make the sum separable.
    std::vector<std::vector<cplx>> tables(grid.axes, std::vector<cplx>(static_cast<std::size_t>(points)));
    for (std::size_t a = 0; a < grid.axes; ++a)
      for (int i = 0; i < points; ++i) tables[a][static_cast<std::size_t>(i)] = std::polar(1.0, k[a] * i * h);
    std::vector<int> idx(grid.axes, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
      cplx term = coeff;
      for (std::size_t a = 0; a < grid.axes; ++a) term *= tables[a][static_cast<std::size_t>(idx[a])];
      grid.values[flat] += term.real();
      for (std::size_t a = grid.axes; a-- > 0;) {
        if (++idx[a] < points) break;
        idx[a] = 0;
      }
    }
  }
  return grid;
}

namespace {

std::vector<std::size_t> neighbours(const PhaseGrid& grid, std::size_t flat) {
  const auto c = grid.cell(flat);
  std::vector<std::size_t> out;
  const auto n = grid.axes;
  std::size_t combos = 1;
  for (std::size_t a = 0; a < n; ++a) combos *= 3;
  for (std::size_t code = 0; code < combos; ++code) {
    std::size_t rem = code, idx = 0;
    bool self = true;
    for (std::size_t a = 0; a < n; ++a) {
      const int off = static_cast<int>(rem % 3) - 1;
      rem /= 3;
      if (off != 0) self = false;
      const int v = (c[a] + off + grid.points) % grid.points;
      idx = idx * static_cast<std::size_t>(grid.points) + static_cast<std::size_t>(v);
    }
    if (!self) out.push_back(idx);
  }
  return out;
}

// Newton ascent on the exact polynomial, steps clamped to one grid cell.
std::vector<double> refine(const TrigPolynomial& p, std::vector<double> x, double h) {
  double fx = p.evaluate(x);
  for (int it = 0; it < 50; ++it) {
    const Eigen::VectorXd g = p.gradient(x);
    const Eigen::MatrixXd hess = p.hessian(x);
    Eigen::VectorXd step;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
    if (es.eigenvalues().maxCoeff() < 0) {
      step = -hess.ldlt().solve(g);
    } else {
      const double gn = g.norm();
      if (gn == 0) break;
      step = 0.25 * h * g / gn;
    }
    if (step.norm() > h) step *= h / step.norm();
    std::vector<double> trial(x);
    for (std::size_t a = 0; a < x.size(); ++a) trial[a] += step(static_cast<Eigen::Index>(a));
    const double ft = p.evaluate(trial);
    if (ft < fx - 1e-15 * std::max(1.0, std::abs(fx))) break;
    x = trial;
    fx = ft;
    if (step.norm() < 1e-14) break;
  }
  for (auto& v : x) v = wrap(v);
  return x;
}

}  // namespace

SyncMeasure sync_measure(const ReducedPhaseDistribution& sd, int points, double tie_tol) {
  const PhaseGrid grid = evaluate_on_grid(sd, points);
  const double u = sd.uniform_level();
  const auto [mn_it, mx_it] = std::minmax_element(grid.values.begin(), grid.values.end());
  const double gmax = *mx_it, gmin = *mn_it;
  SyncMeasure out;
  if (gmax - gmin <= 1e-14 * std::max(1.0, std::abs(gmax))) {
    out.max_value = sd.evaluate(std::vector<double>(grid.axes, 0.0));
    out.s_max = out.max_value - u;
    out.argmax.push_back(std::vector<double>(grid.axes, 0.0));
    return out;
  }
  const double cutoff = gmax - 0.2 * (gmax - gmin);
  struct Cand {
    std::vector<double> x;
    double value;
  };
  std::vector<Cand> cands;
  for (std::size_t flat = 0; flat < grid.values.size(); ++flat) {
    const double v = grid.values[flat];
    if (v < cutoff) continue;
    bool is_max = true;
    for (auto nb : neighbours(grid, flat))
      if (grid.values[nb] > v) {
        is_max = false;
        break;
      }
    if (!is_max) continue;
    auto x = refine(sd.poly, grid.angles(flat), grid.spacing());
    const double fx = sd.evaluate(x);
    cands.push_back({std::move(x), std::max(fx, v)});
  }
  double best = gmax;
  for (const auto& c : cands) best = std::max(best, c.value);
  out.max_value = best;
  out.s_max = best - u;
  std::vector<std::vector<double>> pts;
  for (const auto& c : cands) {
    if (c.value < best - tie_tol) continue;
    bool dup = false;
    for (const auto& p : pts) {
      double gap = 0.0;
      for (std::size_t a = 0; a < p.size(); ++a) gap = std::max(gap, circular_gap(p[a], c.x[a]));
      if (gap < 1e-6) {
        dup = true;
        break;
      }
    }
    if (!dup) pts.push_back(c.x);
  }
  std::sort(pts.begin(), pts.end());
  out.argmax = std::move(pts);
  return out;
}

double ThresholdRegion::spacing() const { return kTwoPi / points; }

ThresholdRegion threshold_region(const ReducedPhaseDistribution& sd, const PhaseGrid& grid, double r) {
  if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("threshold_region: r must lie in (0, 1]");
  ThresholdRegion out;
  out.axes = grid.axes;
  out.points = grid.points;
  const double u = sd.uniform_level();
  const double gmax = *std::max_element(grid.values.begin(), grid.values.end());
  const bool flat = gmax - u <= 1e-14 * std::max(1.0, std::abs(gmax));
  const double thr = u + r * (gmax - u);
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    if (flat || grid.values[i] >= thr - 1e-15 * std::abs(gmax)) {
      out.cells.push_back(i);
      out.weights.push_back(grid.values[i]);
    }
  }
  return out;
}

ThresholdRegion threshold_region(const ReducedPhaseDistribution& sd, double r, int points) {
  return threshold_region(sd, evaluate_on_grid(sd, points), r);
}

void write_sd_csv(std::ostream& out, const PhaseGrid& grid) {
  out << "# grid=" << grid.points << " axes=" << grid.axes
      << " normalization=S integrates to 1 over the N-torus; S_d integrates to 1 over the "
         "(N-1)-torus; uniform level (1/2pi)^(N-1)\n";
  if (grid.axes == 1)
    out << "phi1p,value\n";
  else if (grid.axes == 2)
    out << "phi1p,phi2p,value\n";
  else
    throw std::invalid_argument("write_sd_csv: only 1 or 2 axes are exported");
  out.precision(17);
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    for (double a : grid.angles(i)) out << a << ',';
    out << grid.values[i] << '\n';
  }
}

}  // namespace qsync
