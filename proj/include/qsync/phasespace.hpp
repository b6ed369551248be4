#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qsync/operators.hpp"

namespace qsync {

/// In-plane angles phi_j and polar angles theta_j, one per site.
struct AngleTuple {
  std::vector<double> phis;
  std::vector<double> thetas;
};

/// Product spin coherent state, prod_j exp(-i phi_j S^z) exp(-i theta_j S^y) |S>.
Vector coherent_state(const AngleTuple& angles, const SpinSpec& spec);

/// Wigner small-d column d^S_{m,S}(theta) in the magnetization-descending basis.
Eigen::VectorXd wigner_d_top(int twice_spin, double theta);

/// <coh|rho|coh>.
double husimi_q(const Operator& rho, const AngleTuple& angles, const SpinSpec& spec);

/// C_{mm'} = int_0^pi sin(theta) d_{m,S} d_{m',S} dtheta, closed form via Beta
/// functions. Index order follows the site basis (m = S first).
Eigen::MatrixXd theta_moments(int twice_spin);

using FrequencyKey = std::vector<int>;

/// A real function on the N-torus stored as sum_k a_k exp(i k . phi).
class TrigPolynomial {
 public:
  TrigPolynomial() = default;
  explicit TrigPolynomial(std::size_t variables) : variables_(variables) {}

  std::size_t variables() const { return variables_; }
  const std::map<FrequencyKey, cplx>& coefficients() const { return coeffs_; }
  cplx coefficient(const FrequencyKey& k) const;
  void add(const FrequencyKey& k, cplx value);
  /// Drops coefficients with modulus <= tol.
  void prune(double tol);

  double evaluate(std::span<const double> angles) const;
  Eigen::VectorXd gradient(std::span<const double> angles) const;
  Eigen::MatrixXd hessian(std::span<const double> angles) const;
  /// Integral over [0, 2pi)^N.
  double integral() const;
  /// max_k |a_k - conj(a_{-k})|.
  double reality_defect() const;

 private:
  std::size_t variables_ = 0;
  std::map<FrequencyKey, cplx> coeffs_;
};

/// S(phi), the Husimi-Q distribution integrated over all theta_j with weight
/// sin(theta_j), times prod_j (2S_j+1)/(4 pi) so that it integrates to one.
struct PhasePolynomial {
  SpinSpec spec;
  double normalization = 1.0;
  TrigPolynomial poly;  ///< already includes the normalization

  double evaluate(std::span<const double> phis) const { return poly.evaluate(phis); }
};

PhasePolynomial phase_distribution(const Operator& rho, const SpinSpec& spec);

/// S_d over the differences phi'_j = phi_j - phi_N, j < N.
struct ReducedPhaseDistribution {
  std::size_t sites = 0;
  TrigPolynomial poly;  ///< in N - 1 variables

  std::size_t axes() const { return poly.variables(); }
  /// (1/2pi)^(N-1).
  double uniform_level() const;
  double evaluate(std::span<const double> phis) const { return poly.evaluate(phis); }
};

ReducedPhaseDistribution reduce_over_global_phase(const PhasePolynomial& s);

/// Regular grid phi = 2 pi i / points on every axis, row-major (last axis fastest).
struct PhaseGrid {
  std::size_t axes = 0;
  int points = 0;
  std::vector<double> values;

  double spacing() const;
  std::vector<int> cell(std::size_t flat) const;
  std::vector<double> angles(std::size_t flat) const;
};

PhaseGrid evaluate_on_grid(const ReducedPhaseDistribution& sd, int points);

struct SyncMeasure {
  double s_max = 0.0;      ///< max S_d - (1/2pi)^(N-1)
  double max_value = 0.0;  ///< max S_d
  std::vector<std::vector<double>> argmax;  ///< angles in [0, 2pi), sorted
};

/// Dense-grid maximization followed by Newton refinement of every grid-local
/// maximum on the exact polynomial. argmax holds every refined maximum within
/// `tie_tol` of the best one.
SyncMeasure sync_measure(const ReducedPhaseDistribution& sd, int points = 256, double tie_tol = 1e-9);

/// Grid cells where the calibrated distribution reaches a fraction r of its
/// maximum: S_d - u >= r (max S_d - u), u the uniform level. A flat S_d gives
/// the full torus.
struct ThresholdRegion {
  std::size_t axes = 0;
  int points = 0;
  std::vector<std::size_t> cells;  ///< flat grid indices
  std::vector<double> weights;     ///< S_d at each cell

  double spacing() const;
};

ThresholdRegion threshold_region(const ReducedPhaseDistribution& sd, double r, int points = 256);
ThresholdRegion threshold_region(const ReducedPhaseDistribution& sd, const PhaseGrid& grid, double r);

/// (phi1p, phi2p, value) or (phi1p, value); header comments record grid and
/// normalization convention.
void write_sd_csv(std::ostream& out, const PhaseGrid& grid);

}  // namespace qsync
