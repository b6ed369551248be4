#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <vector>

namespace qsync {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Dense operator on a spin Hilbert space (H, L_mu, rho, projectors, ...).
using Operator = Eigen::MatrixXcd;

/// Ordered list of spin magnitudes. Each magnitude is stored as 2S so that
/// half-integers are exact.
///
/// Basis ordering: site 0 is the slowest index; within a site the
/// magnetization descends, |S>, |S-1>, ..., |-S>.
class SpinSpec {
 public:
  SpinSpec() = default;
  explicit SpinSpec(std::vector<int> twice_spins);

  /// Builds from spin magnitudes; throws on non-half-integer or S <= 0.
  static SpinSpec from_spins(const std::vector<double>& spins);
  static SpinSpec uniform(std::size_t sites, double spin);

  std::size_t sites() const { return twice_spins_.size(); }
  int twice_spin(std::size_t j) const { return twice_spins_.at(j); }
  double spin(std::size_t j) const { return 0.5 * twice_spins_.at(j); }
  int local_dim(std::size_t j) const { return twice_spins_.at(j) + 1; }
  int dim() const { return dim_; }
  const std::vector<int>& twice_spins() const { return twice_spins_; }

  /// Local basis indices of a global basis index (site 0 first).
  std::vector<int> digits(int index) const;
  int index(const std::vector<int>& digits) const;
  /// 2m for every site of a global basis index.
  std::vector<int> twice_magnetizations(int index) const;

  bool operator==(const SpinSpec&) const = default;

 private:
  std::vector<int> twice_spins_;
  int dim_ = 1;
};

struct SpinOperators {
  Operator z, plus, minus, x, y;
};

/// Standard spin matrices for magnitude S = twice_spin/2 in the
/// magnetization-descending basis.
SpinOperators spin_operators(int twice_spin);
SpinOperators spin_operators(double spin);

Operator identity(int dim);
Operator kron(const Operator& a, const Operator& b);

/// identity x ... x op (site j) x ... x identity.
Operator embed(const Operator& op, const SpinSpec& spec, std::size_t site);

bool is_hermitian(const Operator& op, double tol = 1e-12);
double hermiticity_defect(const Operator& op);
Operator commutator(const Operator& a, const Operator& b);

/// Column stacking: vec(X)[i + D*j] = X(i, j), hence
/// vec(A X B) = (B^T kron A) vec(X).
Vector vectorize(const Operator& op);
Operator devectorize(const Vector& v);

/// Linear map on column-stacked operators of a D-dimensional space.
class Superoperator {
 public:
  Superoperator() = default;
  explicit Superoperator(Matrix m);
  static Superoperator zero(int hilbert_dim);

  int hilbert_dim() const { return hilbert_dim_; }
  const Matrix& matrix() const { return m_; }
  Matrix& matrix() { return m_; }

  Operator apply(const Operator& x) const;

  Superoperator& operator+=(const Superoperator& o);
  friend Superoperator operator+(Superoperator a, const Superoperator& b) {
    a += b;
    return a;
  }
  friend Superoperator operator*(double s, Superoperator a) {
    a.m_ *= s;
    return a;
  }

 private:
  Matrix m_;
  int hilbert_dim_ = 0;
};

/// X -> A X B.
Superoperator sandwich(const Operator& left, const Operator& right);

}  // namespace qsync
