#include "qsync/operators.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qsync {

SpinSpec::SpinSpec(std::vector<int> twice_spins)
    : twice_spins_(std::move(twice_spins)) {
  if (twice_spins_.empty()) throw std::invalid_argument("SpinSpec: no sites");
  dim_ = 1;
  for (int ts : twice_spins_) {
    if (ts <= 0) throw std::invalid_argument("SpinSpec: spin must be positive");
    dim_ *= ts + 1;
  }
}

SpinSpec SpinSpec::from_spins(const std::vector<double>& spins) {
  std::vector<int> ts;
  ts.reserve(spins.size());
  for (double s : spins) {
    const double twice = 2.0 * s;
    const double rounded = std::round(twice);
    if (std::abs(twice - rounded) > 1e-12 || rounded < 1)
      throw std::invalid_argument("SpinSpec: spin " + std::to_string(s) +
                                  " is not a positive half-integer");
    ts.push_back(static_cast<int>(rounded));
  }
  return SpinSpec(std::move(ts));
}

SpinSpec SpinSpec::uniform(std::size_t sites, double spin) {
  return from_spins(std::vector<double>(sites, spin));
}

std::vector<int> SpinSpec::digits(int index) const {
  if (index < 0 || index >= dim_) throw std::out_of_range("SpinSpec::digits");
  std::vector<int> d(sites());
  for (std::size_t j = sites(); j-- > 0;) {
    d[j] = index % local_dim(j);
    index /= local_dim(j);
  }
  return d;
}

int SpinSpec::index(const std::vector<int>& digits) const {
  if (digits.size() != sites()) throw std::invalid_argument("SpinSpec::index");
  int idx = 0;
  for (std::size_t j = 0; j < sites(); ++j) {
    if (digits[j] < 0 || digits[j] >= local_dim(j))
      throw std::out_of_range("SpinSpec::index");
    idx = idx * local_dim(j) + digits[j];
  }
  return idx;
}

std::vector<int> SpinSpec::twice_magnetizations(int index) const {
  auto d = digits(index);
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = twice_spins_[j] - 2 * d[j];
  return d;
}

SpinOperators spin_operators(int twice_spin) {
  if (twice_spin <= 0) throw std::invalid_argument("spin_operators: S must be > 0");
  const int d = twice_spin + 1;
  const double s = 0.5 * twice_spin;
  SpinOperators ops;
  ops.z = Operator::Zero(d, d);
  ops.plus = Operator::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const double m = s - i;
    ops.z(i, i) = m;
    // S+ |m> = sqrt(S(S+1) - m(m+1)) |m+1>, and |m+1> sits at index i-1.
    if (i > 0) ops.plus(i - 1, i) = std::sqrt(s * (s + 1) - m * (m + 1));
  }
  ops.minus = ops.plus.adjoint();
  ops.x = 0.5 * (ops.plus + ops.minus);
  ops.y = cplx(0, -0.5) * (ops.plus - ops.minus);
  return ops;
}

SpinOperators spin_operators(double spin) {
  const double twice = 2.0 * spin;
  if (std::abs(twice - std::round(twice)) > 1e-12)
    throw std::invalid_argument("spin_operators: S must be a half-integer");
  return spin_operators(static_cast<int>(std::round(twice)));
}

Operator identity(int dim) { return Operator::Identity(dim, dim); }

Operator kron(const Operator& a, const Operator& b) {
  Operator out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Operator embed(const Operator& op, const SpinSpec& spec, std::size_t site) {
  if (site >= spec.sites()) throw std::out_of_range("embed: site index out of range");
  if (op.rows() != spec.local_dim(site) || op.cols() != spec.local_dim(site))
    throw std::invalid_argument("embed: operator dimension does not match site");
  int before = 1, after = 1;
  for (std::size_t j = 0; j < site; ++j) before *= spec.local_dim(j);
  for (std::size_t j = site + 1; j < spec.sites(); ++j) after *= spec.local_dim(j);
  return kron(kron(identity(before), op), identity(after));
}

double hermiticity_defect(const Operator& op) {
  return (op - op.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const Operator& op, double tol) {
  return op.rows() == op.cols() && hermiticity_defect(op) <= tol;
}

Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

Vector vectorize(const Operator& op) {
  return Eigen::Map<const Vector>(op.data(), op.size());
}

Operator devectorize(const Vector& v) {
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (d * d != v.size())
    throw std::invalid_argument("devectorize: length is not a perfect square");
  return Eigen::Map<const Operator>(v.data(), d, d);
}

Superoperator::Superoperator(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols())
    throw std::invalid_argument("Superoperator: matrix must be square");
  const auto d = static_cast<int>(std::llround(std::sqrt(static_cast<double>(m_.rows()))));
  if (static_cast<Eigen::Index>(d) * d != m_.rows())
    throw std::invalid_argument("Superoperator: size is not D^2");
  hilbert_dim_ = d;
}

Superoperator Superoperator::zero(int hilbert_dim) {
  const int n = hilbert_dim * hilbert_dim;
  return Superoperator(Matrix::Zero(n, n));
}

Operator Superoperator::apply(const Operator& x) const {
  if (x.rows() != hilbert_dim_ || x.cols() != hilbert_dim_)
    throw std::invalid_argument("Superoperator::apply: dimension mismatch");
  return devectorize(m_ * vectorize(x));
}

Superoperator& Superoperator::operator+=(const Superoperator& o) {
  if (o.hilbert_dim_ != hilbert_dim_)
    throw std::invalid_argument("Superoperator: dimension mismatch");
  m_ += o.m_;
  return *this;
}

Superoperator sandwich(const Operator& left, const Operator& right) {
  return Superoperator(kron(right.transpose(), left));
}

}  // namespace qsync
