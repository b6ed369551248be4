#include "qsync/liouvillian.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

namespace qsync {

void LindbladModel::validate() const {
  const int d = spec.dim();
  if (hamiltonian.rows() != d || hamiltonian.cols() != d)
    throw std::invalid_argument("LindbladModel: Hamiltonian dimension mismatch");
  if (hermiticity_defect(hamiltonian) > 1e-12)
    throw std::invalid_argument("LindbladModel: Hamiltonian is not Hermitian");
  for (const auto& l : jumps)
    if (l.rows() != d || l.cols() != d)
      throw std::invalid_argument("LindbladModel: jump operator dimension mismatch");
}

Superoperator hamiltonian_superoperator(const Operator& hamiltonian) {
  const auto d = static_cast<int>(hamiltonian.rows());
  const Operator id = identity(d);
  return Superoperator(cplx(0, -1) * (kron(id, hamiltonian) - kron(hamiltonian.transpose(), id)));
}

Superoperator dissipator_superoperator(const Operator& jump) {
  const auto d = static_cast<int>(jump.rows());
  const Operator id = identity(d);
  const Operator ldl = jump.adjoint() * jump;
  return Superoperator(kron(jump.conjugate(), jump) - 0.5 * kron(id, ldl) -
                       0.5 * kron(ldl.transpose(), id));
}

Superoperator build_superoperator(const LindbladModel& model) {
  model.validate();
  Superoperator L = hamiltonian_superoperator(model.hamiltonian);
  for (const auto& jump : model.jumps) L += dissipator_superoperator(jump);
  return L;
}

double trace_preservation_defect(const Superoperator& L) {
  const int d = L.hilbert_dim();
  Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(L.matrix().cols());
  for (int i = 0; i < d; ++i) row += L.matrix().row(i + d * i);
  return row.cwiseAbs().maxCoeff();
}

namespace {

double frobenius(const Operator& x) { return x.norm(); }

// Hermitian D x D matrices as real vectors [Re vec; Im vec]; the Euclidean
// inner product matches the Frobenius one.
Eigen::VectorXd to_real(const Operator& h) {
  const Vector v = vectorize(h);
  Eigen::VectorXd out(2 * v.size());
  out.head(v.size()) = v.real();
  out.tail(v.size()) = v.imag();
  return out;
}

Operator from_real(const Eigen::VectorXd& r) {
  const auto n = r.size() / 2;
  Vector v(n);
  v.real() = r.head(n);
  v.imag() = r.tail(n);
  Operator h = devectorize(v);
  return 0.5 * (h + h.adjoint());
}

Matrix stack(const std::vector<Operator>& ops) {
  Matrix m(ops.front().size(), static_cast<Eigen::Index>(ops.size()));
  for (std::size_t k = 0; k < ops.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = vectorize(ops[k]);
  return m;
}

// Orthonormal basis of the column span, rank decided by a relative threshold.
Eigen::MatrixXd real_orthonormal_span(const Eigen::MatrixXd& m, Eigen::Index max_rank) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  const double smax = s.size() ? s(0) : 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-8 * smax) ++rank;
  rank = std::min(rank, max_rank);
  return svd.matrixU().leftCols(rank);
}

double trace_of_real(const Eigen::VectorXd& r, int d) {
  double t = 0.0;
  for (int i = 0; i < d; ++i) t += r(i + d * i);
  return t;
}

}  // namespace

SpectralDecomposition full_spectrum(const Superoperator& L, const SpectrumOptions& opts) {
  const int d = L.hilbert_dim();
  if (d > opts.max_hilbert_dim)
    throw std::invalid_argument("full_spectrum: Hilbert dimension " + std::to_string(d) +
                                " exceeds configured maximum " +
                                std::to_string(opts.max_hilbert_dim));
  const auto n = static_cast<lapack_int>(L.matrix().rows());
  Matrix a = L.matrix();
  Vector w(n);
  Matrix vl(n, n), vr(n, n);
  const lapack_int info = LAPACKE_zgeev(
      LAPACK_COL_MAJOR, 'V', 'V', n, reinterpret_cast<lapack_complex_double*>(a.data()), n,
      reinterpret_cast<lapack_complex_double*>(w.data()),
      reinterpret_cast<lapack_complex_double*>(vl.data()), n,
      reinterpret_cast<lapack_complex_double*>(vr.data()), n);
  if (info != 0) {
    Eigen::BDCSVD<Matrix> svd(L.matrix());
    const auto& s = svd.singularValues();
    std::ostringstream msg;
    msg << "full_spectrum: zgeev failed (info=" << info << "), ||L||_F=" << L.matrix().norm()
        << ", sigma_max=" << s(0) << ", sigma_min=" << s(s.size() - 1);
    throw EigensolverError(msg.str());
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    if (w(i).real() != w(j).real()) return w(i).real() > w(j).real();
    return w(i).imag() < w(j).imag();
  });

  SpectralDecomposition dec;
  dec.norm = L.matrix().norm();
  dec.eigenvalues.resize(n);
  dec.max_real_part = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    const cplx lambda = w(src);
    Vector r = vr.col(src);
    r /= r.norm();
    Vector l = vl.col(src);
    const cplx overlap = l.dot(r);  // l^H r
    if (std::abs(overlap) > 0) l /= std::conj(overlap);
    dec.eigenvalues(k) = lambda;
    Operator right = devectorize(r);
    dec.residuals.push_back(residual(L, right, lambda));
    dec.right_modes.push_back(std::move(right));
    dec.left_modes.push_back(devectorize(l));
    dec.max_real_part = std::max(dec.max_real_part, lambda.real());
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    double best = std::numeric_limits<double>::infinity();
    const cplx target = std::conj(dec.eigenvalues(k));
    for (Eigen::Index j = 0; j < n; ++j) best = std::min(best, std::abs(dec.eigenvalues(j) - target));
    dec.conjugation_defect = std::max(dec.conjugation_defect, best);
  }
  return dec;
}

std::vector<Operator> ModeClassification::zero_modes() const {
  std::vector<Operator> out(steady);
  out.insert(out.end(), traceless_zero.begin(), traceless_zero.end());
  return out;
}

ModeClassification classify_decay_free(const SpectralDecomposition& dec) {
  const double tol = 1e-9 * dec.norm;
  return classify_decay_free(dec, tol, tol);
}

ModeClassification classify_decay_free(const SpectralDecomposition& dec, double tol_real,
                                       double tol_imag) {
  if (!(tol_real > 0) || !(tol_imag > 0))
    throw std::invalid_argument("classify_decay_free: tolerances must be positive");
  ModeClassification out;
  out.tol_real = tol_real;
  out.tol_imag = tol_imag;

  std::vector<Operator> zero_right, zero_leftv;
  for (Eigen::Index k = 0; k < dec.eigenvalues.size(); ++k) {
    const cplx lambda = dec.eigenvalues(k);
    const auto ks = static_cast<std::size_t>(k);
    if (std::abs(lambda.real()) > tol_real) {
      ++out.decaying;
    } else if (std::abs(lambda.imag()) <= tol_imag) {
      zero_right.push_back(dec.right_modes[ks]);
      zero_leftv.push_back(dec.left_modes[ks]);
    } else {
      out.oscillating.push_back({dec.right_modes[ks], lambda, lambda.imag()});
    }
  }
  if (zero_right.empty())
    throw std::runtime_error("classify_decay_free: no zero eigenvalue within tolerance");

  const auto z = static_cast<Eigen::Index>(zero_right.size());
  const int d = static_cast<int>(zero_right.front().rows());

  // Pair the left and right zero eigenspaces.
  const Matrix r0 = stack(zero_right);
  const Matrix y0 = stack(zero_leftv);
  Eigen::JacobiSVD<Matrix> rsvd(r0, Eigen::ComputeThinU);
  Eigen::JacobiSVD<Matrix> ysvd(y0, Eigen::ComputeThinU);
  const double rcond = rsvd.singularValues()(z - 1) / rsvd.singularValues()(0);
  const double ycond = ysvd.singularValues()(z - 1) / ysvd.singularValues()(0);
  const Matrix R = rsvd.matrixU();
  const Matrix Y = ysvd.matrixU();
  Eigen::JacobiSVD<Matrix> gsvd(Y.adjoint() * R);
  const double gmin = gsvd.singularValues()(z - 1);
  if (rcond < 1e-8 || ycond < 1e-8 || gmin < 1e-6) {
    std::ostringstream msg;
    msg << "classify_decay_free: zero cluster of size " << z
        << " is defective (right cond " << rcond << ", left cond " << ycond
        << ", min left/right overlap " << gmin << ")";
    throw DefectiveZeroClusterError(msg.str());
  }

  // Hermitian orthonormal basis of the zero space.
  Eigen::MatrixXd herm_parts(2 * R.rows(), 2 * z);
  for (Eigen::Index k = 0; k < z; ++k) {
    const Operator x = devectorize(R.col(k));
    herm_parts.col(2 * k) = to_real(0.5 * (x + x.adjoint()));
    herm_parts.col(2 * k + 1) = to_real(cplx(0, -0.5) * (x - x.adjoint()));
  }
  const Eigen::MatrixXd herm_basis = real_orthonormal_span(herm_parts, z);

  auto in_zero_space = [&](const Operator& c) {
    const Vector v = vectorize(c);
    return (v - R * (R.adjoint() * v)).norm() <= 1e-6 * v.norm();
  };

  // Two fixed generic elements of the zero space.
  std::mt19937_64 rng(0x5eed5eedULL);
  std::uniform_real_distribution<double> coef(0.5, 1.5);
  Eigen::VectorXd c1(herm_basis.cols()), c2(herm_basis.cols());
  for (Eigen::Index i = 0; i < c1.size(); ++i) c1(i) = coef(rng);
  for (Eigen::Index i = 0; i < c2.size(); ++i) c2(i) = coef(rng);
  const Operator x1 = from_real(herm_basis * c1);
  const Operator x2 = from_real(herm_basis * c2);

  Eigen::SelfAdjointEigenSolver<Matrix> es(x1);
  const Eigen::VectorXd lam = es.eigenvalues();
  const double scale = lam.cwiseAbs().maxCoeff();
  struct Entry {
    double lambda, ratio;
    Eigen::Index idx;
  };
  std::vector<Entry> entries;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (std::abs(lam(i)) <= 1e-9 * scale) continue;
    const Vector psi = es.eigenvectors().col(i);
    const double proj = psi.dot(x2 * psi).real();
    entries.push_back({lam(i), proj / lam(i), i});
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.ratio < b.ratio; });
  for (std::size_t start = 0; start < entries.size();) {
    std::size_t end = start + 1;
    while (end < entries.size() &&
           std::abs(entries[end].ratio - entries[start].ratio) <=
               1e-6 * std::max(1.0, std::abs(entries[start].ratio)))
      ++end;
    Operator c = Operator::Zero(d, d);
    for (std::size_t k = start; k < end; ++k) {
      const Vector psi = es.eigenvectors().col(entries[k].idx);
      c += entries[k].lambda * psi * psi.adjoint();
    }
    const cplx tr = c.trace();
    if (std::abs(tr) > 1e-9 * scale && in_zero_space(c)) out.steady.push_back(c / tr.real());
    start = end;
  }

  // Fallback: a single steady direction carrying the trace.
  if (out.steady.empty()) {
    Eigen::VectorXd t(herm_basis.cols());
    for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = trace_of_real(herm_basis.col(i), d);
    const Operator s = from_real(herm_basis * t);
    out.steady.push_back(s / s.trace().real());
  }
  std::sort(out.steady.begin(), out.steady.end(), [](const Operator& a, const Operator& b) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double da = a(i, i).real(), db = b(i, i).real();
      if (std::abs(da - db) > 1e-9) return da > db;
    }
    return false;
  });

  // Traceless complement of the steady span inside the zero space.
  const auto s_count = static_cast<Eigen::Index>(out.steady.size());
  if (s_count < herm_basis.cols()) {
    Eigen::VectorXd t(herm_basis.cols());
    for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = trace_of_real(herm_basis.col(i), d);
    // Traceless part of the zero space: coefficient vectors orthogonal to t.
    Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(t.size(), t.size()) - t * t.transpose() / t.squaredNorm();
    Eigen::MatrixXd traceless = real_orthonormal_span(herm_basis * proj, herm_basis.cols() - 1);
    if (s_count > 1) {
      Eigen::MatrixXd diffs(traceless.rows(), s_count - 1);
      const Eigen::VectorXd first = to_real(out.steady.front());
      for (Eigen::Index k = 1; k < s_count; ++k)
        diffs.col(k - 1) = to_real(out.steady[static_cast<std::size_t>(k)]) - first;
      const Eigen::MatrixXd q = real_orthonormal_span(diffs, s_count - 1);
      traceless -= q * (q.transpose() * traceless);
    }
    const Eigen::MatrixXd rest = real_orthonormal_span(traceless, herm_basis.cols() - s_count);
    for (Eigen::Index k = 0; k < rest.cols(); ++k) out.traceless_zero.push_back(from_real(rest.col(k)));
  }

  // Biorthogonal left partners for steady + traceless modes.
  const Matrix B = stack(out.zero_modes());
  const Matrix yb = Y.adjoint() * B;
  const Matrix partner = Y * yb.inverse().adjoint();
  for (Eigen::Index k = 0; k < partner.cols(); ++k) out.zero_left.push_back(devectorize(partner.col(k)));
  return out;
}

SteadyState steady_state(const Superoperator& L, const SteadyStateOptions& opts) {
  const int d = L.hilbert_dim();
  const Matrix& m = L.matrix();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (trace_preservation_defect(L) > 1e-10 * scale)
    throw std::invalid_argument("steady_state: generator is not trace preserving");

  SteadyState out;
  if (opts.check_multiplicity) {
    Eigen::BDCSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    int mult = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) <= opts.null_threshold * s(0)) ++mult;
    out.multiplicity = std::max(mult, 1);
    if (mult > 1) {
      Eigen::BDCSVD<Matrix> full(m, Eigen::ComputeFullV);
      const Matrix null = full.matrixV().rightCols(mult);
      for (Eigen::Index k = 0; k < null.cols(); ++k) out.null_basis.push_back(devectorize(null.col(k)));
      const Vector id = vectorize(identity(d));
      Operator rho = devectorize(null * (null.adjoint() * id));
      out.hermitian_defect = hermiticity_defect(rho);
      rho = 0.5 * (rho + rho.adjoint());
      out.rho = rho / rho.trace().real();
      out.residual = L.apply(out.rho).norm();
      out.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Matrix>(out.rho).eigenvalues()(0);
      out.warnings.push_back("multiplicity " + std::to_string(mult) +
                             ": bordered solve refused, null basis returned");
      return out;
    }
  }

  const auto n = m.rows();
  Matrix a = m;
  a.row(0).setZero();
  for (int i = 0; i < d; ++i) a(0, i + d * i) = 1.0;
  Eigen::PartialPivLU<Matrix> lu(a);
  Vector b = Vector::Zero(n);
  b(0) = 1.0;
  Vector x = lu.solve(b);

  // Refinement with the residual accumulated in extended precision.
  using cld = std::complex<long double>;
  std::vector<cld> xl(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) xl[static_cast<std::size_t>(i)] = cld(x(i).real(), x(i).imag());
  for (int step = 0; step < opts.refinement_steps; ++step) {
    std::vector<cld> acc(static_cast<std::size_t>(n), cld(0));
    acc[0] = cld(1);
    for (Eigen::Index j = 0; j < n; ++j) {
      const cld xj = xl[static_cast<std::size_t>(j)];
      for (Eigen::Index i = 0; i < n; ++i) {
        const cplx aij = a(i, j);
        acc[static_cast<std::size_t>(i)] -= cld(aij.real(), aij.imag()) * xj;
      }
    }
    Vector r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& v = acc[static_cast<std::size_t>(i)];
      r(i) = cplx(static_cast<double>(v.real()), static_cast<double>(v.imag()));
    }
    const Vector dx = lu.solve(r);
    for (Eigen::Index i = 0; i < n; ++i)
      xl[static_cast<std::size_t>(i)] += cld(dx(i).real(), dx(i).imag());
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& v = xl[static_cast<std::size_t>(i)];
    x(i) = cplx(static_cast<double>(v.real()), static_cast<double>(v.imag()));
  }

  Operator rho = devectorize(x);
  out.hermitian_defect = hermiticity_defect(rho);
  rho = 0.5 * (rho + rho.adjoint());
  rho /= rho.trace().real();
  out.rho = rho;
  out.residual = L.apply(rho).norm();
  out.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Matrix>(rho).eigenvalues()(0);
  if (out.min_eigenvalue < -opts.negativity_warning) {
    std::ostringstream msg;
    msg << "steady state has negative eigenvalue " << out.min_eigenvalue;
    out.warnings.push_back(msg.str());
  }
  return out;
}

PerturbativeResult perturbative_coefficients(std::span<const Operator> right,
                                             std::span<const Operator> left,
                                             const Superoperator& L1, double null_threshold) {
  if (right.empty() || right.size() != left.size())
    throw std::invalid_argument("perturbative_coefficients: need matching right/left bases");
  const auto k = static_cast<Eigen::Index>(right.size());
  PerturbativeResult out;
  out.effective_generator.resize(k, k);
  for (Eigen::Index b = 0; b < k; ++b) {
    const Vector lr = L1.matrix() * vectorize(right[static_cast<std::size_t>(b)]);
    for (Eigen::Index a = 0; a < k; ++a)
      out.effective_generator(a, b) = vectorize(left[static_cast<std::size_t>(a)]).dot(lr);
  }
  Eigen::JacobiSVD<Matrix> svd(out.effective_generator, Eigen::ComputeFullV);
  out.singular_values = svd.singularValues().cast<cplx>();
  const auto& s = svd.singularValues();
  int null_dim = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) <= null_threshold * std::max(s(0), 1e-300)) ++null_dim;
  if (k == 1) null_dim = 1;
  if (null_dim != 1) {
    std::ostringstream msg;
    msg << "perturbative_coefficients: effective generator null space has dimension " << null_dim
        << " (singular values:";
    for (Eigen::Index i = 0; i < s.size(); ++i) msg << ' ' << s(i);
    msg << ')';
    throw DegenerateEffectiveGeneratorError(msg.str());
  }
  Vector c = svd.matrixV().col(k - 1);
  cplx norm = 0;
  for (Eigen::Index a = 0; a < k; ++a) norm += c(a) * right[static_cast<std::size_t>(a)].trace();
  c /= norm;
  out.coefficients = c;
  out.rho = Operator::Zero(right.front().rows(), right.front().cols());
  for (Eigen::Index a = 0; a < k; ++a) out.rho += c(a) * right[static_cast<std::size_t>(a)];
  return out;
}

PerturbativeResult perturbative_coefficients(const ModeClassification& modes,
                                             const Superoperator& L1, double null_threshold) {
  const auto right = modes.zero_modes();
  return perturbative_coefficients(right, modes.zero_left, L1, null_threshold);
}

std::vector<Operator> evolve(const Superoperator& L, const Operator& rho0,
                             std::span<const double> times) {
  if (rho0.rows() != L.hilbert_dim() || rho0.cols() != L.hilbert_dim())
    throw std::invalid_argument("evolve: dimension mismatch");
  std::vector<Operator> out;
  out.reserve(times.size());
  Vector state = vectorize(rho0);
  double t_prev = 0.0;
  double dt_cached = -1.0;
  Matrix prop;
  for (double t : times) {
    if (t < t_prev) throw std::invalid_argument("evolve: times must be non-decreasing and >= 0");
    const double dt = t - t_prev;
    if (dt > 0) {
      if (dt != dt_cached) {
        prop = (L.matrix() * dt).exp();
        dt_cached = dt;
        if (!prop.allFinite()) {
          std::ostringstream msg;
          msg << "evolve: propagator overflow at dt=" << dt << " (||L||_F=" << L.matrix().norm() << ")";
          throw std::overflow_error(msg.str());
        }
      }
      state = prop * state;
    }
    out.push_back(devectorize(state));
    t_prev = t;
  }
  return out;
}

std::vector<Operator> evolve(const LindbladModel& model, const Operator& rho0,
                             std::span<const double> times) {
  return evolve(build_superoperator(model), rho0, times);
}

double residual(const Superoperator& L, const Operator& rho, cplx lambda) {
  const Operator r = L.apply(rho) - lambda * rho;
  return frobenius(r) / std::max(frobenius(rho), std::numeric_limits<double>::epsilon());
}

double trace_distance(const Operator& a, const Operator& b) {
  Operator diff = a - b;
  diff = 0.5 * (diff + diff.adjoint());
  return 0.5 * Eigen::SelfAdjointEigenSolver<Matrix>(diff).eigenvalues().cwiseAbs().sum();
}

void write_spectrum_csv(std::ostream& out, const SpectralDecomposition& dec, double tol_real,
                        double tol_imag) {
  out << "re_lambda,im_lambda,class,residual\n";
  out.precision(17);
  for (Eigen::Index k = 0; k < dec.eigenvalues.size(); ++k) {
    const cplx lambda = dec.eigenvalues(k);
    const char* cls = "decaying";
    if (std::abs(lambda.real()) <= tol_real)
      cls = std::abs(lambda.imag()) <= tol_imag ? "zero" : "oscillating";
    out << lambda.real() << ',' << lambda.imag() << ',' << cls << ','
        << dec.residuals[static_cast<std::size_t>(k)] << '\n';
  }
}

}  // namespace qsync
