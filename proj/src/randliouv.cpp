#include "qsync/randliouv.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstring>
#include <ostream>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

#include "json.hpp"
#include "qsync/liouvillian.hpp"

namespace qsync {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

Matrix complex_gaussian(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      m(i, j) = cplx(re, im);
    }
  return m;
}

}  // namespace

Operator gue_hamiltonian(int D, Rng& rng) {
  if (D < 2) throw std::invalid_argument("gue_hamiltonian: D must be >= 2");
  const Matrix M = complex_gaussian(D, D, rng);
  Operator H = (M + M.adjoint()) / std::sqrt(2.0);
  for (int i = 0; i < D; ++i) H(i, i) = H(i, i).real();
  return H;
}

Matrix TraceOrthonormalBasis::stacked() const {
  Matrix out(D * D, static_cast<Eigen::Index>(members.size()));
  for (std::size_t n = 0; n < members.size(); ++n) out.col(static_cast<Eigen::Index>(n)) = vectorize(members[n]);
  return out;
}

TraceOrthonormalBasis trace_orthonormal_basis(int D) {
  if (D < 2) throw std::invalid_argument("trace_orthonormal_basis: D must be >= 2");
  TraceOrthonormalBasis basis;
  basis.D = D;
  std::vector<Eigen::VectorXd> diag;  // orthonormalized diagonals in slot order
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) {
      if (a == D - 1 && b == D - 1) continue;
      Operator F = Operator::Zero(D, D);
      if (a != b) {
        F(a, b) = 1.0;
      } else {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(D);
        v(a) = 1.0;
        v(a + 1) = -1.0;
        for (const auto& u : diag) v -= u.dot(v) * u;
        v.normalize();
        diag.push_back(v);
        F.diagonal() = v.cast<cplx>();
      }
      basis.members.push_back(std::move(F));
    }
  return basis;
}

Matrix kossakowski_from(const Matrix& G) {
  const Matrix GG = G * G.adjoint();
  const double tr = GG.trace().real();
  if (!(tr > 0)) throw std::invalid_argument("kossakowski_from: G must be nonzero");
  Matrix K = static_cast<double>(G.rows()) * GG / tr;
  return 0.5 * (K + K.adjoint());
}

Matrix wishart_kossakowski(int D, Rng& rng) {
  if (D < 2) throw std::invalid_argument("wishart_kossakowski: D must be >= 2");
  const int d = D * D - 1;
  return kossakowski_from(complex_gaussian(d, d, rng));
}

namespace {

void check_kossakowski(const Matrix& K, const TraceOrthonormalBasis& basis) {
  if (K.rows() != static_cast<Eigen::Index>(basis.size()) || K.cols() != K.rows())
    throw std::invalid_argument("dissipator_superoperator: K does not match the basis");
  if ((K - K.adjoint()).norm() > 1e-10 * std::max(1.0, K.norm()))
    throw std::invalid_argument("dissipator_superoperator: K is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(K, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, K.norm()))
    throw std::invalid_argument("dissipator_superoperator: K is not positive semidefinite");
}

}  // namespace

Superoperator dissipator_superoperator(const Matrix& K, const TraceOrthonormalBasis& basis) {
  check_kossakowski(K, basis);
  const int D = basis.D;
  const Matrix F = basis.stacked();
  const Matrix X = F * K * F.adjoint();
  Matrix S(D * D, D * D);
  // F_n rho F_m^dag terms: S[a + D c, b + D d] = X[a + D b, c + D d].
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b)
      for (int c = 0; c < D; ++c)
        for (int d = 0; d < D; ++d) S(a + D * c, b + D * d) = X(a + D * b, c + D * d);
  // A = sum K_mn F_m^dag F_n, A_bd = sum_a X[a + D d, a + D b].
  Operator A = Operator::Zero(D, D);
  for (int b = 0; b < D; ++b)
    for (int d = 0; d < D; ++d)
      for (int a = 0; a < D; ++a) A(b, d) += X(a + D * d, a + D * b);
  const Operator I = Operator::Identity(D, D);
  S -= 0.5 * (kron(I, A) + kron(A.transpose(), I));
  return Superoperator(std::move(S));
}

std::vector<Operator> jump_operators_from_kossakowski(const Matrix& K, const TraceOrthonormalBasis& basis) {
  check_kossakowski(K, basis);
  Eigen::SelfAdjointEigenSolver<Matrix> es(K);
  const Matrix& U = es.eigenvectors();
  std::vector<Operator> jumps;
  for (Eigen::Index mu = 0; mu < K.rows(); ++mu) {
    const double kappa = std::max(0.0, es.eigenvalues()(mu));
    Operator L = Operator::Zero(basis.D, basis.D);
    for (Eigen::Index nu = 0; nu < K.rows(); ++nu)
      L += U(nu, mu) * basis.members[static_cast<std::size_t>(nu)];
    jumps.push_back(std::sqrt(kappa) * L);
  }
  return jumps;
}

std::uint64_t fnv1a(const Matrix& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
  const std::size_t n = static_cast<std::size_t>(m.size()) * sizeof(cplx);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t RandomLiouvillianSample::checksum() const { return fnv1a(generator.matrix()); }

RandomLiouvillianSample random_liouvillian(int D, std::uint64_t seed, double zeta_coh, double zeta_diss) {
  Rng rng(seed);
  RandomLiouvillianSample s;
  s.D = D;
  s.seed = seed;
  s.zeta_coh = zeta_coh;
  s.zeta_diss = zeta_diss;
  s.H1 = gue_hamiltonian(D, rng);
  s.K = wishart_kossakowski(D, rng);
  s.generator = zeta_coh * hamiltonian_superoperator(s.H1) +
                zeta_diss * dissipator_superoperator(s.K, trace_orthonormal_basis(D));
  return s;
}

Superoperator random_perturbation(int D, Rng& rng) {
  const Operator H = gue_hamiltonian(D, rng);
  const Matrix K = wishart_kossakowski(D, rng);
  return hamiltonian_superoperator(H) + dissipator_superoperator(K, trace_orthonormal_basis(D));
}

Matrix choi_matrix(const Matrix& S) {
  const auto D = static_cast<int>(std::lround(std::sqrt(static_cast<double>(S.rows()))));
  if (D * D != S.rows() || S.rows() != S.cols()) throw std::invalid_argument("choi_matrix: not a superoperator");
  Matrix C(D * D, D * D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j)
      for (int k = 0; k < D; ++k)
        for (int l = 0; l < D; ++l) C(i * D + k, j * D + l) = S(k + D * l, i + D * j);
  return C;
}

double choi_min_eigenvalue(const Superoperator& L, double eps) {
  const Matrix E = (eps * L.matrix()).exp();
  const Matrix C = choi_matrix(E);
  const Matrix herm = 0.5 * (C + C.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void write_sample_manifest(std::ostream& out, const RandomLiouvillianSample& s) {
  nlohmann::json j;
  j["seed"] = s.seed;
  j["D"] = s.D;
  j["zeta_coh"] = s.zeta_coh;
  j["zeta_diss"] = s.zeta_diss;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(s.checksum()));
  j["checksum"] = std::string(buf);
  out << j.dump(2) << '\n';
}

}  // namespace qsync
