#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "qsync/operators.hpp"

namespace qsync {

using Rng = std::mt19937_64;

/// splitmix64 finalizer of (master, index); one stream per ensemble sample.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// (M + M^dag)/sqrt(2), M with i.i.d. N(0, 1) real and imaginary parts.
Operator gue_hamiltonian(int D, Rng& rng);

/// d = D^2 - 1 traceless matrices with Tr[F_m F_n^dag] = delta_mn. Slot
/// (a, b) -> a D + b (0-based, (D-1, D-1) excluded) holds E_ab for a != b and
/// the orthonormalized diagonal difference family for a = b.
struct TraceOrthonormalBasis {
  int D = 0;
  std::vector<Operator> members;

  std::size_t size() const { return members.size(); }
  /// D^2 x d matrix whose columns are vec(F_n).
  Matrix stacked() const;
};

TraceOrthonormalBasis trace_orthonormal_basis(int D);

/// d G G^dag / Tr[G G^dag] with G d x d complex Gaussian.
Matrix wishart_kossakowski(int D, Rng& rng);
/// Same normalization for an injected G.
Matrix kossakowski_from(const Matrix& G);

/// sum_mn K_mn (F_n . F_m^dag - 1/2 {F_m^dag F_n, .}).
Superoperator dissipator_superoperator(const Matrix& K, const TraceOrthonormalBasis& basis);

/// L_mu = sqrt(kappa_mu) sum_nu V_mu,nu F_nu from K = sum_mu kappa_mu v_mu v_mu^dag.
std::vector<Operator> jump_operators_from_kossakowski(const Matrix& K, const TraceOrthonormalBasis& basis);

struct RandomLiouvillianSample {
  int D = 0;
  Operator H1;
  Matrix K;
  double zeta_coh = 1.0;
  double zeta_diss = 1.0;
  std::uint64_t seed = 0;
  Superoperator generator;

  std::uint64_t checksum() const;
};

/// H1 is drawn before G from a single stream seeded with `seed`.
RandomLiouvillianSample random_liouvillian(int D, std::uint64_t seed, double zeta_coh = 1.0,
                                           double zeta_diss = 1.0);

/// zeta_coh = zeta_diss = 1 draw from an existing stream.
Superoperator random_perturbation(int D, Rng& rng);

/// Choi matrix sum_ij E_ij (x) Phi(E_ij) of the map vec(rho) -> S vec(rho).
Matrix choi_matrix(const Matrix& S);

/// Smallest eigenvalue of the Hermitian part of the Choi matrix of exp(eps L).
double choi_min_eigenvalue(const Superoperator& L, double eps);

/// FNV-1a over the raw bytes of a complex matrix.
std::uint64_t fnv1a(const Matrix& m);

/// {seed, D, zeta_coh, zeta_diss, checksum}.
void write_sample_manifest(std::ostream& out, const RandomLiouvillianSample& s);

}  // namespace qsync
