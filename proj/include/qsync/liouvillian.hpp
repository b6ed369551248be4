#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsync/operators.hpp"

namespace qsync {

/// A Hamiltonian plus jump operators over a spin lattice.
struct LindbladModel {
  SpinSpec spec;
  Operator hamiltonian;
  std::vector<Operator> jumps;

  /// Throws std::invalid_argument on dimension mismatch or non-Hermitian H.
  void validate() const;
};

/// X -> -i[H, X].
Superoperator hamiltonian_superoperator(const Operator& hamiltonian);
/// X -> L X L^dag - {L^dag L, X}/2.
Superoperator dissipator_superoperator(const Operator& jump);
Superoperator build_superoperator(const LindbladModel& model);

/// max |(vec(1)^dag L)_k|; zero for trace-preserving generators.
double trace_preservation_defect(const Superoperator& L);

struct SpectralDecomposition {
  Vector eigenvalues;
  std::vector<Operator> right_modes;  ///< unit Frobenius norm
  std::vector<Operator> left_modes;   ///< scaled so <left_k, right_k> = 1
  std::vector<double> residuals;
  double norm = 0.0;                  ///< Frobenius norm of the generator
  double conjugation_defect = 0.0;    ///< max_k min_j |lambda_j - conj(lambda_k)|
  double max_real_part = 0.0;
};

struct SpectrumOptions {
  int max_hilbert_dim = 32;
};

class EigensolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense non-Hermitian eigendecomposition (LAPACK zgeev). Modes are sorted by
/// decreasing real part, then increasing imaginary part.
SpectralDecomposition full_spectrum(const Superoperator& L, const SpectrumOptions& opts = {});

struct OscillatingMode {
  Operator mode;
  cplx eigenvalue;
  double frequency = 0.0;  ///< Im(eigenvalue)
};

struct ModeClassification {
  std::vector<Operator> steady;          ///< unit trace, Hermitian
  std::vector<Operator> traceless_zero;  ///< Hermitian, traceless, Re/Im lambda = 0
  std::vector<OscillatingMode> oscillating;
  /// Biorthogonal partners of zero_modes(): <zero_left[a], zero_modes()[b]> = delta_ab.
  std::vector<Operator> zero_left;
  int decaying = 0;
  double tol_real = 0.0;
  double tol_imag = 0.0;

  std::vector<Operator> zero_modes() const;
};

class DefectiveZeroClusterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Splits the decay-free part of the spectrum into steady states, traceless
/// zero modes and oscillating coherences.
///
/// The zero cluster must be diagonalizable; a cluster whose left and right
/// eigenspaces fail to pair up (near-singular overlap) raises
/// DefectiveZeroClusterError.
///
/// Steady states are extracted as extreme points: a generic Hermitian element
/// of the zero space is diagonalized, its eigenvectors are grouped into blocks
/// by comparing with a second generic element, and each block whose
/// compression is itself a zero mode becomes one steady state. Whatever part
/// of the zero space is not covered is returned as traceless zero modes.
ModeClassification classify_decay_free(const SpectralDecomposition& dec, double tol_real,
                                       double tol_imag);
/// Uses tol_real = tol_imag = 1e-9 * ||L||_F.
ModeClassification classify_decay_free(const SpectralDecomposition& dec);

struct SteadyStateOptions {
  /// Singular values below threshold * sigma_max count toward the null space.
  double null_threshold = 1e-12;
  /// Mixed-precision iterative refinement passes on the bordered system.
  int refinement_steps = 2;
  bool check_multiplicity = true;
  double negativity_warning = 1e-8;
};

struct SteadyState {
  Operator rho;  ///< Hermitized, unit trace
  int multiplicity = 1;
  double hermitian_defect = 0.0;  ///< max |rho - rho^dag| before Hermitization
  double min_eigenvalue = 0.0;
  double residual = 0.0;  ///< ||L[rho]||_F
  std::vector<Operator> null_basis;  ///< filled when multiplicity > 1
  std::vector<std::string> warnings;
};

/// Steady state via the bordered linear system (first diagonal row of L
/// replaced by the trace functional). When the numerical null space has
/// dimension > 1 the bordered solve is skipped, the orthonormal null basis is
/// returned and rho is the trace-normalized projection of the identity onto it.
SteadyState steady_state(const Superoperator& L, const SteadyStateOptions& opts = {});

class DegenerateEffectiveGeneratorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PerturbativeResult {
  Vector coefficients;  ///< c_alpha, sum_alpha c_alpha Tr(rho_alpha) = 1
  Matrix effective_generator;  ///< W_ab = <sigma_a, L1[rho_b]>
  Vector singular_values;      ///< of W, descending
  Operator rho;                ///< sum_alpha c_alpha rho_alpha
};

/// Leading-order steady state of L0 + eta L1 from the zero modes of L0.
PerturbativeResult perturbative_coefficients(std::span<const Operator> right,
                                             std::span<const Operator> left,
                                             const Superoperator& L1,
                                             double null_threshold = 1e-10);
PerturbativeResult perturbative_coefficients(const ModeClassification& modes,
                                             const Superoperator& L1,
                                             double null_threshold = 1e-10);

/// rho(t) = exp(L t) rho0 on the given grid (times must be non-decreasing, >= 0).
std::vector<Operator> evolve(const Superoperator& L, const Operator& rho0,
                             std::span<const double> times);
std::vector<Operator> evolve(const LindbladModel& model, const Operator& rho0,
                             std::span<const double> times);

/// ||L[rho] - lambda rho||_F / max(||rho||_F, eps).
double residual(const Superoperator& L, const Operator& rho, cplx lambda);

double trace_distance(const Operator& a, const Operator& b);

/// Columns: re_lambda, im_lambda, class (zero, oscillating, decaying), residual.
void write_spectrum_csv(std::ostream& out, const SpectralDecomposition& dec, double tol_real,
                        double tol_imag);

}  // namespace qsync
