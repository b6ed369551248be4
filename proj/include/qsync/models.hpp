#pragma once

#include <string>
#include <vector>

#include "qsync/liouvillian.hpp"
#include "qsync/operators.hpp"

namespace qsync {

/// Open spin-1 chain with XXZ-type coupling, Zeeman term omega * M and
/// dephasing jumps sqrt(gamma) (S_j^z)^2.
struct Spin1ChainParams {
  int n = 3;
  double omega = 1.0;
  double J = 0.5;
  double Delta = 0.5;
  double gamma = 2.0;
};

LindbladModel spin1_chain(const Spin1ChainParams& p);

/// Total magnetization sum_j S_j^z.
Operator total_magnetization(const SpinSpec& spec);
/// Global spin flip, tensor product of |1><-1| + |0><0| + |-1><1| (spin-1 sites).
Operator spin_flip(const SpinSpec& spec);

struct Sector {
  std::string label;   ///< "3", "-1", "0+", "0-", ...
  int magnetization;   ///< total M
  int parity;          ///< +1 / -1 for the M = 0 split, 0 otherwise
  std::vector<Vector> basis;
  Operator projector;
  int dim() const { return static_cast<int>(basis.size()); }
  Operator maximally_mixed() const { return projector / static_cast<double>(dim()); }
};

/// Quantum numbers -N..-1, 0+, 0-, 1..N of the strong symmetries M and P.
struct SectorTable {
  int n = 0;
  std::vector<Sector> sectors;
  const Sector& at(const std::string& label) const;
};

SectorTable spin1_sectors(int n);

/// P * 1_M, the oscillating coherence between the +-M sectors.
Operator spin1_oscillating_coherence(int n, int magnetization);

/// One off-diagonal position of the M = 0 steady-state mixture.
struct OffDiagonalEntry {
  std::vector<int> ket;  ///< magnetizations, site 1 first
  std::vector<int> bra;
  int row = 0;           ///< computational-basis indices
  int col = 0;
  bool forward = true;   ///< false for the Hermitian-conjugate partner
  std::string weight = "(c0+ - c0-)";
};

/// The six off-diagonal positions |1,-1,0><-1,1,0|, |0,1,-1><0,-1,1|,
/// |-1,0,1><1,0,-1| and their conjugates (N = 3 only).
std::vector<OffDiagonalEntry> spin1_offdiagonal_structure(int n);

/// Common value of those entries in sum_alpha c_alpha 1_alpha under the
/// trace-normalized convention 1_alpha = Pi_alpha / D_alpha:
/// c0+/(2 D0+) - c0-/(2 D0-).
double spin1_offdiagonal_weight(const SectorTable& table, double c0_plus, double c0_minus);

struct SpinHalfPairParams {
  double J = 1.0;
  double Delta = 1.0;
  double B = 0.3;
  double gamma = 0.5;
};

struct SpinHalfPair {
  LindbladModel model;
  Vector v_plus;   ///< |dd>
  Vector v_minus;  ///< (|ud> - |du>)/sqrt(2)
  Operator rho_osc;  ///< |v+><v-|
  double energy_plus = 0.0;
  double energy_minus = 0.0;
  /// Eigenvalue of rho_osc is i * frequency, frequency = E- - E+.
  double frequency = 0.0;
};

/// H = J (s1+ s2- + h.c.) + Delta s1z s2z + B (s1z + s2z) with Pauli s^z and
/// s+- = (s^x +- i s^y)/2; single jump L- = gamma (s1- + s2-).
SpinHalfPair spin_half_pair(const SpinHalfPairParams& p);

struct CoupledSpin1Params {
  double omega = 1.0;
  double gamma1_g = 1.0;
  double gamma2_d = 1.0;
  double epsilon = 0.0;
  double Delta1 = 0.0;
  double Delta2 = 0.0;
  double gamma1_d = 0.0;
  double gamma2_g = 0.0;

  /// Perturbative couplings at most `ratio` times the smallest base scale.
  bool weak(double ratio = 1e-2) const;
};

/// Two spin-1 sites: decoupled base (gain on site 1, damping on site 2) and
/// the coupling increment kept separate so it can be scaled independently.
struct CoupledSpin1Pair {
  LindbladModel base;
  LindbladModel perturbation;  ///< H_(1) and the extra jumps; add its superoperator to the base one
};

CoupledSpin1Pair coupled_spin1_pair(const CoupledSpin1Params& p);

/// Local operator |a><b| on a single spin-1 site with magnetizations a, b.
Operator spin1_ketbra(int m_ket, int m_bra);

}  // namespace qsync
