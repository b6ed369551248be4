#include <cmath>
#include <map>

#include "doctest.h"
#include "qsync/liouvillian.hpp"
#include "qsync/models.hpp"

using namespace qsync;

TEST_CASE("spin-1 chain sectors have the expected dimensions") {
  const auto table = spin1_sectors(3);
  const std::map<std::string, int> expected{{"-3", 1}, {"-2", 3}, {"-1", 6}, {"0+", 4}, {"0-", 3},
                                            {"1", 6},  {"2", 3},  {"3", 1}};
  int total = 0;
  for (const auto& [label, dim] : expected) {
    CHECK(table.at(label).dim() == dim);
    total += dim;
  }
  CHECK(total == 27);
  CHECK(table.sectors.size() == 8);
  Operator sum = Operator::Zero(27, 27);
  for (const auto& s : table.sectors) sum += s.projector;
  CHECK((sum - Operator::Identity(27, 27)).norm() < 1e-12);
  CHECK_THROWS_AS(table.at("4"), std::out_of_range);
}

TEST_CASE("magnetization and spin flip are strong symmetries") {
  const auto model = spin1_chain({});
  const Operator M = total_magnetization(model.spec);
  const Operator P = spin_flip(model.spec);
  // The Zeeman term flips sign under P; it vanishes on the M = 0 block.
  const std::vector<std::pair<Operator, Operator>> cases{{M, model.hamiltonian},
                                                          {P, model.hamiltonian - 1.0 * M}};
  for (const auto& [U, H] : cases) {
    CHECK(commutator(U, H).norm() < 1e-12);
    for (const auto& L : model.jumps) {
      CHECK(commutator(U, L).norm() < 1e-12);
      CHECK(commutator(U, L.adjoint()).norm() < 1e-12);
    }
  }
  const auto table = spin1_sectors(3);
  for (int m = 1; m <= 3; ++m)
    CHECK((P * table.at(std::to_string(m)).projector * P - table.at(std::to_string(-m)).projector).norm() < 1e-12);
  CHECK((P * P - Operator::Identity(27, 27)).norm() < 1e-14);
}

TEST_CASE("sector states are stationary and P 1_M oscillates at 2 omega M") {
  Spin1ChainParams p;
  p.omega = 0.8;
  const Superoperator L = build_superoperator(spin1_chain(p));
  const auto table = spin1_sectors(3);
  for (const auto& s : table.sectors) CHECK(residual(L, s.maximally_mixed(), 0.0) < 1e-12);
  for (int M = -3; M <= 3; ++M) {
    if (M == 0) continue;
    const Operator X = spin1_oscillating_coherence(3, M);
    CHECK(residual(L, X, cplx(0, 2.0 * p.omega * M)) < 1e-12);
    CHECK(std::abs(X.trace()) < 1e-14);
  }
  CHECK_THROWS_AS(spin1_oscillating_coherence(3, 0), std::invalid_argument);
  CHECK_THROWS_AS(spin1_oscillating_coherence(3, 4), std::invalid_argument);
}

TEST_CASE("M = 0 mixtures carry the tabulated off-diagonal entries") {
  const auto table = spin1_sectors(3);
  const double cp = 0.7, cm = 0.3;
  const Operator rho = cp * table.at("0+").maximally_mixed() + cm * table.at("0-").maximally_mixed();
  const double w = spin1_offdiagonal_weight(table, cp, cm);
  CHECK(w == doctest::Approx(cp / 8.0 - cm / 6.0));
  const auto entries = spin1_offdiagonal_structure(3);
  CHECK(entries.size() == 6);
  int nonzero = 0;
  for (int r = 0; r < 27; ++r)
    for (int c = 0; c < 27; ++c)
      if (r != c && std::abs(rho(r, c)) > 1e-14) ++nonzero;
  CHECK(nonzero == 6);
  for (const auto& e : entries) CHECK(rho(e.row, e.col).real() == doctest::Approx(w));
}

TEST_CASE("spin-1/2 pair dark states and oscillating coherence") {
  const SpinHalfPairParams p;
  const auto pair = spin_half_pair(p);
  const auto& L = pair.model.jumps.front();
  CHECK((L * pair.v_plus).norm() < 1e-14);
  CHECK((L * pair.v_minus).norm() < 1e-14);
  CHECK((pair.model.hamiltonian * pair.v_plus - pair.energy_plus * pair.v_plus).norm() < 1e-14);
  CHECK((pair.model.hamiltonian * pair.v_minus - pair.energy_minus * pair.v_minus).norm() < 1e-14);
  const Superoperator S = build_superoperator(pair.model);
  CHECK(residual(S, pair.rho_osc, cplx(0, pair.frequency)) < 1e-12);
  CHECK(residual(S, pair.v_plus * pair.v_plus.adjoint(), 0.0) < 1e-12);
  CHECK(residual(S, pair.v_minus * pair.v_minus.adjoint(), 0.0) < 1e-12);
}

TEST_CASE("coupled spin-1 pair base annihilates the |0,0><1,-1| mode") {
  CoupledSpin1Params p;
  p.epsilon = 1e-3;
  p.Delta1 = 2e-3;
  p.Delta2 = -1e-3;
  p.gamma1_d = 1e-3;
  p.gamma2_g = 2e-3;
  CHECK(p.weak());
  const auto pair = coupled_spin1_pair(p);
  const Operator X = kron(spin1_ketbra(0, 1), spin1_ketbra(0, -1));
  const Superoperator L0 = build_superoperator(pair.base);
  CHECK(L0.apply(X).norm() < 1e-12);
  CHECK(trace_preservation_defect(L0 + build_superoperator(pair.perturbation)) < 1e-12);
  p.epsilon = 0.5;
  CHECK_FALSE(p.weak());
}
