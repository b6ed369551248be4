#include "qsync/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace qsync {

namespace {

int spin1_index(int m) {
  if (m < -1 || m > 1) throw std::invalid_argument("spin-1 magnetization out of range");
  return 1 - m;
}

}  // namespace

Operator spin1_ketbra(int m_ket, int m_bra) {
  Operator op = Operator::Zero(3, 3);
  op(spin1_index(m_ket), spin1_index(m_bra)) = 1.0;
  return op;
}

LindbladModel spin1_chain(const Spin1ChainParams& p) {
  if (p.n < 2) throw std::invalid_argument("spin1_chain: need at least 2 sites");
  if (p.gamma < 0) throw std::invalid_argument("spin1_chain: gamma must be >= 0");
  const SpinSpec spec = SpinSpec::uniform(static_cast<std::size_t>(p.n), 1.0);
  const auto s = spin_operators(2);
  const int d = spec.dim();

  std::vector<Operator> sz, sp, sm;
  for (int j = 0; j < p.n; ++j) {
    sz.push_back(embed(s.z, spec, static_cast<std::size_t>(j)));
    sp.push_back(embed(s.plus, spec, static_cast<std::size_t>(j)));
    sm.push_back(embed(s.minus, spec, static_cast<std::size_t>(j)));
  }

  LindbladModel model;
  model.spec = spec;
  model.hamiltonian = Operator::Zero(d, d);
  for (int j = 0; j < p.n; ++j) model.hamiltonian += p.omega * sz[j];
  for (int j = 0; j + 1 < p.n; ++j) {
    const Operator hop = sp[j] * sm[j + 1];
    model.hamiltonian += p.J * (hop + hop.adjoint());
    model.hamiltonian += p.Delta * sz[j] * sz[j + 1];
  }
  const double root = std::sqrt(p.gamma);
  for (int j = 0; j < p.n; ++j) model.jumps.push_back(root * sz[j] * sz[j]);
  return model;
}

Operator total_magnetization(const SpinSpec& spec) {
  Operator m = Operator::Zero(spec.dim(), spec.dim());
  for (std::size_t j = 0; j < spec.sites(); ++j)
    m += embed(spin_operators(spec.twice_spin(j)).z, spec, j);
  return m;
}

Operator spin_flip(const SpinSpec& spec) {
  Operator flip = Operator::Identity(1, 1);
  for (std::size_t j = 0; j < spec.sites(); ++j) {
    if (spec.twice_spin(j) != 2) throw std::invalid_argument("spin_flip: spin-1 sites only");
    const Operator local = spin1_ketbra(1, -1) + spin1_ketbra(0, 0) + spin1_ketbra(-1, 1);
    flip = kron(flip, local);
  }
  return flip;
}

const Sector& SectorTable::at(const std::string& label) const {
  for (const auto& s : sectors)
    if (s.label == label) return s;
  throw std::out_of_range("SectorTable: no sector " + label);
}

SectorTable spin1_sectors(int n) {
  if (n < 2) throw std::invalid_argument("spin1_sectors: need at least 2 sites");
  const SpinSpec spec = SpinSpec::uniform(static_cast<std::size_t>(n), 1.0);
  const int d = spec.dim();

  auto total_m = [&](int idx) {
    int m2 = 0;
    for (int t : spec.twice_magnetizations(idx)) m2 += t;
    return m2 / 2;
  };
  // Basis index of the flipped string: digit k -> 2 - k.
  auto flipped = [&](int idx) {
    auto dg = spec.digits(idx);
    for (auto& k : dg) k = 2 - k;
    return spec.index(dg);
  };
  auto unit = [&](int idx) {
    Vector v = Vector::Zero(d);
    v(idx) = 1.0;
    return v;
  };

  SectorTable table;
  table.n = n;
  auto finish = [&](Sector s) {
    s.projector = Operator::Zero(d, d);
    for (const auto& v : s.basis) s.projector += v * v.adjoint();
    table.sectors.push_back(std::move(s));
  };

  for (int m = -n; m <= n; ++m) {
    if (m == 0) {
      Sector plus{"0+", 0, +1, {}, {}};
      Sector minus{"0-", 0, -1, {}, {}};
      for (int idx = 0; idx < d; ++idx) {
        if (total_m(idx) != 0) continue;
        const int partner = flipped(idx);
        if (partner == idx) {
          plus.basis.push_back(unit(idx));
        } else if (idx < partner) {
          plus.basis.push_back((unit(idx) + unit(partner)) / std::sqrt(2.0));
          minus.basis.push_back((unit(idx) - unit(partner)) / std::sqrt(2.0));
        }
      }
      finish(std::move(plus));
      finish(std::move(minus));
    } else {
      Sector s{std::to_string(m), m, 0, {}, {}};
      for (int idx = 0; idx < d; ++idx)
        if (total_m(idx) == m) s.basis.push_back(unit(idx));
      finish(std::move(s));
    }
  }
  return table;
}

Operator spin1_oscillating_coherence(int n, int magnetization) {
  if (magnetization == 0)
    throw std::invalid_argument("spin1_oscillating_coherence: M = 0 has no oscillating coherence");
  if (std::abs(magnetization) > n)
    throw std::invalid_argument("spin1_oscillating_coherence: |M| exceeds N");
  const SectorTable table = spin1_sectors(n);
  const SpinSpec spec = SpinSpec::uniform(static_cast<std::size_t>(n), 1.0);
  return spin_flip(spec) * table.at(std::to_string(magnetization)).maximally_mixed();
}

std::vector<OffDiagonalEntry> spin1_offdiagonal_structure(int n) {
  if (n != 3) throw std::invalid_argument("spin1_offdiagonal_structure: only N = 3 is tabulated");
  const SpinSpec spec = SpinSpec::uniform(3, 1.0);
  auto idx = [&](const std::vector<int>& ms) {
    std::vector<int> dg;
    for (int m : ms) dg.push_back(1 - m);
    return spec.index(dg);
  };
  const std::vector<std::vector<int>> kets = {{1, -1, 0}, {0, 1, -1}, {-1, 0, 1}};
  std::vector<OffDiagonalEntry> out;
  for (bool forward : {true, false}) {
    for (const auto& ket : kets) {
      std::vector<int> bra;
      for (int m : ket) bra.push_back(-m);
      OffDiagonalEntry e;
      e.ket = forward ? ket : bra;
      e.bra = forward ? bra : ket;
      e.row = idx(e.ket);
      e.col = idx(e.bra);
      e.forward = forward;
      out.push_back(std::move(e));
    }
  }
  return out;
}

double spin1_offdiagonal_weight(const SectorTable& table, double c0_plus, double c0_minus) {
  return c0_plus / (2.0 * table.at("0+").dim()) - c0_minus / (2.0 * table.at("0-").dim());
}

SpinHalfPair spin_half_pair(const SpinHalfPairParams& p) {
  if (p.gamma < 0) throw std::invalid_argument("spin_half_pair: gamma must be >= 0");
  const SpinSpec spec = SpinSpec::uniform(2, 0.5);
  const auto s = spin_operators(1);
  // Pauli matrices from the spin-1/2 operators; sigma+ = |u><d|.
  const Operator sz = 2.0 * s.z;
  const Operator sp = s.plus;
  const Operator sm = s.minus;
  const Operator z1 = embed(sz, spec, 0), z2 = embed(sz, spec, 1);
  const Operator p1 = embed(sp, spec, 0), m1 = embed(sm, spec, 0);
  const Operator p2 = embed(sp, spec, 1), m2 = embed(sm, spec, 1);

  SpinHalfPair out;
  out.model.spec = spec;
  const Operator hop = p1 * m2;
  out.model.hamiltonian = p.J * (hop + hop.adjoint()) + p.Delta * z1 * z2 + p.B * (z1 + z2);
  out.model.jumps.push_back(p.gamma * (m1 + m2));

  // Basis: |uu>, |ud>, |du>, |dd>.
  out.v_plus = Vector::Zero(4);
  out.v_plus(3) = 1.0;
  out.v_minus = Vector::Zero(4);
  out.v_minus(1) = 1.0 / std::sqrt(2.0);
  out.v_minus(2) = -1.0 / std::sqrt(2.0);
  out.rho_osc = out.v_plus * out.v_minus.adjoint();
  out.energy_plus = p.Delta - 2.0 * p.B;
  out.energy_minus = -p.J - p.Delta;
  out.frequency = out.energy_minus - out.energy_plus;
  return out;
}

bool CoupledSpin1Params::weak(double ratio) const {
  const double base = std::min({std::abs(omega), gamma1_g, gamma2_d});
  const double pert = std::max({std::abs(epsilon), std::abs(Delta1), std::abs(Delta2), gamma1_d, gamma2_g});
  return pert <= ratio * base;
}

CoupledSpin1Pair coupled_spin1_pair(const CoupledSpin1Params& p) {
  for (double rate : {p.gamma1_g, p.gamma2_d, p.gamma1_d, p.gamma2_g})
    if (rate < 0) throw std::invalid_argument("coupled_spin1_pair: rates must be >= 0");
  const SpinSpec spec = SpinSpec::uniform(2, 1.0);
  const auto s = spin_operators(2);
  const Operator z1 = embed(s.z, spec, 0), z2 = embed(s.z, spec, 1);
  const Operator p1 = embed(s.plus, spec, 0), m1 = embed(s.minus, spec, 0);
  const Operator p2 = embed(s.plus, spec, 1), m2 = embed(s.minus, spec, 1);

  CoupledSpin1Pair out;
  out.base.spec = spec;
  out.base.hamiltonian = p.omega * (z1 + z2);
  out.base.jumps.push_back(std::sqrt(p.gamma1_g / 2.0) * p1 * z1);
  out.base.jumps.push_back(std::sqrt(p.gamma2_d / 2.0) * m2 * z2);

  out.perturbation.spec = spec;
  out.perturbation.hamiltonian =
      cplx(0, 0.5 * p.epsilon) * (p1 * m2 - m1 * p2) + p.Delta1 * z1 + p.Delta2 * z2;
  out.perturbation.jumps.push_back(std::sqrt(p.gamma1_d / 2.0) * m1 * z1);
  out.perturbation.jumps.push_back(std::sqrt(p.gamma2_g / 2.0) * p2 * z2);
  return out;
}

}  // namespace qsync
