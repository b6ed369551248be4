#include <cmath>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "qsync/liouvillian.hpp"
#include "qsync/models.hpp"
#include "qsync/randliouv.hpp"

using namespace qsync;

TEST_CASE("trace-orthonormal basis") {
  for (int D : {2, 3, 4, 5}) {
    const auto basis = trace_orthonormal_basis(D);
    REQUIRE(basis.size() == static_cast<std::size_t>(D * D - 1));
    const Matrix F = basis.stacked();
    CHECK((F.adjoint() * F - Matrix::Identity(D * D - 1, D * D - 1)).norm() < 1e-14);
    for (const auto& f : basis.members) CHECK(std::abs(f.trace()) < 1e-14);
    // Off-diagonal slots hold unit matrices at a D + b.
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b)
        if (a != b) CHECK(basis.members[static_cast<std::size_t>(a * D + b)](a, b) == cplx(1.0));
  }
  const auto two = trace_orthonormal_basis(2);
  CHECK(two.members[0](0, 0).real() == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(two.members[0](1, 1).real() == doctest::Approx(-1 / std::sqrt(2.0)));
  CHECK(two.members[1](0, 1) == cplx(1.0));
  CHECK(two.members[2](1, 0) == cplx(1.0));
  const auto three = trace_orthonormal_basis(3);
  // Second diagonal member is the (1, 1, -2)/sqrt(6) Gell-Mann combination.
  CHECK(three.members[4](0, 0).real() == doctest::Approx(1 / std::sqrt(6.0)));
  CHECK(three.members[4](2, 2).real() == doctest::Approx(-2 / std::sqrt(6.0)));
  CHECK_THROWS_AS(trace_orthonormal_basis(1), std::invalid_argument);
}

TEST_CASE("GUE variance statistics") {
  Rng rng(1);
  const int D = 4, n = 100000;
  double off_re = 0.0, diag = 0.0, mean = 0.0;
  for (int t = 0; t < n; ++t) {
    const Operator H = gue_hamiltonian(D, rng);
    CHECK_MESSAGE(hermiticity_defect(H) <= 1e-15, "draw " << t);
    off_re += H(0, 1).real() * H(0, 1).real();
    diag += H(2, 2).real() * H(2, 2).real();
    mean += H(1, 3).real() + H(3, 3).real();
  }
  CHECK(off_re / n == doctest::Approx(1.0).epsilon(0.05));
  CHECK(diag / n == doctest::Approx(2.0).epsilon(0.05));
  CHECK(std::abs(mean / n) < 3 * std::sqrt(3.0 / n));
}

TEST_CASE("Kossakowski matrices are PSD with trace d") {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const Matrix K = wishart_kossakowski(3, rng);
    CHECK(std::abs(K.trace() - cplx(8)) < 1e-10);
    Eigen::SelfAdjointEigenSolver<Matrix> es(K, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  }
  CHECK((kossakowski_from(Matrix::Identity(15, 15)) - Matrix::Identity(15, 15)).norm() < 1e-14);
}

TEST_CASE("dissipator agrees with the jump-operator construction") {
  Rng rng(3);
  for (int D : {2, 3, 4}) {
    const auto basis = trace_orthonormal_basis(D);
    const Matrix K = wishart_kossakowski(D, rng);
    const Superoperator S = dissipator_superoperator(K, basis);
    Superoperator J = Superoperator::zero(D);
    for (const auto& L : jump_operators_from_kossakowski(K, basis)) J += dissipator_superoperator(L);
    CHECK((S.matrix() - J.matrix()).norm() <= 1e-10);
    CHECK(trace_preservation_defect(S) < 1e-12);
    // Hermiticity preservation.
    Operator X = Operator::Random(D, D);
    X = (X + X.adjoint()).eval();
    CHECK(hermiticity_defect(S.apply(X)) < 1e-12);
  }
}

TEST_CASE("identity Kossakowski matrix at D = 2 relaxes to the maximally mixed state") {
  const auto basis = trace_orthonormal_basis(2);
  const Superoperator S = dissipator_superoperator(Matrix::Identity(3, 3), basis);
  const auto ss = steady_state(S);
  CHECK(ss.multiplicity == 1);
  CHECK((ss.rho - Operator::Identity(2, 2) / 2.0).norm() < 1e-12);
}

TEST_CASE("non-PSD Kossakowski matrices are rejected") {
  Matrix K = Matrix::Identity(3, 3);
  K(0, 0) = -1.0;
  CHECK_THROWS_AS(dissipator_superoperator(K, trace_orthonormal_basis(2)), std::invalid_argument);
  CHECK_THROWS_AS(dissipator_superoperator(Matrix::Identity(4, 4), trace_orthonormal_basis(2)),
                  std::invalid_argument);
}

TEST_CASE("random perturbations generate CPTP semigroups") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto sample = random_liouvillian(3, derive_seed(17, s));
    CHECK(trace_preservation_defect(sample.generator) <= 1e-12);
    CHECK(choi_min_eigenvalue(sample.generator, 1e-3) >= -1e-8);
    CHECK(full_spectrum(sample.generator).max_real_part <= 1e-9);
  }
}

TEST_CASE("Choi matrix of the identity channel is the maximally entangled projector") {
  const Matrix C = choi_matrix(Matrix::Identity(4, 4));
  Eigen::SelfAdjointEigenSolver<Matrix> es(C, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues()(3) == doctest::Approx(2.0));
  CHECK(std::abs(es.eigenvalues()(0)) < 1e-14);
}

TEST_CASE("seeded draws are deterministic and seeds decorrelate") {
  const auto a = random_liouvillian(4, 99), b = random_liouvillian(4, 99), c = random_liouvillian(4, 100);
  CHECK(a.checksum() == b.checksum());
  CHECK(a.generator.matrix() == b.generator.matrix());
  CHECK(a.checksum() != c.checksum());
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  std::ostringstream out;
  write_sample_manifest(out, a);
  const auto j = nlohmann::json::parse(out.str());
  CHECK(j["seed"] == 99);
  CHECK(j["D"] == 4);
  CHECK(j["checksum"].get<std::string>().size() == 16);
}

TEST_CASE("perturbed spin-1 chain has a unique steady state") {
  const Superoperator L0 = build_superoperator(spin1_chain({}));
  const auto L1 = random_liouvillian(27, 5).generator;
  const auto ss = steady_state(L0 + 1e-3 * L1);
  CHECK(ss.multiplicity == 1);
  CHECK(ss.residual < 1e-10);
}

TEST_CASE("ensemble is insensitive to the choice of trace-orthonormal basis") {
  // Rotate the basis by a fixed unitary on the coefficient space; compare Tr[L1 L1^dag].
  const int D = 3, draws = 500;
  const auto basis = trace_orthonormal_basis(D);
  const Matrix G = Matrix::Random(8, 8);
  const Eigen::HouseholderQR<Matrix> qr(G);
  const Matrix U = qr.householderQ();
  TraceOrthonormalBasis rotated{D, {}};
  for (int m = 0; m < 8; ++m) {
    Operator f = Operator::Zero(D, D);
    for (int n = 0; n < 8; ++n) f += U(n, m) * basis.members[static_cast<std::size_t>(n)];
    rotated.members.push_back(f);
  }
  Rng r1(10), r2(20);
  std::vector<double> x, y;
  for (int t = 0; t < draws; ++t) {
    x.push_back(dissipator_superoperator(wishart_kossakowski(D, r1), basis).matrix().squaredNorm());
    y.push_back(dissipator_superoperator(wishart_kossakowski(D, r2), rotated).matrix().squaredNorm());
  }
  auto mean_sd = [](const std::vector<double>& v) {
    double m = 0.0, s = 0.0;
    for (double a : v) m += a;
    m /= v.size();
    for (double a : v) s += (a - m) * (a - m);
    return std::pair{m, std::sqrt(s / (v.size() - 1))};
  };
  const auto [mx, sx] = mean_sd(x);
  const auto [my, sy] = mean_sd(y);
  const double z = (mx - my) / std::sqrt(sx * sx / draws + sy * sy / draws);
  CHECK(std::abs(z) < 4.0);
}
