#include <random>

#include "doctest.h"
#include "qsync/operators.hpp"

using namespace qsync;

namespace {

Operator random_operator(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Operator m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = cplx(n(rng), n(rng));
  return m;
}

}  // namespace

TEST_CASE("spin spec indexing round trips") {
  const SpinSpec spec({2, 1, 3});
  CHECK(spec.dim() == 3 * 2 * 4);
  for (int i = 0; i < spec.dim(); ++i) CHECK(spec.index(spec.digits(i)) == i);
  CHECK(spec.digits(0) == std::vector<int>{0, 0, 0});
  CHECK(spec.twice_magnetizations(0) == std::vector<int>{2, 1, 3});
  CHECK(spec.twice_magnetizations(spec.dim() - 1) == std::vector<int>{-2, -1, -3});
  CHECK_THROWS_AS(SpinSpec::from_spins({0.3}), std::invalid_argument);
  CHECK_THROWS_AS(SpinSpec::from_spins({0.0}), std::invalid_argument);
  CHECK_THROWS_AS(spec.digits(spec.dim()), std::out_of_range);
}

TEST_CASE("spin matrices satisfy the angular momentum algebra") {
  for (int ts = 1; ts <= 4; ++ts) {
    const auto s = spin_operators(ts);
    const double S = 0.5 * ts;
    const Operator casimir = s.x * s.x + s.y * s.y + s.z * s.z;
    CHECK((casimir - S * (S + 1) * identity(ts + 1)).norm() < 1e-12);
    CHECK((commutator(s.x, s.y) - cplx(0, 1) * s.z).norm() < 1e-12);
    CHECK((commutator(s.z, s.plus) - s.plus).norm() < 1e-12);
    CHECK(s.z(0, 0).real() == doctest::Approx(S));
    CHECK(is_hermitian(s.x));
    CHECK(is_hermitian(s.y));
  }
}

TEST_CASE("embedding places the operator on its site") {
  const SpinSpec spec({2, 2});
  const auto s = spin_operators(2);
  const Operator z0 = embed(s.z, spec, 0);
  // |m1, m2> with site 0 slowest: index 0 is (1, 1), index 3 is (0, 1).
  CHECK(z0(0, 0).real() == doctest::Approx(1.0));
  CHECK(z0(3, 3).real() == doctest::Approx(0.0));
  CHECK((commutator(embed(s.x, spec, 0), embed(s.y, spec, 1))).norm() < 1e-14);
  CHECK_THROWS_AS(embed(s.z, spec, 2), std::out_of_range);
  CHECK_THROWS_AS(embed(spin_operators(1).z, spec, 0), std::invalid_argument);
}

TEST_CASE("vec(AXB) equals (B^T kron A) vec(X)") {
  std::mt19937_64 rng(7);
  for (int d : {2, 3, 5}) {
    const Operator A = random_operator(d, rng), B = random_operator(d, rng), X = random_operator(d, rng);
    const Operator direct = A * X * B;
    const Operator via = sandwich(A, B).apply(X);
    CHECK((direct - via).norm() < 1e-12 * direct.norm());
    CHECK((devectorize(vectorize(X)) - X).norm() == 0.0);
  }
  CHECK_THROWS_AS(devectorize(Vector::Zero(5)), std::invalid_argument);
  CHECK_THROWS_AS(Superoperator(Matrix::Zero(3, 3)), std::invalid_argument);
}

TEST_CASE("superoperator arithmetic is linear") {
  std::mt19937_64 rng(3);
  const Operator A = random_operator(3, rng), B = random_operator(3, rng), X = random_operator(3, rng);
  const Superoperator S = sandwich(A, identity(3)) + 2.0 * sandwich(identity(3), B);
  CHECK((S.apply(X) - (A * X + 2.0 * X * B)).norm() < 1e-12);
  CHECK(Superoperator::zero(3).apply(X).norm() == 0.0);
}
