#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "qsync/models.hpp"
#include "qsync/phasespace.hpp"

using namespace qsync;
using boost::math::quadrature::gauss;

namespace {

constexpr double kPi = std::numbers::pi;

Operator random_state(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Operator m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = cplx(n(rng), n(rng));
  const Operator r = m * m.adjoint();
  return r / r.trace();
}

// S(phi) by brute-force theta quadrature of the Husimi function.
double quadrature_phase_distribution(const Operator& rho, const SpinSpec& spec, const std::vector<double>& phis) {
  double norm = 1.0;
  for (std::size_t j = 0; j < spec.sites(); ++j) norm *= (spec.twice_spin(j) + 1.0) / (4.0 * kPi);
  std::function<double(std::size_t, std::vector<double>&)> nest = [&](std::size_t site, std::vector<double>& th) {
    if (site == spec.sites()) return husimi_q(rho, AngleTuple{phis, th}, spec);
    return gauss<double, 30>::integrate(
        [&](double t) {
          th[site] = t;
          return std::sin(t) * nest(site + 1, th);
        },
        0.0, kPi);
  };
  std::vector<double> th(spec.sites(), 0.0);
  return norm * nest(0, th);
}

}  // namespace

TEST_CASE("Wigner d column matches the matrix exponential of S^y") {
  for (int ts = 1; ts <= 4; ++ts) {
    const auto s = spin_operators(ts);
    for (double theta : {0.0, 0.3, 1.7, 3.0}) {
      const Operator R = (cplx(0, -theta) * s.y).exp();
      const Eigen::VectorXd d = wigner_d_top(ts, theta);
      CHECK((R.col(0) - d.cast<cplx>()).norm() < 1e-12);
    }
  }
}

TEST_CASE("theta moments against quadrature") {
  for (int ts = 1; ts <= 4; ++ts) {
    const auto C = theta_moments(ts);
    for (int i = 0; i <= ts; ++i)
      for (int j = 0; j <= ts; ++j) {
        const double q = gauss<double, 40>::integrate(
            [&](double t) {
              const auto d = wigner_d_top(ts, t);
              return std::sin(t) * d(i) * d(j);
            },
            0.0, kPi);
        CHECK(C(i, j) == doctest::Approx(q).epsilon(1e-12));
      }
    for (int i = 0; i <= ts; ++i) CHECK(C(i, i) == doctest::Approx(2.0 / (ts + 1)));
  }
  const auto half = theta_moments(1);
  CHECK(half(0, 1) == doctest::Approx(kPi / 4));
  CHECK_THROWS_AS(theta_moments(0), std::invalid_argument);
}

TEST_CASE("coherent states are normalized and resolve the identity on average") {
  const SpinSpec spec({2, 1});
  const Vector c = coherent_state(AngleTuple{{0.4, 1.1}, {0.9, 2.2}}, spec);
  CHECK(c.norm() == doctest::Approx(1.0));
  const Operator mixed = Operator::Identity(6, 6) / 6.0;
  CHECK(husimi_q(mixed, AngleTuple{{0.1, 0.2}, {0.3, 0.4}}, spec) == doctest::Approx(1.0 / 6.0));
  CHECK_THROWS_AS(coherent_state(AngleTuple{{0.1}, {0.2}}, spec), std::invalid_argument);
}

TEST_CASE("phase distribution polynomial equals theta quadrature") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> angle(0.0, 2 * kPi);
  for (const auto& spins : std::vector<std::vector<int>>{{1, 1}, {2, 1}, {2, 2}, {1, 1, 1}}) {
    const SpinSpec spec(spins);
    const Operator rho = random_state(spec.dim(), rng);
    const auto s = phase_distribution(rho, spec);
    CHECK(s.poly.integral() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.poly.reality_defect() < 1e-15);
    std::vector<double> phis(spec.sites());
    for (auto& p : phis) p = angle(rng);
    CHECK(std::abs(s.evaluate(phis) - quadrature_phase_distribution(rho, spec, phis)) < 1e-10);
  }
}

TEST_CASE("reduced distribution integrates to one and is flat for diagonal states") {
  std::mt19937_64 rng(4);
  const SpinSpec spec({2, 2, 2});
  const auto sd = reduce_over_global_phase(phase_distribution(random_state(27, rng), spec));
  CHECK(sd.axes() == 2);
  CHECK(sd.poly.integral() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sd.uniform_level() == doctest::Approx(1.0 / (4 * kPi * kPi)));
  Operator diag = Operator::Zero(27, 27);
  for (int i = 0; i < 27; ++i) diag(i, i) = (i + 1.0) / 378.0;
  const auto flat = reduce_over_global_phase(phase_distribution(diag, spec));
  CHECK(std::abs(sync_measure(flat, 32).s_max) < 1e-14);
  CHECK_THROWS_AS(reduce_over_global_phase(phase_distribution(Operator::Identity(3, 3) / 3.0, SpinSpec({2}))),
                  std::invalid_argument);
}

TEST_CASE("reduction matches numerical integration over the global phase") {
  std::mt19937_64 rng(8);
  const SpinSpec spec({2, 1});
  const auto s = phase_distribution(random_state(6, rng), spec);
  const auto sd = reduce_over_global_phase(s);
  const double x = 1.234;
  const double q = gauss<double, 30>::integrate(
      [&](double phiN) {
        const std::vector<double> phis{x + phiN, phiN};
        return s.evaluate(phis);
      },
      0.0, 2 * kPi);
  const std::vector<double> at{x};
  CHECK(sd.evaluate(at) == doctest::Approx(q).epsilon(1e-12));
}

TEST_CASE("grid evaluation agrees with pointwise evaluation") {
  std::mt19937_64 rng(9);
  const SpinSpec spec({2, 2, 2});
  const auto sd = reduce_over_global_phase(phase_distribution(random_state(27, rng), spec));
  const auto grid = evaluate_on_grid(sd, 16);
  CHECK(grid.values.size() == 256);
  for (std::size_t flat : {0u, 17u, 100u, 255u}) CHECK(grid.values[flat] == doctest::Approx(sd.evaluate(grid.angles(flat))));
  CHECK(grid.cell(17) == std::vector<int>{1, 1});
}

TEST_CASE("maximization refines off-grid maxima") {
  ReducedPhaseDistribution sd;
  sd.sites = 2;
  sd.poly = TrigPolynomial(1);
  const double u = 1.0 / (2 * kPi);
  const double x0 = 1.0;
  sd.poly.add({0}, u);
  sd.poly.add({1}, 0.05 * std::polar(1.0, -x0));
  sd.poly.add({-1}, 0.05 * std::polar(1.0, x0));
  const auto m = sync_measure(sd, 64);
  REQUIRE(m.argmax.size() == 1);
  CHECK(m.argmax[0][0] == doctest::Approx(x0).epsilon(1e-10));
  CHECK(m.s_max == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("singlet-type coherence synchronizes at a pi difference") {
  const auto pair = spin_half_pair({});
  const Operator rho = pair.v_minus * pair.v_minus.adjoint();
  const auto sd = reduce_over_global_phase(phase_distribution(rho, pair.model.spec));
  const auto m = sync_measure(sd);
  REQUIRE(m.argmax.size() == 1);
  CHECK(m.argmax[0][0] == doctest::Approx(kPi).epsilon(1e-10));
  CHECK(m.s_max == doctest::Approx(kPi / 32).epsilon(1e-12));
}

TEST_CASE("threshold region") {
  ReducedPhaseDistribution sd;
  sd.sites = 2;
  sd.poly = TrigPolynomial(1);
  const double u = 1.0 / (2 * kPi);
  sd.poly.add({0}, u);
  sd.poly.add({1}, 0.05);
  sd.poly.add({-1}, 0.05);
  const auto top = threshold_region(sd, 1.0, 64);
  CHECK(top.cells == std::vector<std::size_t>{0});
  const auto wide = threshold_region(sd, 0.5, 64);
  // cos(x) >= 1/2 covers a third of the circle.
  CHECK(static_cast<double>(wide.cells.size()) == doctest::Approx(64.0 / 3).epsilon(0.1));
  for (double w : wide.weights) CHECK(w >= u);
  ReducedPhaseDistribution flat;
  flat.sites = 2;
  flat.poly = TrigPolynomial(1);
  flat.poly.add({0}, u);
  CHECK(threshold_region(flat, 0.95, 32).cells.size() == 32);
  CHECK_THROWS_AS(threshold_region(sd, 0.0, 32), std::invalid_argument);
  CHECK_THROWS_AS(threshold_region(sd, 1.5, 32), std::invalid_argument);
}

TEST_CASE("S_d CSV export") {
  ReducedPhaseDistribution sd;
  sd.sites = 3;
  sd.poly = TrigPolynomial(2);
  sd.poly.add({0, 0}, 1.0 / (4 * kPi * kPi));
  std::ostringstream out;
  write_sd_csv(out, evaluate_on_grid(sd, 8));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# grid=8", 0) == 0);
  std::getline(in, line);
  CHECK(line == "phi1p,phi2p,value");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 64);
}
