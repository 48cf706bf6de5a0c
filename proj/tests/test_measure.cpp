#include <doctest.h>

#include <cmath>

#include "fluxlim/measure.hpp"

using namespace fluxlim;

namespace {

VelocityMeasure lebesgue32() {
  return make_lebesgue({1, VelocitySetSpec::Shape::Interval, 32});
}

VelocityMeasure two_atoms() { return make_discrete({{-1.0, 0.5}, {1.0, 0.5}}); }

double coth_minus_inv(double b) { return 1.0 / std::tanh(b) - 1.0 / b; }

}  // namespace

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  Eigen::ArrayXd x, w;
  gauss_legendre(5, x, w);
  CHECK(w.sum() == doctest::Approx(2.0).epsilon(1e-15));
  // degree 9 is exact for 5 nodes: int_{-1}^{1} v^8 dv = 2/9
  CHECK((w * x.pow(8)).sum() == doctest::Approx(2.0 / 9.0).epsilon(1e-13));
}

TEST_CASE("lebesgue measure invariants and moments") {
  auto mu = lebesgue32();
  CHECK(std::abs(mu.weights.sum() - 1.0) < 1e-12);
  CHECK(mu.symmetric);
  CHECK(std::abs(moment(mu, 0) - 1.0) < 1e-12);
  CHECK(std::abs(moment(mu, 1)) < 1e-12);
  CHECK(moment(mu, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  CHECK(moment(mu, 4) == doctest::Approx(1.0 / 5.0).epsilon(1e-10));
  // odd monomials up to degree 5 vanish
  CHECK(std::abs(moment(mu, 3)) < 1e-10);
  CHECK(std::abs(moment(mu, 5)) < 1e-10);
  CHECK_THROWS_AS(make_lebesgue({1, VelocitySetSpec::Shape::Interval, 1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(moment(mu, 13), std::invalid_argument);
}

TEST_CASE("2D ball measure") {
  auto mu = make_lebesgue({2, VelocitySetSpec::Shape::Ball, 16});
  CHECK(std::abs(mu.weights.sum() - 1.0) < 1e-12);
  // int v (x) v dmu over the unit ball = I/4
  Eigen::Matrix2d M = moment_tensor(mu);
  CHECK(M(0, 0) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(M(1, 1) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(std::abs(M(0, 1)) < 1e-12);
}

TEST_CASE("discrete measures") {
  auto mu = two_atoms();
  CHECK(moment(mu, 2) == 1.0);
  CHECK(moment(mu, 1) == 0.0);
  CHECK(moment(mu, 6) == 1.0);
  CHECK(mu.symmetric);

  auto single = make_discrete({{0.5, 1.0}});
  CHECK(moment(single, 1) == 0.5);
  CHECK_FALSE(single.symmetric);

  CHECK_THROWS_AS(make_discrete({{0.0, -0.5}, {0.5, 1.5}}), std::invalid_argument);
  CHECK_THROWS_AS(make_discrete({{1.5, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(make_discrete({{0.0, 0.6}}), std::invalid_argument);
}

TEST_CASE("G matches the closed forms") {
  auto leb = lebesgue32();
  auto atoms = two_atoms();

  SUBCASE("two atoms give tanh to machine accuracy over [-50, 50]") {
    double max_err = 0.0;
    for (int k = 0; k <= 1000; ++k) {
      const double b = -50.0 + 0.1 * k;
      max_err = std::max(max_err, std::abs(g_of(atoms, b) - std::tanh(b)));
    }
    CHECK(max_err <= 1e-12);
  }
  SUBCASE("lebesgue gives coth(b) - 1/b") {
    double max_err = 0.0;
    for (int k = 0; k <= 1000; ++k) {
      const double b = -50.0 + 0.1 * k;
      const double ref = b == 0.0 ? 0.0 : coth_minus_inv(b);
      max_err = std::max(max_err, std::abs(g_of(leb, b) - ref));
    }
    CHECK(max_err <= 1e-8);
    CHECK(g_of(leb, 2.0) == doctest::Approx(coth_minus_inv(2.0)).epsilon(1e-8));
  }
  SUBCASE("no overflow far beyond exp range") {
    CHECK(std::isfinite(g_of(atoms, 5000.0)));
    CHECK(g_of(atoms, 5000.0) == doctest::Approx(1.0));
    CHECK(std::isfinite(g_of(leb, -3000.0)));
    CHECK(g_of(leb, 0.0) == doctest::Approx(0.0));
  }
  SUBCASE("odd and bounded on random arguments") {
    for (int k = 1; k <= 40; ++k) {
      const double b = 0.37 * k - 7.5;
      CHECK(std::abs(g_of(leb, b) + g_of(leb, -b)) < 1e-12);
      CHECK(std::abs(g_of(leb, b)) < 1.0);
    }
  }
}

TEST_CASE("check_g_properties") {
  Eigen::ArrayXd betas = Eigen::ArrayXd::LinSpaced(201, -50.0, 50.0);

  SUBCASE("two atoms pass all four checks") {
    auto rep = check_g_properties(two_atoms(), betas, 1e-10);
    CHECK(rep.passed());
    CHECK(rep.items.back().value > 1.0 - 1e-10);  // saturation at 50
  }
  SUBCASE("lebesgue passes (a)-(c); saturation value is coth(50) - 1/50") {
    auto rep = check_g_properties(lebesgue32(), betas, 0.05);
    CHECK(rep.passed());
    CHECK(rep.items.back().value == doctest::Approx(coth_minus_inv(50.0)).epsilon(1e-8));
  }
  SUBCASE("the degenerate single atom at 0 fails monotonicity") {
    auto rep = check_g_properties(make_discrete({{0.0, 1.0}}), betas);
    CHECK_FALSE(rep.passed());
    bool mono_failed = false;
    for (const auto& item : rep.items)
      if (item.name == "strictly-increasing" && !item.pass) mono_failed = true;
    CHECK(mono_failed);
  }
  SUBCASE("rejects an asymmetric or short grid") {
    Eigen::ArrayXd bad = Eigen::ArrayXd::LinSpaced(51, -10.0, 10.0);
    CHECK_THROWS_AS(check_g_properties(two_atoms(), bad), std::invalid_argument);
  }
}

TEST_CASE("moment condition discriminator") {
  SUBCASE("tanh passes at orders 2 and 4 with value 1") {
    auto rep = moment_condition_test([](double b) { return std::tanh(b); }, {2, 4});
    CHECK(rep.passed());
    CHECK(rep.items[0].value == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(rep.items[1].value == doctest::Approx(1.0).epsilon(1e-4));
  }
  SUBCASE("the saturated-drift profile fails at order 4 with value 0") {
    auto rep = moment_condition_test(
        [](double b) { return b / std::sqrt(1.0 + b * b); }, {2, 4});
    CHECK_FALSE(rep.passed());
    CHECK(rep.items[0].pass);  // order 2 gives 1
    CHECK_FALSE(rep.items[1].pass);
    CHECK(std::abs(rep.items[1].value) <= 1e-4);
  }
  SUBCASE("g identically zero fails") {
    auto rep = moment_condition_test([](double) { return 0.0; }, {2, 4});
    CHECK_FALSE(rep.passed());
  }
  SUBCASE("G of any constructed measure passes (realizable by construction)") {
    auto leb = lebesgue32();
    auto rep = moment_condition_test([&](double b) { return g_of(leb, b); }, {2, 4});
    CHECK(rep.passed());
    CHECK(rep.items[0].value == doctest::Approx(1.0 / 3.0).epsilon(1e-4));
    CHECK(rep.items[1].value == doctest::Approx(1.0 / 5.0).epsilon(1e-3));
  }
}

TEST_CASE("exp_integral_of reproduces cosh for g = tanh") {
  // I(beta) = exp(ln cosh beta) = cosh beta
  for (double b : {-0.3, 0.1, 0.25}) {
    CHECK(exp_integral_of([](double s) { return std::tanh(s); }, b) ==
          doctest::Approx(std::cosh(b)).epsilon(1e-13));
  }
}

TEST_CASE("fd_weights reproduces the classic 3-point second derivative") {
  Eigen::VectorXi offs(3);
  offs << -1, 0, 1;
  Eigen::VectorXd w = fd_weights(2, offs);
  CHECK(w[0] == doctest::Approx(1.0));
  CHECK(w[1] == doctest::Approx(-2.0));
  CHECK(w[2] == doctest::Approx(1.0));
}
