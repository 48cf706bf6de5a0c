#include <doctest.h>

#include <cmath>

#include "fluxlim/diag.hpp"
#include "fluxlim/macro.hpp"

using namespace fluxlim;

namespace {
SpatialGrid grid8(int n = 256) {
  SpatialGrid g;
  g.xmin = -4.0;
  g.xmax = 4.0;
  g.nx = n;
  return g;
}
}  // namespace

TEST_CASE("total_mass") {
  auto g = grid8();
  Eigen::ArrayXd ones = Eigen::ArrayXd::Ones(g.nx);
  CHECK(total_mass(ones, g) == doctest::Approx(8.0).epsilon(1e-13));
  CHECK(total_mass(Eigen::ArrayXd::Zero(g.nx), g) == 0.0);

  // half-domain indicator: mass 4 up to one cell
  Eigen::ArrayXd half(g.nx);
  for (int i = 0; i < g.nx; ++i) half[i] = g.x_center(i) < 0.0 ? 1.0 : 0.0;
  CHECK(std::abs(total_mass(half, g) - 4.0) <= g.dx());

  // linearity
  CHECK(total_mass((2.0 * ones).eval(), g) == doctest::Approx(16.0).epsilon(1e-13));
}

TEST_CASE("total_variation") {
  Eigen::ArrayXd ramp = Eigen::ArrayXd::LinSpaced(100, 0.0, 1.0);
  CHECK(total_variation(ramp) == doctest::Approx(1.0).epsilon(1e-13));
  Eigen::ArrayXd bump = Eigen::ArrayXd::Zero(100);
  bump.segment(40, 20).setConstant(3.0);
  CHECK(total_variation(bump) == doctest::Approx(6.0));
  CHECK(total_variation(Eigen::ArrayXd::Zero(50)) == 0.0);
}

TEST_CASE("front_position") {
  auto g = grid8(512);
  SUBCASE("indicator of [-1, 1]") {
    Eigen::ArrayXd c(g.nx);
    for (int i = 0; i < g.nx; ++i)
      c[i] = std::abs(g.x_center(i)) <= 1.0 ? 1.0 : 0.0;
    auto fr = front_position(c, g, 1e-3);
    REQUIRE(fr.has_value());
    CHECK(std::abs(fr->left + 1.0) <= g.dx());
    CHECK(std::abs(fr->right - 1.0) <= g.dx());
  }
  SUBCASE("zero field has no front") {
    CHECK_FALSE(front_position(Eigen::ArrayXd::Zero(g.nx), g, 1e-3).has_value());
  }
  SUBCASE("gaussian at threshold 1e-3 sits near sqrt(ln 1000)") {
    Eigen::ArrayXd c(g.nx);
    for (int i = 0; i < g.nx; ++i) c[i] = std::exp(-g.x_center(i) * g.x_center(i));
    auto fr = front_position(c, g, 1e-3);
    REQUIRE(fr.has_value());
    const double x_star = std::sqrt(std::log(1000.0));  // 2.6283...
    CHECK(std::abs(fr->right - x_star) <= 2.0 * g.dx());
    CHECK(std::abs(fr->left + x_star) <= 2.0 * g.dx());
  }
  SUBCASE("monotone in the threshold") {
    Eigen::ArrayXd c(g.nx);
    for (int i = 0; i < g.nx; ++i) c[i] = std::exp(-g.x_center(i) * g.x_center(i));
    auto wide = front_position(c, g, 1e-3);
    auto narrow = front_position(c, g, 1e-1);
    REQUIRE(wide.has_value());
    REQUIRE(narrow.has_value());
    CHECK(narrow->right <= wide->right);
    CHECK(narrow->left >= wide->left);
  }
}

TEST_CASE("front_speed") {
  FrontSeries s;
  SUBCASE("exact linear motion fits slope 1") {
    for (int k = 0; k < 20; ++k)
      s.append(0.1 * k + 0.1, FrontInterval{-1.0, 0.1 * k}, 0.0);
    CHECK(front_speed(s) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("stationary front fits slope 0") {
    for (int k = 0; k < 20; ++k)
      s.append(0.1 * k + 0.1, FrontInterval{-1.0, 2.0}, 0.0);
    CHECK(std::abs(front_speed(s)) < 1e-12);
  }
  SUBCASE("too few samples throws") {
    for (int k = 0; k < 4; ++k) s.append(0.1 * k + 0.1, FrontInterval{0, 0}, 0.0);
    CHECK_THROWS_AS(front_speed(s), std::invalid_argument);
  }
  SUBCASE("non-increasing times rejected") {
    s.append(0.1, FrontInterval{0, 0}, 0.0);
    CHECK_THROWS_AS(s.append(0.1, FrontInterval{0, 0}, 0.0), std::invalid_argument);
  }
}
