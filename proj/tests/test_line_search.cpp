#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "givens/line_search.hpp"
#include "support/oracles.hpp"

using givens::line_minimize_periodic;
using givens::pi;

TEST(LineSearch, CosinePicksPeriodEndpointByTieRule) {
  auto r = line_minimize_periodic([](double t) { return std::cos(t); });
  EXPECT_EQ(r.theta, -pi);
  EXPECT_NEAR(r.value, -1.0, 1e-15);
}

TEST(LineSearch, UniqueQuadraticMinimum) {
  auto g = [](double t) { return (t - 0.4) * (t - 0.4); };
  auto r = line_minimize_periodic(g, 1e-10);
  EXPECT_NEAR(r.theta, 0.4, 1e-9);
}

TEST(LineSearch, ConstantFunctionReturnsSmallestAngle) {
  auto r = line_minimize_periodic([](double) { return 2.5; });
  EXPECT_EQ(r.theta, -pi);
  EXPECT_EQ(r.value, 2.5);
}

TEST(LineSearch, NonFiniteValueThrowsWithAngle) {
  auto g = [](double t) { return t > 1.0 ? std::numeric_limits<double>::quiet_NaN() : t * t; };
  try {
    line_minimize_periodic(g);
    FAIL() << "expected numeric_error";
  } catch (const givens::numeric_error& e) {
    EXPECT_GT(e.theta(), 1.0);
  }
}

TEST(LineSearch, DeterministicGivenFunction) {
  auto g = [](double t) { return std::sin(3.0 * t) + 0.3 * std::cos(t); };
  auto a = line_minimize_periodic(g);
  auto b = line_minimize_periodic(g);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(LineSearch, BeatsEveryGridPoint) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> coef;
  for (int rep = 0; rep < 30; ++rep) {
    const double c3 = coef(rng), s3 = coef(rng), c1 = coef(rng), s1 = coef(rng);
    auto g = [=](double t) {
      const double c = std::cos(t), s = std::sin(t);
      return c3 * c * c * c + s3 * s * s * s + c1 * c + s1 * s;
    };
    auto r = line_minimize_periodic(g);
    const double step = 2.0 * pi / 32.0;
    for (int k = 0; k < 32; ++k) {
      EXPECT_LE(r.value, g(-pi + k * step) + 1e-10);
    }
  }
}

// Cubic trigonometric polynomials of the shape produced by the tensor
// restriction, checked against a dense grid oracle.
TEST(LineSearch, MatchesDenseGridOnTrigPolynomials) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> coef;
  for (int rep = 0; rep < 10; ++rep) {
    const double c3 = coef(rng), s3 = coef(rng), c1 = coef(rng), s1 = coef(rng);
    auto g = [=](double t) {
      const double c = std::cos(t), s = std::sin(t);
      return c3 * c * c * c + s3 * s * s * s + c1 * c + s1 * s;
    };
    auto r = line_minimize_periodic(g, 1e-10);
    const double oracle = oracles::grid_min_value(g, 1000000L);
    EXPECT_LE(r.value, oracle + 1e-9);
  }
}
