#include <cmath>

#include <gtest/gtest.h>

#include "nlcm/dual.hpp"

namespace nlcm {
namespace {

using D = Dual<double>;

TEST(Dual, ProductAndQuotientRules) {
  const D x{3.0, 1.0};
  const D f = x * x * x - 2.0 * x + 1.0;
  EXPECT_DOUBLE_EQ(f.v, 22.0);
  EXPECT_DOUBLE_EQ(f.d, 25.0);  // 3x^2 - 2
  const D g = 1.0 / x;
  EXPECT_DOUBLE_EQ(g.d, -1.0 / 9.0);
}

TEST(Dual, ElementaryFunctionsMatchCentralDifferences) {
  auto check = [](auto fn, double x0) {
    const double h = 1e-6;
    const double fd = (fn(x0 + h) - fn(x0 - h)) / (2 * h);
    const D r = fn(D{x0, 1.0});
    EXPECT_NEAR(r.d, fd, 1e-7 * std::max(1.0, std::abs(fd)));
  };
  for (double x0 : {0.3, 1.1, 2.5}) {
    check([](auto x) { return sqrt(x); }, x0);
    check([](auto x) { return exp(x) * sin(x); }, x0);
    check([](auto x) { return log(x) / cos(x); }, x0);
    check([](auto x) { return pow(x, 2.5); }, x0);
    check([](auto x) { return pow(x, 3); }, x0);
  }
}

TEST(Dual, IntegerPowerAtZeroHasExactDerivative) {
  const D z{0.0, 1.0};
  EXPECT_EQ(pow(z, 1).d, 1.0);
  EXPECT_EQ(pow(z, 2).d, 0.0);
}

TEST(Dual, NestedDualsGiveSecondDerivatives) {
  using D2 = Dual<Dual<double>>;
  // f(x, y) = x^2 y^3 at (2, 1): f_xy = 6 x y^2 = 12, f_xx = 2 y^3 = 2.
  const D2 x{Dual<double>(2.0, 1.0), Dual<double>(1.0, 0.0)};
  const D2 y{Dual<double>(1.0, 0.0), Dual<double>(0.0, 0.0)};
  const D2 f = x * x * y * y * y;
  EXPECT_DOUBLE_EQ(f.d.d, 2.0);
  const D2 x2{Dual<double>(2.0, 1.0), Dual<double>(0.0, 0.0)};
  const D2 y2{Dual<double>(1.0, 0.0), Dual<double>(1.0, 0.0)};
  EXPECT_DOUBLE_EQ((x2 * x2 * y2 * y2 * y2).d.d, 12.0);
}

TEST(Dual, ComparisonsUseValues) {
  EXPECT_TRUE(D(1.0, 5.0) < D(2.0, -5.0));
  EXPECT_TRUE(D(1.0, 5.0) > 0.5);
  EXPECT_DOUBLE_EQ(value_of(Dual<D>(D(4.0, 1.0))), 4.0);
}

}  // namespace
}  // namespace nlcm
