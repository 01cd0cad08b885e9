#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "nlcm/stencil.hpp"

namespace nlcm {
namespace {

void expect_weights(const CentralStencil& s, const std::vector<double>& expected) {
  ASSERT_EQ(s.weights.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_NEAR(s.weights[i], expected[i], 1e-12) << "weight " << i;
  }
}

// Standard fourth-order central tables.
TEST(Stencil, MatchesFourthOrderTables) {
  expect_weights(CentralStencil::make(1), {1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12});
  expect_weights(CentralStencil::make(2), {-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12});
  expect_weights(CentralStencil::make(3), {1.0 / 8, -1.0, 13.0 / 8, 0.0, -13.0 / 8, 1.0, -1.0 / 8});
  expect_weights(CentralStencil::make(4),
                 {-1.0 / 6, 2.0, -13.0 / 2, 28.0 / 3, -13.0 / 2, 2.0, -1.0 / 6});
}

TEST(Stencil, DifferentiatesPolynomialsWithinAccuracyExactly) {
  // A 4th-order stencil for the k-th derivative is exact on degree k+3.
  for (std::size_t k = 1; k <= 4; ++k) {
    const auto s = CentralStencil::make(k);
    const std::size_t deg = k + 3;
    const double h = 0.25;
    const double x0 = 0.7;
    double acc = 0.0;
    for (std::size_t i = 0; i < s.weights.size(); ++i) {
      const double x = x0 + (static_cast<double>(i) - static_cast<double>(s.half_width)) * h;
      acc += s.weights[i] * std::pow(x, static_cast<double>(deg));
    }
    acc /= std::pow(h, static_cast<double>(k));
    double expected = 1.0;
    for (std::size_t i = 0; i < k; ++i) expected *= static_cast<double>(deg - i);
    expected *= std::pow(x0, static_cast<double>(deg - k));
    EXPECT_NEAR(acc, expected, 1e-9 * std::abs(expected)) << "k = " << k;
  }
}

TEST(Stencil, RejectsBadRequests) {
  EXPECT_THROW(CentralStencil::make(0), IndexError);
  EXPECT_THROW(CentralStencil::make(1, 3), ParameterError);
  EXPECT_THROW(fornberg_weights(0.0, {0.0, 1.0}, 2), ArityError);
}

}  // namespace
}  // namespace nlcm
