#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "nlcm/errors.hpp"

namespace nlcm {

/// Finite-difference weights for the k-th derivative at x0 from values at
/// nodes x (Fornberg's recurrence). Returned weights are for unit spacing
/// when x holds integer offsets; divide by h^k for spacing h.
inline std::vector<double> fornberg_weights(double x0, const std::vector<double>& x, std::size_t k) {
  const std::size_t n = x.size();
  if (n == 0 || k >= n) throw ArityError("stencil needs more than k nodes");
  // c[i][m]: weight of node i for the m-th derivative.
  std::vector<std::vector<double>> c(n, std::vector<double>(k + 1, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min(i, k);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t m = mn; m >= 1; --m) {
          c[i][m] = c1 * (static_cast<double>(m) * c[i - 1][m - 1] - c5 * c[i - 1][m]) / c2;
        }
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (std::size_t m = mn; m >= 1; --m) {
        c[j][m] = (c4 * c[j][m] - static_cast<double>(m) * c[j][m - 1]) / c3;
      }
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = c[i][k];
  return w;
}

/// Symmetric stencil for the k-th derivative with the given (even) order of
/// accuracy. Offsets run from -half_width to +half_width.
struct CentralStencil {
  std::size_t derivative = 1;
  std::size_t half_width = 0;
  std::vector<double> weights;

  static CentralStencil make(std::size_t k, std::size_t accuracy = 4) {
    if (k == 0) throw IndexError("central stencil needs derivative order >= 1");
    if (accuracy == 0 || accuracy % 2 != 0) throw ParameterError("stencil accuracy must be even");
    const std::size_t points = 2 * ((k + 1) / 2) - 1 + accuracy;
    CentralStencil s;
    s.derivative = k;
    s.half_width = (points - 1) / 2;
    std::vector<double> x(points);
    for (std::size_t i = 0; i < points; ++i) {
      x[i] = static_cast<double>(i) - static_cast<double>(s.half_width);
    }
    s.weights = fornberg_weights(0.0, x, k);
    return s;
  }
};

}  // namespace nlcm
