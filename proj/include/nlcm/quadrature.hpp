#pragma once

#include <cmath>
#include <cstdlib>

namespace nlcm {

namespace detail {

// Five-point Gauss-Lobatto rule on [a, b]; exact for degree <= 7.
template <class F>
double lobatto5(F& f, double a, double b, double fa, double fb) {
  constexpr double x1 = 0.6546536707079771437982925;  // sqrt(3/7)
  constexpr double w0 = 1.0 / 10.0;
  constexpr double w1 = 49.0 / 90.0;
  constexpr double w2 = 32.0 / 45.0;
  const double c = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  return r * (w0 * (fa + fb) + w1 * (f(c - r * x1) + f(c + r * x1)) + w2 * f(c));
}

template <class F>
double lobatto_recurse(F& f, double a, double b, double fa, double fb, double whole, double tol,
                       int depth) {
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double left = lobatto5(f, a, m, fa, fm);
  const double right = lobatto5(f, m, b, fm, fb);
  const double refined = left + right;
  if (depth <= 0 || std::abs(refined - whole) <= tol) return refined;
  return lobatto_recurse(f, a, m, fa, fm, left, 0.5 * tol, depth - 1) +
         lobatto_recurse(f, m, b, fm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive composite Gauss-Lobatto quadrature of f over [a, b]; b < a gives
/// the signed (negated) integral. `tol` bounds the absolute error estimate.
template <class F>
double adaptive_lobatto(F&& f, double a, double b, double tol, int max_depth = 30) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double whole = detail::lobatto5(f, a, b, fa, fb);
  return detail::lobatto_recurse(f, a, b, fa, fb, whole, tol, max_depth);
}

}  // namespace nlcm
