#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>

#include "nlcm/dual.hpp"
#include "nlcm/jet.hpp"

namespace nlcm {

/// Potential U(q) on R^n given by value and gradient callbacks.
struct Potential {
  std::string name;
  std::function<double(std::span<const double>)> value;
  std::function<Vector(std::span<const double>)> gradient;

  double operator()(std::span<const double> q) const { return value(q); }

  /// U along a dual-valued point: derivative part is grad U . dq.
  Dual<double> operator()(std::span<const Dual<double>> q) const {
    Vector v(q.size()), d(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
      v[i] = q[i].v;
      d[i] = q[i].d;
    }
    const Vector g = gradient(v);
    return {value(v), dot(g, d)};
  }
};

/// Radial potential U(t, r) with its r-derivative.
struct RadialPotential {
  std::string name;
  std::function<double(double t, double r)> value;
  std::function<double(double t, double r)> derivative;
};

inline Potential zero_potential() {
  return {"zero", [](std::span<const double>) { return 0.0; },
          [](std::span<const double> q) { return Vector(q.size(), 0.0); }};
}

/// U = stiffness/2 |q|^2.
inline Potential quadratic_potential(double stiffness = 1.0) {
  return {"quadratic",
          [stiffness](std::span<const double> q) { return 0.5 * stiffness * squared_norm(q); },
          [stiffness](std::span<const double> q) {
            Vector g(q.begin(), q.end());
            for (double& x : g) x *= stiffness;
            return g;
          }};
}

/// U = c |q|^4 (c < 0 makes U unbounded below).
inline Potential quartic_potential(double c) {
  return {"quartic",
          [c](std::span<const double> q) {
            const double r2 = squared_norm(q);
            return c * r2 * r2;
          },
          [c](std::span<const double> q) {
            const double r2 = squared_norm(q);
            Vector g(q.begin(), q.end());
            for (double& x : g) x *= 4.0 * c * r2;
            return g;
          }};
}

inline RadialPotential zero_radial() {
  return {"zero", [](double, double) { return 0.0; }, [](double, double) { return 0.0; }};
}

/// U(r) = stiffness/2 r^2.
inline RadialPotential quadratic_radial(double stiffness = 1.0) {
  return {"quadratic", [stiffness](double, double r) { return 0.5 * stiffness * r * r; },
          [stiffness](double, double r) { return stiffness * r; }};
}

/// U(r) = c r^4.
inline RadialPotential quartic_radial(double c) {
  return {"quartic", [c](double, double r) { return c * r * r * r * r; },
          [c](double, double r) { return 4.0 * c * r * r * r; }};
}

}  // namespace nlcm
