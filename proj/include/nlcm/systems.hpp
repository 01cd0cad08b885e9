#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>

#include "nlcm/dual.hpp"
#include "nlcm/errors.hpp"
#include "nlcm/jet.hpp"
#include "nlcm/lagrangian.hpp"
#include "nlcm/potential.hpp"

// Catalog of concrete systems with explicit closures, plus closed-form first
// integrals of the Pais-Uhlenbeck oscillator. The closed forms are written out
// independently of the generic evaluators in constants.hpp so each can check
// the other.

namespace nlcm {

/// L = q'^2/2 - q^2/2 (n = 1), closure q'' = -q.
inline LagrangianSpec make_harmonic() {
  return LagrangianSpec::from_generic(
      1, 1, [](double, const auto& q) { return 0.5 * q[1][0] * q[1][0] - 0.5 * q[0][0] * q[0][0]; },
      [](double, JetView<double> q) { return Vector{-q[0][0]}; }, {"harmonic", true});
}

/// L = |q'|^2/2, closure q'' = 0.
inline LagrangianSpec make_free_particle(std::size_t dim = 1) {
  return LagrangianSpec::from_generic(
      1, dim, [](double, const auto& q) { return 0.5 * squared_norm(q[1]); },
      [dim](double, JetView<double>) { return Vector(dim, 0.0); }, {"free_particle", true});
}

/// Planar particle in a central field: L = m|q'|^2/2 - U(t, |q|).
inline LagrangianSpec make_central_force(double m, RadialPotential u) {
  if (!(m > 0)) throw ParameterError("mass must be > 0");
  auto real = [m, u](double t, JetView<double> q) {
    return 0.5 * m * squared_norm(q[1]) - u.value(t, std::sqrt(squared_norm(q[0])));
  };
  auto dual = [m, u](double t, JetView<Dual<double>> q) {
    const Dual<double> r = sqrt(squared_norm(q[0]));
    const Dual<double> pot{u.value(t, r.v), u.derivative(t, r.v) * r.d};
    return 0.5 * m * squared_norm(q[1]) - pot;
  };
  auto closure = [m, u](double t, JetView<double> q) {
    const double r = std::sqrt(squared_norm(q[0]));
    Vector acc(2, 0.0);
    if (r == 0.0) return acc;
    const double f = -u.derivative(t, r) / (m * r);
    acc[0] = f * q[0][0];
    acc[1] = f * q[0][1];
    return acc;
  };
  return LagrangianSpec(1, 2, real, dual, closure, {"central_force", false});
}

/// Viscous damping m q'' = -k q' - grad U(q) as the Euler-Lagrange equation of
/// L = e^{kt/m} (m|q'|^2/2 - U(q)).
inline LagrangianSpec make_viscous(double m, double k, Potential u, std::size_t dim) {
  if (!(m > 0)) throw ParameterError("mass must be > 0");
  if (!(k >= 0)) throw ParameterError("viscous coefficient must be >= 0");
  if (dim == 0) throw DimensionError("dimension must be >= 1");
  auto real = [m, k, u](double t, JetView<double> q) {
    return std::exp(k * t / m) * (0.5 * m * squared_norm(q[1]) - u(q[0]));
  };
  auto dual = [m, k, u](double t, JetView<Dual<double>> q) {
    return std::exp(k * t / m) * (0.5 * m * squared_norm(q[1]) - u(q[0]));
  };
  auto closure = [m, k, u](double, JetView<double> q) {
    Vector acc = u.gradient(q[0]);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = (-k * q[1][i] - acc[i]) / m;
    return acc;
  };
  return LagrangianSpec(1, dim, real, dual, closure, {"viscous", k == 0.0});
}

/// Pais-Uhlenbeck oscillator
///   L = |q''|^2/2 - (w1^2 + w2^2)|q'|^2/2 + w1^2 w2^2 |q|^2/2,
/// closure q'''' = -(w1^2 + w2^2) q'' - w1^2 w2^2 q.
inline LagrangianSpec make_pais_uhlenbeck(double w1, double w2, std::size_t dim = 1) {
  if (!(w1 > 0) || !(w2 > 0)) throw ParameterError("Pais-Uhlenbeck frequencies must be > 0");
  if (dim == 0) throw DimensionError("dimension must be >= 1");
  const double s = w1 * w1 + w2 * w2;
  const double p = w1 * w1 * w2 * w2;
  return LagrangianSpec::from_generic(
      2, dim,
      [s, p](double, const auto& q) {
        return 0.5 * squared_norm(q[2]) - 0.5 * s * squared_norm(q[1]) + 0.5 * p * squared_norm(q[0]);
      },
      [s, p](double, JetView<double> q) {
        Vector out(q.dim());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = -s * q[2][i] - p * q[0][i];
        return out;
      },
      {"pais_uhlenbeck", true});
}

namespace detail {

inline void require_pu_jets(const JetState& s) {
  if (s.jets.size() < 4) throw ArityError("Pais-Uhlenbeck integrals need jets up to order 3");
}

}  // namespace detail

/// K1 = (|q''|^2 - (w1^2+w2^2)|q'|^2 - 2 q'''.q' - w1^2 w2^2 |q|^2) / 2.
inline double pu_k1(const JetState& st, double w1, double w2) {
  detail::require_pu_jets(st);
  const auto& q = st.jets;
  const double s = w1 * w1 + w2 * w2;
  const double p = w1 * w1 * w2 * w2;
  return 0.5 * (squared_norm(q[2]) - s * squared_norm(q[1]) - 2.0 * dot(q[3], q[1]) -
                p * squared_norm(q[0]));
}

/// K2 = ((w1^4 + w1^2 w2^2 + w2^4)|q'|^2 + |q'''|^2 + 2 w1^2 w2^2 q.q''
///       + (w1^2+w2^2)(2 q'''.q' + w1^2 w2^2 |q|^2)) / 2.
inline double pu_k2(const JetState& st, double w1, double w2) {
  detail::require_pu_jets(st);
  const auto& q = st.jets;
  const double a = w1 * w1;
  const double b = w2 * w2;
  return 0.5 * ((a * a + a * b + b * b) * squared_norm(q[1]) + squared_norm(q[3]) +
                2.0 * a * b * dot(q[0], q[2]) +
                (a + b) * (2.0 * dot(q[3], q[1]) + a * b * squared_norm(q[0])));
}

/// K3 = (w1^2+w2^2) det(q', q) + det(q', q'') + det(q''', q), planar only.
inline double pu_k3(const JetState& st, double w1, double w2) {
  detail::require_pu_jets(st);
  if (st.dim() != 2) throw DimensionError("K3 is defined for planar motion (n = 2)");
  const auto& q = st.jets;
  return (w1 * w1 + w2 * w2) * det2(q[1], q[0]) + det2(q[1], q[2]) + det2(q[3], q[0]);
}

}  // namespace nlcm
