#pragma once

// Test-only helpers: closed-form solutions, random polynomial Lagrangians with
// a generic second-order closure, and random polynomial perturbation families.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "nlcm/nlcm.hpp"

namespace nlcm::testing {

/// Jets of q = cos(w t) (n = 1) up to order `count - 1`.
inline std::vector<Vector> cos_jets(double t, std::size_t count, double w = 1.0) {
  std::vector<Vector> out;
  for (std::size_t j = 0; j < count; ++j) {
    const double phase = w * t + 0.5 * M_PI * static_cast<double>(j);
    out.push_back({std::pow(w, static_cast<double>(j)) * std::cos(phase)});
  }
  return out;
}

/// Jets of the planar circle q = (cos t, sin t) up to order `count - 1`.
inline std::vector<Vector> circle_jets(double t, std::size_t count) {
  std::vector<Vector> out;
  for (std::size_t j = 0; j < count; ++j) {
    const double phase = t + 0.5 * M_PI * static_cast<double>(j);
    out.push_back({std::cos(phase), std::sin(phase)});
  }
  return out;
}

/// Closed-form trajectory of q = cos t for an order-N system on [a, b].
inline Trajectory cos_trajectory(std::size_t order, double a, double b, std::size_t nodes = 2001) {
  return sample_trajectory(
      order, [order](double t) { return cos_jets(t, 2 * order + 1); }, a, b, nodes);
}

/// Explicit closure q'' = H^{-1}(dL/dq - M q') for an autonomous first-order
/// Lagrangian given as a generic callable, with H = d2L/dq'dq' and
/// M = d2L/dq'dq from nested duals. Test helper; small n only.
template <class F>
Closure newtonian_closure(F f, std::size_t n) {
  return [f, n](double t, JetView<double> q) {
    using D2 = Dual<Dual<double>>;
    auto second = [&](std::size_t slot_a, std::size_t a, std::size_t slot_b, std::size_t b) {
      std::vector<D2> x;
      for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t c = 0; c < n; ++c) x.emplace_back(Dual<double>(q[s][c]), Dual<double>(0.0));
      }
      x[slot_a * n + a].v.d += 1.0;
      x[slot_b * n + b].d.v += 1.0;
      const D2 r = f(t, JetView<D2>(x, n));
      return r.d.d;
    };
    auto first = [&](std::size_t c) {
      std::vector<Dual<double>> x;
      for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t i = 0; i < n; ++i) x.emplace_back(q[s][i]);
      }
      x[c].d = 1.0;
      return f(t, JetView<Dual<double>>(x, n)).d;
    };
    std::vector<double> h(n * n), rhs(n);
    for (std::size_t a = 0; a < n; ++a) {
      rhs[a] = first(a);
      for (std::size_t b = 0; b < n; ++b) {
        h[a * n + b] = second(1, a, 1, b);
        rhs[a] -= second(1, a, 0, b) * q[1][b];
      }
    }
    // Gaussian elimination, n is tiny.
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t p = c;
      for (std::size_t r = c + 1; r < n; ++r) {
        if (std::abs(h[r * n + c]) > std::abs(h[p * n + c])) p = r;
      }
      for (std::size_t k = 0; k < n; ++k) std::swap(h[c * n + k], h[p * n + k]);
      std::swap(rhs[c], rhs[p]);
      for (std::size_t r = c + 1; r < n; ++r) {
        const double m = h[r * n + c] / h[c * n + c];
        for (std::size_t k = c; k < n; ++k) h[r * n + k] -= m * h[c * n + k];
        rhs[r] -= m * rhs[c];
      }
    }
    Vector acc(n);
    for (std::size_t c = n; c-- > 0;) {
      double v = rhs[c];
      for (std::size_t k = c + 1; k < n; ++k) v -= h[c * n + k] * acc[k];
      acc[c] = v / h[c * n + c];
    }
    return acc;
  };
}

/// Coefficients of a random first-order polynomial Lagrangian (n = 1)
///   L = a q'^2/2 + e q'^4 + b q q' + c q^2 q' + sum_{p=1}^{4} v_p q^p
/// with all coefficients in [-1, 1], a >= 0.5 and e >= 0 (so d2L/dq'^2 > 0)
/// and v_4 <= -0.1 (confining, so solutions exist on [0, 5]).
struct PolyLagrangian {
  double a, e, b, c;
  double v[5];

  template <class T>
  T operator()(double, const JetView<T>& q) const {
    const T& x = q[0][0];
    const T& y = q[1][0];
    const T y2 = y * y;
    T pot = v[4] * x;
    for (int p = 3; p >= 1; --p) pot = (pot + v[p]) * x;
    return 0.5 * a * y2 + e * y2 * y2 + b * x * y + c * x * x * y + pot;
  }

  static PolyLagrangian random(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PolyLagrangian l{};
    l.a = 0.5 + 0.5 * std::abs(u(rng));
    l.e = 0.1 * std::abs(u(rng));
    l.b = u(rng);
    l.c = u(rng);
    l.v[0] = 0.0;
    for (int p = 1; p <= 3; ++p) l.v[p] = u(rng);
    l.v[4] = -0.1 - 0.9 * std::abs(u(rng));
    return l;
  }

  LagrangianSpec spec() const {
    const PolyLagrangian self = *this;
    return LagrangianSpec::from_generic(
        1, 1, [self](double t, const auto& q) { return self(t, q); }, newtonian_closure(self, 1),
        {"poly", true});
  }
};

/// Family q_lambda = q + lambda p(t), p a cubic with coefficients in [-1, 1]
/// per coordinate: delta^(j) = p^(j)(t).
inline PerturbationFamily random_polynomial_family(std::mt19937_64& rng, std::size_t n,
                                                   const std::string& name) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::vector<double>> coeff(n, std::vector<double>(4));
  for (auto& c : coeff) {
    for (auto& x : c) x = u(rng);
  }
  return PerturbationFamily(name, [coeff](const JetState& s, std::size_t max_order) {
    Variation out(max_order + 1, Vector(coeff.size(), 0.0));
    for (std::size_t c = 0; c < coeff.size(); ++c) {
      for (std::size_t j = 0; j <= max_order; ++j) {
        double acc = 0.0;
        for (std::size_t i = j; i < 4; ++i) {
          double fall = 1.0;
          for (std::size_t k = 0; k < j; ++k) fall *= static_cast<double>(i - k);
          acc += coeff[c][i] * fall * std::pow(s.t, static_cast<double>(i - j));
        }
        out[j][c] = acc;
      }
    }
    return out;
  });
}

}  // namespace nlcm::testing
