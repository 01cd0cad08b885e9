#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nlcm/errors.hpp"
#include "nlcm/jet.hpp"
#include "nlcm/lagrangian.hpp"
#include "nlcm/trajectory.hpp"

namespace nlcm {

/// Variation jets delta^(j) = d/dlambda q_lambda^(j)(t) at lambda = 0, j = 0..J.
using Variation = std::vector<Vector>;

/// Computes the variation jets from the local state (which carries t).
/// Callbacks must be reentrant: they run concurrently on shared trajectories.
using VariationFn = std::function<Variation(const JetState& state, std::size_t max_order)>;

/// A one-parameter family of perturbed motions, represented only by its
/// first variation at lambda = 0. `mu`, when set, claims that dL/dlambda at
/// lambda = 0 is the constant mu along motions; it is validated, not trusted.
class PerturbationFamily {
 public:
  PerturbationFamily(std::string name, VariationFn fn, std::optional<double> mu = std::nullopt)
      : name_(std::move(name)), fn_(std::move(fn)), mu_(mu) {
    if (!fn_) throw ArityError("perturbation family needs a variation map");
  }

  const std::string& name() const { return name_; }
  const std::optional<double>& mu() const { return mu_; }

  PerturbationFamily with_mu(double mu) const {
    PerturbationFamily f = *this;
    f.mu_ = mu;
    return f;
  }

  Variation variation(const JetState& state, std::size_t max_order) const {
    Variation v = fn_(state, max_order);
    if (v.size() < max_order + 1) throw ArityError("family returned too few variation jets");
    return v;
  }

  Variation variation(const Trajectory& traj, double t, std::size_t max_order) const {
    return variation(traj.sample_jets(t), max_order);
  }

 private:
  std::string name_;
  VariationFn fn_;
  std::optional<double> mu_;
};

namespace detail {

inline void require_jets(const JetState& s, std::size_t highest) {
  if (s.order() < highest) {
    throw ArityError("variation needs jets up to order " + std::to_string(highest) + ", state has " +
                     std::to_string(s.order()));
  }
}

}  // namespace detail

/// Rotation generator applied to each jet: delta^(j) = G q^(j), G(x, y) = (-y, x).
inline Variation rotation_variation(const JetState& s, std::size_t max_order) {
  if (s.dim() != 2) throw DimensionError("rotation family is planar (n = 2)");
  detail::require_jets(s, max_order);
  Variation out(max_order + 1, Vector(2));
  for (std::size_t j = 0; j <= max_order; ++j) {
    out[j][0] = -s.jets[j][1];
    out[j][1] = s.jets[j][0];
  }
  return out;
}

/// q_lambda(t) = q(t + lambda): delta^(j) = q^(j+1).
inline Variation timeshift_variation(const JetState& s, std::size_t max_order) {
  detail::require_jets(s, max_order + 1);
  return Variation(s.jets.begin() + 1, s.jets.begin() + static_cast<std::ptrdiff_t>(max_order) + 2);
}

/// q_lambda(t) = q(t + lambda e^{a t}): delta = e^{at} q', higher jets by Leibniz.
inline Variation exp_timeshift_variation(const JetState& s, std::size_t max_order, double a) {
  detail::require_jets(s, max_order + 1);
  const std::size_t n = s.dim();
  const double e = std::exp(a * s.t);
  Variation out(max_order + 1, Vector(n, 0.0));
  for (std::size_t j = 0; j <= max_order; ++j) {
    double binom = 1.0;  // C(j, i)
    for (std::size_t i = 0; i <= j; ++i) {
      const double coef = binom * std::pow(a, static_cast<double>(j - i)) * e;
      for (std::size_t c = 0; c < n; ++c) out[j][c] += coef * s.jets[i + 1][c];
      binom = binom * static_cast<double>(j - i) / static_cast<double>(i + 1);
    }
  }
  return out;
}

inline Variation rotation_variation(const Trajectory& traj, double t, std::size_t max_order) {
  return rotation_variation(traj.sample_jets(t), max_order);
}

inline Variation timeshift_variation(const Trajectory& traj, double t, std::size_t max_order) {
  return timeshift_variation(traj.sample_jets(t), max_order);
}

inline Variation exp_timeshift_variation(const Trajectory& traj, double t, std::size_t max_order,
                                         double a) {
  return exp_timeshift_variation(traj.sample_jets(t), max_order, a);
}

inline PerturbationFamily rotation_family(std::optional<double> mu = std::nullopt) {
  return PerturbationFamily("rotation", [](const JetState& s, std::size_t j) {
    return rotation_variation(s, j);
  }, mu);
}

inline PerturbationFamily timeshift_family() {
  return PerturbationFamily("timeshift", [](const JetState& s, std::size_t j) {
    return timeshift_variation(s, j);
  });
}

inline PerturbationFamily exp_timeshift_family(double a) {
  return PerturbationFamily("exp_timeshift(a=" + std::to_string(a) + ")",
                            [a](const JetState& s, std::size_t j) {
                              return exp_timeshift_variation(s, j, a);
                            });
}

/// delta == 0.
inline PerturbationFamily null_family(std::size_t dim) {
  return PerturbationFamily("null", [dim](const JetState&, std::size_t j) {
    return Variation(j + 1, Vector(dim, 0.0));
  }, 0.0);
}

/// dL/dlambda at lambda = 0: sum_{j=0}^{N} dL/dq^(j) . delta^(j).
inline double integrand(const LagrangianSpec& spec, const PerturbationFamily& fam,
                        const JetState& state) {
  const auto grad = jet_gradient(spec, state);
  const auto delta = fam.variation(state, spec.order());
  double acc = 0.0;
  for (std::size_t j = 0; j <= spec.order(); ++j) {
    if (delta[j].size() != spec.dim()) throw DimensionError("variation dimension differs from Lagrangian");
    acc += dot(grad[j], delta[j]);
  }
  return acc;
}

inline double integrand(const LagrangianSpec& spec, const PerturbationFamily& fam,
                        const Trajectory& traj, double t) {
  return integrand(spec, fam, traj.sample_jets(t));
}

/// max |integrand - mu| over `count` times spread uniformly over the span.
/// Throws when the family carries no mu.
inline double mu_residual(const LagrangianSpec& spec, const PerturbationFamily& fam,
                          const Trajectory& traj, std::size_t count = 50) {
  if (!fam.mu()) throw HypothesisError("family '" + fam.name() + "' carries no mu");
  double worst = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = traj.t0() + (traj.t_end() - traj.t0()) * static_cast<double>(i) /
                                     static_cast<double>(std::max<std::size_t>(count - 1, 1));
    worst = std::max(worst, std::abs(integrand(spec, fam, traj, t) - *fam.mu()));
  }
  return worst;
}

}  // namespace nlcm
