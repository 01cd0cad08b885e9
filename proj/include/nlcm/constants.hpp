#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nlcm/errors.hpp"
#include "nlcm/families.hpp"
#include "nlcm/integrate.hpp"
#include "nlcm/jet.hpp"
#include "nlcm/lagrangian.hpp"
#include "nlcm/potential.hpp"
#include "nlcm/trajectory.hpp"

namespace nlcm {

/// Two-term value of a nonlocal constant of motion at time t.
struct NonlocalSample {
  double t = 0.0;
  double boundary_term = 0.0;
  double integral_term = 0.0;  // I(t) = int_{t0}^{t} dL/dlambda ds
  double value = 0.0;          // boundary_term - integral_term
};

namespace detail {

inline void require_quadrature_for(const Trajectory& traj, const std::string& label) {
  if (!traj.quadrature()) throw ArityError("trajectory has no quadrature attached");
  if (traj.quadrature()->label != label) {
    throw ArityError("attached quadrature is for '" + traj.quadrature()->label + "', not '" + label +
                     "'");
  }
}

inline void add_scaled(Vector& acc, double w, const Vector& v) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * v[i];
}

}  // namespace detail

/// sum_{j=1}^{N} sum_{k=0}^{j-1} (-1)^k d^k/dt^k (dL/dq^(j)) . delta^(j-k-1) at t.
inline double nonlocal_boundary_term(const LagrangianSpec& spec, const PerturbationFamily& fam,
                                     const Trajectory& traj, double t,
                                     const StencilOptions& opts = {}) {
  const std::size_t order = spec.order();
  const JetState here = traj.sample_jets(t);
  const Variation delta = fam.variation(here, order - 1);
  double acc = 0.0;
  for (std::size_t j = 1; j <= order; ++j) {
    auto partial = [&](const JetState& s) { return partial_wrt_jet(spec, s, j); };
    for (std::size_t k = 0; k < j; ++k) {
      const Vector d = k == 0 ? partial(here) : total_derivative_along(traj, partial, k, t, opts);
      const double sign = k % 2 == 0 ? 1.0 : -1.0;
      acc += sign * dot(d, delta[j - k - 1]);
    }
  }
  return acc;
}

/// Constant of motion of a first-order Lagrangian associated with `fam`:
/// dL/dq' . delta - I(t). Needs the family's quadrature attached.
inline NonlocalSample nonlocal_constant_2nd(const LagrangianSpec& spec, const PerturbationFamily& fam,
                                            const Trajectory& traj, double t) {
  if (spec.order() != 1) throw OrderError("nonlocal_constant_2nd needs a first-order Lagrangian");
  detail::require_quadrature_for(traj, fam.name());
  const JetState here = traj.sample_jets(t);
  const Variation delta = fam.variation(here, 0);
  NonlocalSample out;
  out.t = t;
  out.boundary_term = 0.0;
  out.boundary_term += dot(partial_wrt_jet(spec, here, 1), delta[0]);
  out.integral_term = traj.integral_at(t);
  out.value = out.boundary_term - out.integral_term;
  return out;
}

/// Order-N generalization; for N = 1 it performs the same arithmetic as
/// nonlocal_constant_2nd and agrees bit for bit.
inline NonlocalSample nonlocal_constant_higher(const LagrangianSpec& spec,
                                               const PerturbationFamily& fam,
                                               const Trajectory& traj, double t,
                                               const StencilOptions& opts = {}) {
  detail::require_quadrature_for(traj, fam.name());
  NonlocalSample out;
  out.t = t;
  out.boundary_term = nonlocal_boundary_term(spec, fam, traj, t, opts);
  out.integral_term = traj.integral_at(t);
  out.value = out.boundary_term - out.integral_term;
  return out;
}

/// E = dL/dq' . q' - L for first-order Lagrangians.
inline double energy(const LagrangianSpec& spec, const JetState& state) {
  if (spec.order() != 1) throw OrderError("energy is defined for first-order Lagrangians");
  return dot(partial_wrt_jet(spec, state, 1), state.jets[1]) - eval_lagrangian(spec, state);
}

/// Time-shift first integral of an autonomous order-N Lagrangian:
/// sum_{i=1}^{N} sum_{k=0}^{i-1} (-1)^k d^k/dt^k (dL/dq^(i)) . q^(i-k) - L.
inline double k1_timeshift(const LagrangianSpec& spec, const Trajectory& traj, double t,
                           const StencilOptions& opts = {}, bool enforce_hypotheses = true) {
  if (enforce_hypotheses && !spec.autonomous()) {
    throw HypothesisError("K1 needs a time-independent Lagrangian");
  }
  const JetState here = traj.sample_jets(t);
  double acc = 0.0;
  for (std::size_t i = 1; i <= spec.order(); ++i) {
    auto partial = [&](const JetState& s) { return partial_wrt_jet(spec, s, i); };
    for (std::size_t k = 0; k < i; ++k) {
      const Vector d = k == 0 ? partial(here) : total_derivative_along(traj, partial, k, t, opts);
      const double sign = k % 2 == 0 ? 1.0 : -1.0;
      acc += sign * dot(d, here.jets[i - k]);
    }
  }
  return acc - eval_lagrangian(spec, here);
}

/// Constant parameters rho_1..rho_N of the space-change first integral.
struct RhoParams {
  std::vector<double> rho;
};

/// F^(0) = sum_{j=1}^{N} (-1)^{j+1} d^{j-1}/dt^{j-1} dL/dq^(j);
/// F^(l) = d^{l-1}/dt^{l-1} dL/dq for 1 <= l <= 2N.
inline Vector compute_F(const LagrangianSpec& spec, const Trajectory& traj, double t, std::size_t ell,
                        const StencilOptions& opts = {}) {
  const std::size_t order = spec.order();
  if (ell > 2 * order) throw IndexError("F index exceeds 2N");
  if (ell == 0) {
    Vector acc(spec.dim(), 0.0);
    for (std::size_t j = 1; j <= order; ++j) {
      const Vector d = total_derivative_along(
          traj, [&](const JetState& s) { return partial_wrt_jet(spec, s, j); }, j - 1, t, opts);
      detail::add_scaled(acc, j % 2 == 1 ? 1.0 : -1.0, d);
    }
    return acc;
  }
  return total_derivative_along(
      traj, [&](const JetState& s) { return partial_wrt_jet(spec, s, 0); }, ell - 1, t, opts);
}

/// max over trajectory nodes (with stencil clearance) and i = 1..N of
/// |dL/dq^(i) - rho_i d^i/dt^i dL/dq|.
inline double check_rho_condition(const LagrangianSpec& spec, const RhoParams& rho,
                                  const Trajectory& traj, const StencilOptions& opts = {}) {
  const std::size_t order = spec.order();
  if (rho.rho.size() != order) throw ArityError("need one rho per Lagrangian order");
  const double clearance = stencil_clearance(traj, order, opts);
  double worst = 0.0;
  std::size_t used = 0;
  auto dq = [&](const JetState& s) { return partial_wrt_jet(spec, s, 0); };
  for (const auto& node : traj.samples()) {
    if (node.t - clearance < traj.t_min() || node.t + clearance > traj.t_max()) continue;
    ++used;
    for (std::size_t i = 1; i <= order; ++i) {
      Vector diff = partial_wrt_jet(spec, node, i);
      detail::add_scaled(diff, -rho.rho[i - 1], total_derivative_along(traj, dq, i, node.t, opts));
      worst = std::max(worst, norm(diff));
    }
  }
  if (used == 0) throw SpanError("trajectory too short for the rho-condition stencils");
  return worst;
}

/// rho values that passed check_rho_condition on a given trajectory, or were
/// explicitly accepted without checking.
class ValidatedRho {
 public:
  static ValidatedRho check(const LagrangianSpec& spec, const RhoParams& rho, const Trajectory& traj,
                            double tol = 1e-5, const StencilOptions& opts = {}) {
    const double r = check_rho_condition(spec, rho, traj, opts);
    if (!(r <= tol)) {
      throw HypothesisError("rho condition violated: residual " + std::to_string(r) + " > " +
                            std::to_string(tol));
    }
    return ValidatedRho(rho, r);
  }

  /// Skips validation (exploration override).
  static ValidatedRho unchecked(const RhoParams& rho) { return ValidatedRho(rho, std::nullopt); }

  const RhoParams& params() const { return rho_; }
  const std::optional<double>& residual() const { return residual_; }

 private:
  ValidatedRho(RhoParams rho, std::optional<double> residual)
      : rho_(std::move(rho)), residual_(residual) {}

  RhoParams rho_;
  std::optional<double> residual_;
};

/// Space-change first integral
///   sum_i rho_i [ sum_{k=0}^{i-1} (-1)^k F^(i+k+1).F^(i-k-1) - |F^(i)|^2/2 ] - |F^(0)|^2/2.
inline double k2_space(const LagrangianSpec& spec, const ValidatedRho& rho, const Trajectory& traj,
                       double t, const StencilOptions& opts = {}) {
  const std::size_t order = spec.order();
  const auto& r = rho.params().rho;
  if (r.size() != order) throw ArityError("need one rho per Lagrangian order");
  std::vector<Vector> f(2 * order + 1);
  for (std::size_t ell = 0; ell <= 2 * order; ++ell) f[ell] = compute_F(spec, traj, t, ell, opts);
  double acc = 0.0;
  for (std::size_t i = 1; i <= order; ++i) {
    double inner = 0.0;
    for (std::size_t k = 0; k < i; ++k) {
      const double sign = k % 2 == 0 ? 1.0 : -1.0;
      inner += sign * dot(f[i + k + 1], f[i - k - 1]);
    }
    inner -= 0.5 * squared_norm(f[i]);
    acc += r[i - 1] * inner;
  }
  return acc - 0.5 * squared_norm(f[0]);
}

/// First integral for a family with constant dL/dlambda = mu: the boundary
/// term minus mu t. Validates mu on 50 times unless told not to.
inline double k3_mu(const LagrangianSpec& spec, const PerturbationFamily& fam,
                    const Trajectory& traj, double t, const StencilOptions& opts = {},
                    bool enforce_hypotheses = true, double mu_tol = 1e-6) {
  if (!fam.mu()) throw HypothesisError("family '" + fam.name() + "' carries no mu");
  const double mu = *fam.mu();
  if (enforce_hypotheses) {
    const double r = mu_residual(spec, fam, traj, 50);
    if (!(r <= mu_tol * std::max(1.0, std::abs(mu)))) {
      throw HypothesisError("dL/dlambda is not the constant mu: residual " + std::to_string(r));
    }
  }
  return nonlocal_boundary_term(spec, fam, traj, t, opts) - mu * t;
}

/// Parameters of the damped system m q'' = -k q' - grad U(q).
struct ViscousParams {
  double m = 1.0;
  double k = 0.0;
  Potential u;

  std::string quadrature_label() const {
    return "viscous(m=" + std::to_string(m) + ",k=" + std::to_string(k) + ")";
  }
};

/// Attaches I(t) = int_{t0}^{t} e^{2ks/m} U(q(s)) ds.
inline Trajectory attach_viscous_quadrature(const Trajectory& traj, const ViscousParams& p,
                                            double tol = 1e-11) {
  return attach_quadrature(traj, p.quadrature_label(),
                           [p](const JetState& s) {
                             return std::exp(2.0 * p.k * s.t / p.m) * p.u(s.jets[0]);
                           },
                           tol);
}

/// e^{2kt/m} (m|q'|^2 + 2U(q)), the quantity that increases for t <= t0.
inline double viscous_energy_weighted(const ViscousParams& p, const JetState& s) {
  return std::exp(2.0 * p.k * s.t / p.m) * (p.m * squared_norm(s.jets[1]) + 2.0 * p.u(s.jets[0]));
}

/// e^{2kt/m}(m|q'|^2 + 2U) + 4(k/m) int_t^{t0} e^{2ks/m} U(q(s)) ds, constant
/// along solutions. Needs attach_viscous_quadrature.
inline double viscous_constant(const ViscousParams& p, const Trajectory& traj, double t) {
  detail::require_quadrature_for(traj, p.quadrature_label());
  const JetState s = traj.sample_jets(t);
  // int_t^{t0} = -I(t)
  return viscous_energy_weighted(p, s) + 4.0 * (p.k / p.m) * (-traj.integral_at(t));
}

struct MonotonicityResult {
  bool monotone = true;
  std::optional<double> first_violation;  // time of the first decreasing step
  bool estimate_holds = true;
  std::optional<double> first_estimate_violation;
};

/// Checks, on a backward trajectory, that e^{2kt/m}(m|q'|^2 + 2U) is
/// nondecreasing in t (per-step tolerance `tol`) and the velocity estimate
///   m|q'(t)|^2 <= e^{2k(t0-t)/m} (m|q'(t0)|^2 + 2U(q(t0))).
/// U >= 0 is validated at every node unless `enforce_hypotheses` is false.
inline MonotonicityResult monotonicity_check(const ViscousParams& p, const Trajectory& traj,
                                             double tol = 1e-9, bool enforce_hypotheses = true) {
  if (traj.forward()) throw ParameterError("monotonicity_check expects a backward trajectory");
  const auto& nodes = traj.samples();
  if (enforce_hypotheses) {
    for (const auto& s : nodes) {
      if (p.u(s.jets[0]) < 0.0) {
        throw HypothesisError("potential is negative at t = " + std::to_string(s.t));
      }
    }
  }
  MonotonicityResult out;
  const JetState& start = nodes.front();
  const double t0 = start.t;
  const double budget = p.m * squared_norm(start.jets[1]) + 2.0 * p.u(start.jets[0]);
  // Nodes run backward in time: node i+1 is earlier than node i.
  double later = viscous_energy_weighted(p, start);
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const double earlier = viscous_energy_weighted(p, nodes[i]);
    if (out.monotone && later - earlier < -tol) {
      out.monotone = false;
      out.first_violation = nodes[i].t;
    }
    later = earlier;
    const double lhs = p.m * squared_norm(nodes[i].jets[1]);
    const double rhs = std::exp(2.0 * p.k * (t0 - nodes[i].t) / p.m) * budget;
    if (out.estimate_holds && lhs > rhs + tol * std::max(1.0, rhs)) {
      out.estimate_holds = false;
      out.first_estimate_violation = nodes[i].t;
    }
  }
  return out;
}

}  // namespace nlcm
