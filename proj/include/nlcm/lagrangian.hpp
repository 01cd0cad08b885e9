#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlcm/dual.hpp"
#include "nlcm/errors.hpp"
#include "nlcm/jet.hpp"
#include "nlcm/stencil.hpp"
#include "nlcm/trajectory.hpp"

namespace nlcm {

struct LagrangianTraits {
  std::string name;
  bool autonomous = false;  // L does not depend on t explicitly
};

/// Scalar Lagrangian L(t, q, q', ..., q^(N)) with q in R^n.
///
/// Stores the evaluation map twice: over doubles and over first-order duals,
/// which is what partial_wrt_jet differentiates. from_generic() builds both
/// from one generic callable `f(double t, JetView<T> q) -> T`.
class LagrangianSpec {
 public:
  using RealEval = std::function<double(double, JetView<double>)>;
  using DualEval = std::function<Dual<double>(double, JetView<Dual<double>>)>;

  using Traits = LagrangianTraits;

  LagrangianSpec(std::size_t order, std::size_t dim, RealEval eval, DualEval eval_dual,
                 Closure closure = {}, Traits traits = {})
      : order_(order),
        dim_(dim),
        eval_(std::move(eval)),
        eval_dual_(std::move(eval_dual)),
        closure_(std::move(closure)),
        traits_(std::move(traits)) {
    if (order_ == 0) throw OrderError("Lagrangian order must be >= 1");
    if (dim_ == 0) throw DimensionError("Lagrangian dimension must be >= 1");
    if (!eval_ || !eval_dual_) throw ArityError("Lagrangian needs an evaluation map");
  }

  template <class F>
  static LagrangianSpec from_generic(std::size_t order, std::size_t dim, F f, Closure closure = {},
                                     Traits traits = {}) {
    RealEval real = [f](double t, JetView<double> q) { return static_cast<double>(f(t, q)); };
    DualEval dual = [f](double t, JetView<Dual<double>> q) { return Dual<double>(f(t, q)); };
    return LagrangianSpec(order, dim, std::move(real), std::move(dual), std::move(closure),
                          std::move(traits));
  }

  std::size_t order() const { return order_; }
  std::size_t dim() const { return dim_; }
  bool autonomous() const { return traits_.autonomous; }
  const std::string& name() const { return traits_.name; }
  bool has_closure() const { return static_cast<bool>(closure_); }
  const Closure& closure() const { return closure_; }
  const RealEval& real_eval() const { return eval_; }
  const DualEval& dual_eval() const { return eval_dual_; }

 private:
  std::size_t order_;
  std::size_t dim_;
  RealEval eval_;
  DualEval eval_dual_;
  Closure closure_;
  Traits traits_;
};

namespace detail {

inline void check_state(const LagrangianSpec& spec, const JetState& state) {
  if (state.jets.size() < spec.order() + 1) {
    throw ArityError("state carries jets up to order " + std::to_string(state.order()) +
                     ", Lagrangian needs " + std::to_string(spec.order()));
  }
  if (state.dim() != spec.dim()) throw DimensionError("state dimension differs from Lagrangian");
}

}  // namespace detail

inline double eval_lagrangian(const LagrangianSpec& spec, const JetState& state) {
  detail::check_state(spec, state);
  const auto flat = flatten_jets<double>(state, spec.order() + 1);
  const double v = spec.real_eval()(state.t, JetView<double>(flat, spec.dim()));
  if (!std::isfinite(v)) throw NumericError("Lagrangian evaluated to a non-finite value");
  return v;
}

/// All partials dL/dq^(j), j = 0..N, one dual pass per coordinate.
inline std::vector<Vector> jet_gradient(const LagrangianSpec& spec, const JetState& state) {
  detail::check_state(spec, state);
  const std::size_t n = spec.dim();
  const std::size_t slots = spec.order() + 1;
  auto flat = flatten_jets<Dual<double>>(state, slots);
  std::vector<Vector> grad(slots, Vector(n));
  for (std::size_t idx = 0; idx < flat.size(); ++idx) {
    flat[idx].d = 1.0;
    grad[idx / n][idx % n] = spec.dual_eval()(state.t, JetView<Dual<double>>(flat, n)).d;
    flat[idx].d = 0.0;
  }
  return grad;
}

/// dL/dq^(j) as an n-vector (forward-mode, one pass per coordinate).
inline Vector partial_wrt_jet(const LagrangianSpec& spec, const JetState& state, std::size_t j) {
  if (j > spec.order()) throw IndexError("jet slot " + std::to_string(j) + " exceeds order");
  detail::check_state(spec, state);
  const std::size_t n = spec.dim();
  auto flat = flatten_jets<Dual<double>>(state, spec.order() + 1);
  Vector out(n);
  for (std::size_t c = 0; c < n; ++c) {
    flat[j * n + c].d = 1.0;
    out[c] = spec.dual_eval()(state.t, JetView<Dual<double>>(flat, n)).d;
    flat[j * n + c].d = 0.0;
  }
  return out;
}

/// Finite-difference settings for total time derivatives along dense output.
/// The step for a k-th derivative balances truncation (h^accuracy) against
/// noise / h^k: h = max(min_step, noise^(1/(k+accuracy))).
struct StencilOptions {
  std::size_t accuracy = 4;
  /// Noise level of the differentiated data; defaults to the trajectory's.
  std::optional<double> noise;
  double min_step = 1e-3;

  double step(std::size_t k, const Trajectory& traj) const {
    const double eps = noise.value_or(traj.noise_level());
    const double h = std::pow(eps, 1.0 / static_cast<double>(k + accuracy));
    return std::max(min_step, h);
  }
};

/// Half-width in time of the stencil used for the k-th derivative.
inline double stencil_clearance(const Trajectory& traj, std::size_t k,
                                const StencilOptions& opts = {}) {
  if (k == 0) return 0.0;
  return static_cast<double>(CentralStencil::make(k, opts.accuracy).half_width) * opts.step(k, traj);
}

/// k-th total time derivative of s -> f(sample_jets(traj, s)) at t, by a
/// direct central k-th-derivative stencil (no nesting of first derivatives).
template <class F>
Vector total_derivative_along(const Trajectory& traj, F&& f, std::size_t k, double t,
                              const StencilOptions& opts = {}) {
  if (k == 0) return f(traj.sample_jets(t));
  const auto stencil = CentralStencil::make(k, opts.accuracy);
  const double h = opts.step(k, traj);
  const double reach = static_cast<double>(stencil.half_width) * h;
  if (t - reach < traj.t_min() || t + reach > traj.t_max()) {
    throw SpanError("derivative stencil around t = " + std::to_string(t) +
                    " leaves the trajectory span");
  }
  Vector acc;
  const double scale = 1.0 / std::pow(h, static_cast<double>(k));
  for (std::size_t i = 0; i < stencil.weights.size(); ++i) {
    const double w = stencil.weights[i];
    if (w == 0.0) continue;
    const double offset = static_cast<double>(i) - static_cast<double>(stencil.half_width);
    const Vector v = f(traj.sample_jets(t + offset * h));
    if (acc.empty()) acc.assign(v.size(), 0.0);
    for (std::size_t c = 0; c < v.size(); ++c) acc[c] += w * v[c];
  }
  for (double& x : acc) x *= scale;
  return acc;
}

/// sum_{k=0}^{N} (-1)^k d^k/dt^k dL/dq^(k) at t; vanishes on solutions.
inline Vector el_residual(const LagrangianSpec& spec, const Trajectory& traj, double t,
                          const StencilOptions& opts = {}) {
  if (traj.dim() != spec.dim()) throw DimensionError("trajectory dimension differs from Lagrangian");
  Vector res(spec.dim(), 0.0);
  for (std::size_t k = 0; k <= spec.order(); ++k) {
    const Vector term = total_derivative_along(
        traj, [&](const JetState& s) { return partial_wrt_jet(spec, s, k); }, k, t, opts);
    const double sign = k % 2 == 0 ? 1.0 : -1.0;
    for (std::size_t c = 0; c < res.size(); ++c) res[c] += sign * term[c];
  }
  return res;
}

}  // namespace nlcm
