#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nlcm/errors.hpp"
#include "nlcm/families.hpp"
#include "nlcm/jet.hpp"
#include "nlcm/lagrangian.hpp"
#include "nlcm/quadrature.hpp"
#include "nlcm/trajectory.hpp"

namespace nlcm {

enum class Direction { forward, backward };

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-10;
  double initial_step = 1e-3;
  std::size_t max_steps = 10'000'000;
  /// Optional; when set it must agree with the sign of t_end - t0.
  std::optional<Direction> direction;
  /// Any state norm above this is reported as blow-up.
  double blowup_norm = 1e100;
  /// A step-size underflow after the state norm grew by this factor over its
  /// initial value is reported as blow-up rather than stiffness.
  double blowup_growth = 1e6;

  void validate() const {
    if (!(rel_tol > 0) || !(abs_tol > 0)) throw ParameterError("tolerances must be > 0");
    if (max_steps == 0) throw ParameterError("max_steps must be > 0");
    if (!(initial_step > 0)) throw ParameterError("initial_step must be > 0");
  }
};

/// Counters from the last integration.
struct IntegratorStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evaluations = 0;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct DormandPrince {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  // b - b* (fifth minus embedded fourth order weights)
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

// y = (q, q', ..., q^(2N-1)) flattened; y' = (q', ..., q^(2N-1), closure).
class FirstOrderSystem {
 public:
  FirstOrderSystem(const Closure& closure, std::size_t order, std::size_t dim)
      : closure_(closure), order_(order), dim_(dim) {}

  std::size_t size() const { return 2 * order_ * dim_; }

  void operator()(double t, const std::vector<double>& y, std::vector<double>& dy) const {
    const std::size_t shift = dim_;
    std::copy(y.begin() + static_cast<std::ptrdiff_t>(shift), y.end(), dy.begin());
    const Vector top = closure_(t, JetView<double>(y, dim_));
    if (top.size() != dim_) throw DimensionError("closure returned a vector of wrong dimension");
    std::copy(top.begin(), top.end(), dy.end() - static_cast<std::ptrdiff_t>(dim_));
  }

  JetState node(double t, const std::vector<double>& y, const std::vector<double>& dy) const {
    JetState s;
    s.t = t;
    s.jets.reserve(2 * order_ + 1);
    for (std::size_t j = 0; j < 2 * order_; ++j) {
      s.jets.emplace_back(y.begin() + static_cast<std::ptrdiff_t>(j * dim_),
                          y.begin() + static_cast<std::ptrdiff_t>((j + 1) * dim_));
    }
    s.jets.emplace_back(dy.end() - static_cast<std::ptrdiff_t>(dim_), dy.end());
    return s;
  }

 private:
  const Closure& closure_;
  std::size_t order_;
  std::size_t dim_;
};

inline double inf_norm(const std::vector<double>& y) {
  double m = 0.0;
  for (double x : y) m = std::max(m, std::abs(x));
  return m;
}

inline bool all_finite(const std::vector<double>& y) {
  return std::all_of(y.begin(), y.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace detail

/// Integrates the explicit closure of an order-N Euler-Lagrange equation from
/// `initial` (jets 0..2N-1, extra jets ignored) to t_end, forward or backward.
/// Adaptive Dormand-Prince 5(4) with error-per-unit-step control; every
/// accepted step becomes a trajectory node storing jets 0..2N.
inline Trajectory integrate(const LagrangianSpec& spec, const JetState& initial, double t_end,
                            const IntegratorConfig& cfg = {}, IntegratorStats* stats = nullptr) {
  using DP = detail::DormandPrince;
  cfg.validate();
  if (!spec.has_closure()) throw ArityError("integrate needs a Lagrangian with an explicit closure");
  const std::size_t order = spec.order();
  const std::size_t n = spec.dim();
  if (initial.jets.size() < 2 * order) throw ArityError("initial state needs jets 0..2N-1");
  if (initial.dim() != n) throw DimensionError("initial state dimension differs from Lagrangian");
  validate(initial);
  if (!std::isfinite(t_end) || t_end == initial.t) throw ParameterError("t_end must differ from t0");
  const double sign = t_end > initial.t ? 1.0 : -1.0;
  if (cfg.direction && ((*cfg.direction == Direction::forward) != (sign > 0))) {
    throw ParameterError("integration direction disagrees with t_end");
  }

  const detail::FirstOrderSystem sys(spec.closure(), order, n);
  const std::size_t dim = sys.size();
  std::vector<double> y = flatten_jets<double>(initial, 2 * order);
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
  std::vector<double> tmp(dim), y_new(dim), err(dim);

  // Counters reach the caller on every exit path, including failures.
  struct StatsSink {
    IntegratorStats* out;
    IntegratorStats counts;
    ~StatsSink() {
      if (out) *out = counts;
    }
  } sink{stats, {}};
  IntegratorStats& local = sink.counts;
  double t = initial.t;
  sys(t, y, k1);
  ++local.rhs_evaluations;
  if (!detail::all_finite(k1)) throw BlowUpError("non-finite derivative at the initial state", t);

  std::vector<JetState> nodes;
  nodes.push_back(sys.node(t, y, k1));
  const double y0_norm = std::max(1.0, detail::inf_norm(y));

  double h = sign * std::min(cfg.initial_step, std::abs(t_end - t));
  bool last_rejected = false;
  std::size_t attempts = 0;

  auto stage = [&](std::vector<double>& out, double tt, auto&& combine) {
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * combine(i);
    sys(tt, tmp, out);
    ++local.rhs_evaluations;
  };

  while (sign * (t_end - t) > 0) {
    if (++attempts > cfg.max_steps) {
      throw StepUnderflowError("maximum number of steps exceeded", t);
    }
    if (sign * (t + h - t_end) > 0) h = t_end - t;
    const double h_floor = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    if (std::abs(h) < h_floor) {
      const double norm = detail::inf_norm(y);
      if (norm > cfg.blowup_growth * y0_norm) {
        throw BlowUpError("solution escapes to infinity (step size underflow at |y| = " +
                              std::to_string(norm) + ")",
                          t);
      }
      throw StepUnderflowError("step size underflow", t);
    }

    bool finite = true;
    try {
      stage(k2, t + DP::c2 * h, [&](std::size_t i) { return DP::a21 * k1[i]; });
      stage(k3, t + DP::c3 * h, [&](std::size_t i) { return DP::a31 * k1[i] + DP::a32 * k2[i]; });
      stage(k4, t + DP::c4 * h, [&](std::size_t i) {
        return DP::a41 * k1[i] + DP::a42 * k2[i] + DP::a43 * k3[i];
      });
      stage(k5, t + DP::c5 * h, [&](std::size_t i) {
        return DP::a51 * k1[i] + DP::a52 * k2[i] + DP::a53 * k3[i] + DP::a54 * k4[i];
      });
      stage(k6, t + h, [&](std::size_t i) {
        return DP::a61 * k1[i] + DP::a62 * k2[i] + DP::a63 * k3[i] + DP::a64 * k4[i] +
               DP::a65 * k5[i];
      });
      for (std::size_t i = 0; i < dim; ++i) {
        y_new[i] = y[i] + h * (DP::b1 * k1[i] + DP::b3 * k3[i] + DP::b4 * k4[i] + DP::b5 * k5[i] +
                               DP::b6 * k6[i]);
      }
      sys(t + h, y_new, k7);
      ++local.rhs_evaluations;
    } catch (const NumericError&) {
      finite = false;
    }

    double err_norm = std::numeric_limits<double>::infinity();
    if (finite && detail::all_finite(y_new) && detail::all_finite(k7)) {
      err_norm = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        // Error per unit step: global error then scales like tol^(5/4).
        const double e = (DP::e1 * k1[i] + DP::e3 * k3[i] + DP::e4 * k4[i] + DP::e5 * k5[i] +
                              DP::e6 * k6[i] + DP::e7 * k7[i]);
        const double scale = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        err_norm = std::max(err_norm, std::abs(e) / scale);
      }
    }

    if (err_norm <= 1.0) {
      t += h;
      y.swap(y_new);
      k1.swap(k7);
      nodes.push_back(sys.node(t, y, k1));
      ++local.accepted;
      if (detail::inf_norm(y) > cfg.blowup_norm) {
        throw BlowUpError("state norm exceeded the blow-up threshold", nodes[nodes.size() - 2].t);
      }
      double factor = err_norm == 0.0 ? 5.0 : 0.9 * std::pow(err_norm, -0.25);
      factor = std::clamp(factor, 0.2, 5.0);
      if (last_rejected) factor = std::min(factor, 1.0);
      h *= factor;
      last_rejected = false;
    } else {
      ++local.rejected;
      const double factor =
          std::isfinite(err_norm) ? std::clamp(0.9 * std::pow(err_norm, -0.25), 0.2, 1.0) : 0.2;
      h *= factor;
      last_rejected = true;
    }
  }

  Trajectory traj(order, std::move(nodes), spec.closure());
  traj.set_tolerance(std::max(cfg.rel_tol, cfg.abs_tol));
  return traj;
}

/// Attaches I(t_i) = int_{t0}^{t_i} f(s) ds, integrating each step of the
/// dense output with adaptive Gauss-Lobatto to absolute tolerance `tol`.
/// Signed for backward trajectories.
inline Trajectory attach_quadrature(const Trajectory& traj, std::string label,
                                    ScalarIntegrand f, double tol = 1e-11) {
  const auto& nodes = traj.samples();
  std::vector<double> values(nodes.size(), 0.0);
  auto g = [&](double s) { return f(traj.sample_jets(s)); };
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    values[i + 1] = values[i] + adaptive_lobatto(g, nodes[i].t, nodes[i + 1].t, tol);
  }
  return traj.with_quadrature(QuadratureChannel{std::move(label), std::move(values), std::move(f), tol});
}

/// Attaches the nonlocal integral term of the constant associated with `fam`.
inline Trajectory attach_quadrature(const Trajectory& traj, const LagrangianSpec& spec,
                                    const PerturbationFamily& fam, double tol = 1e-11) {
  if (traj.dim() != spec.dim()) throw DimensionError("trajectory dimension differs from Lagrangian");
  return attach_quadrature(traj, fam.name(),
                           [spec, fam](const JetState& s) { return integrand(spec, fam, s); }, tol);
}

}  // namespace nlcm
