#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlcm/errors.hpp"
#include "nlcm/jet.hpp"
#include "nlcm/quadrature.hpp"

namespace nlcm {

/// Explicit closure of an order-N Euler-Lagrange equation: maps
/// (t, q, ..., q^(2N-1)) to q^(2N).
using Closure = std::function<Vector(double t, JetView<double> jets)>;

/// Scalar function of the local state, integrated along a trajectory.
using ScalarIntegrand = std::function<double(const JetState&)>;

/// Accumulated integral I(t) = int_{t0}^{t} integrand(s) ds, stored at the
/// trajectory nodes. The integrand is kept so I can be evaluated between nodes.
struct QuadratureChannel {
  std::string label;
  std::vector<double> node_values;
  ScalarIntegrand integrand;
  double tol = 1e-11;
};

namespace detail {

// Two-point Hermite interpolation with m conditions per endpoint on s in [0,1].
// The lower m monomial coefficients come straight from the left data; the
// upper m solve a fixed m x m system whose inverse is cached here.
class HermiteBasis {
 public:
  explicit HermiteBasis(std::size_t m) : m_(m), inverse_(m * m, 0.0) {
    // A(j, i) = d^j/ds^j s^(m+i) at s = 1 = falling factorial (m+i)_j.
    std::vector<double> a(m * m);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < m; ++i) a[j * m + i] = falling(m + i, j);
    }
    for (std::size_t i = 0; i < m; ++i) inverse_[i * m + i] = 1.0;
    // Gauss-Jordan with partial pivoting.
    for (std::size_t col = 0; col < m; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < m; ++r) {
        if (std::abs(a[r * m + col]) > std::abs(a[piv * m + col])) piv = r;
      }
      for (std::size_t c = 0; c < m; ++c) {
        std::swap(a[col * m + c], a[piv * m + c]);
        std::swap(inverse_[col * m + c], inverse_[piv * m + c]);
      }
      const double p = a[col * m + col];
      for (std::size_t c = 0; c < m; ++c) {
        a[col * m + c] /= p;
        inverse_[col * m + c] /= p;
      }
      for (std::size_t r = 0; r < m; ++r) {
        if (r == col) continue;
        const double f = a[r * m + col];
        if (f == 0.0) continue;
        for (std::size_t c = 0; c < m; ++c) {
          a[r * m + c] -= f * a[col * m + c];
          inverse_[r * m + c] -= f * inverse_[col * m + c];
        }
      }
    }
  }

  std::size_t conditions() const { return m_; }

  // left[j], right[j]: j-th s-derivative at s = 0 and s = 1. Returns the 2m
  // monomial coefficients.
  void coefficients(std::span<const double> left, std::span<const double> right,
                    std::span<double> out) const {
    const std::size_t m = m_;
    double fact = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j > 0) fact *= static_cast<double>(j);
      out[j] = left[j] / fact;
    }
    std::vector<double> rhs(m);
    for (std::size_t j = 0; j < m; ++j) {
      double known = 0.0;
      for (std::size_t i = j; i < m; ++i) known += out[i] * falling(i, j);
      rhs[j] = right[j] - known;
    }
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += inverse_[i * m + j] * rhs[j];
      out[m + i] = acc;
    }
  }

  static double falling(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    double r = 1.0;
    for (std::size_t i = 0; i < k; ++i) r *= static_cast<double>(n - i);
    return r;
  }

 private:
  std::size_t m_;
  std::vector<double> inverse_;
};

// k-th derivative of sum_i c[i] s^i.
inline double poly_derivative(std::span<const double> c, std::size_t k, double s) {
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > k;) {
    acc = acc * s + c[i] * HermiteBasis::falling(i, k);
  }
  return acc;
}

}  // namespace detail

/// Solution samples of an order-N Euler-Lagrange equation with dense output.
///
/// Nodes store jets q, ..., q^(K) (K >= 2N-1; the integrator stores K = 2N,
/// the last slot coming from the closure). Between nodes each jet channel
/// q^(j) is a two-point Hermite polynomial through q^(j), ..., q^(K) at both
/// ends (cubic for the highest integrated channel). Sample times are strictly
/// increasing or strictly decreasing; t0 is the first sample.
///
/// Immutable once built. Copies share the sample storage.
class Trajectory {
 public:
  Trajectory(std::size_t order, std::vector<JetState> samples, Closure closure = {})
      : order_(order), closure_(std::move(closure)) {
    if (order == 0) throw OrderError("Lagrangian order must be >= 1");
    if (samples.size() < 2) throw ArityError("trajectory needs at least two samples");
    const std::size_t slots = samples.front().jets.size();
    if (slots < 2 * order) throw ArityError("trajectory nodes need jets up to order 2N-1");
    for (const auto& s : samples) {
      validate(s);
      if (s.jets.size() != slots) throw ArityError("trajectory nodes differ in jet count");
      if (s.dim() != samples.front().dim()) throw DimensionError("trajectory nodes differ in dimension");
    }
    const bool forward = samples[1].t > samples[0].t;
    for (std::size_t i = 1; i < samples.size(); ++i) {
      const bool ok = forward ? samples[i].t > samples[i - 1].t : samples[i].t < samples[i - 1].t;
      if (!ok) throw ArityError("trajectory sample times must be strictly monotone");
    }
    forward_ = forward;
    samples_ = std::make_shared<const std::vector<JetState>>(std::move(samples));
    for (std::size_t k = 1; k <= slots; ++k) {
      bases_.push_back(std::make_shared<const detail::HermiteBasis>(k));
    }
  }

  std::size_t order() const { return order_; }
  std::size_t dim() const { return samples_->front().dim(); }
  /// Number of jet slots available from sample_jets (K + 1).
  std::size_t jet_slots() const { return samples_->front().jets.size(); }
  double t0() const { return samples_->front().t; }
  double t_end() const { return samples_->back().t; }
  double t_min() const { return forward_ ? t0() : t_end(); }
  double t_max() const { return forward_ ? t_end() : t0(); }
  bool forward() const { return forward_; }
  bool contains(double t) const { return t >= t_min() && t <= t_max(); }
  const std::vector<JetState>& samples() const { return *samples_; }
  const Closure& closure() const { return closure_; }

  /// Interpolated state at t; exact at nodes.
  JetState sample_jets(double t) const {
    if (!(t >= t_min() && t <= t_max())) {
      throw SpanError("time " + std::to_string(t) + " outside trajectory span [" +
                      std::to_string(t_min()) + ", " + std::to_string(t_max()) + "]");
    }
    const std::size_t i = segment_index(t);
    const auto& a = (*samples_)[i];
    const auto& b = (*samples_)[i + 1];
    if (t == a.t) return a;
    if (t == b.t) return b;
    return interpolate(a, b, t);
  }

  /// Local error tolerance the samples were produced with, if known.
  const std::optional<double>& tolerance() const { return tolerance_; }
  void set_tolerance(double tol) { tolerance_ = tol; }

  /// Effective noise of the dense output as seen by FD stencils. The global
  /// error of an integrated run is smooth in t and cancels in differences;
  /// what is left is the per-step mismatch, measured at ~1e-5 x tolerance.
  /// Sampled exact solutions only carry rounding.
  double noise_level() const { return tolerance_ ? 1e-5 * *tolerance_ : 1e-13; }

  const std::optional<QuadratureChannel>& quadrature() const { return quadrature_; }

  /// I(t) from the attached quadrature channel.
  double integral_at(double t) const {
    if (!quadrature_) throw ArityError("trajectory has no quadrature attached");
    if (!contains(t)) throw SpanError("time outside trajectory span");
    const std::size_t i = segment_index(t);
    const auto& a = (*samples_)[i];
    if (t == a.t) return quadrature_->node_values[i];
    if (t == (*samples_)[i + 1].t) return quadrature_->node_values[i + 1];
    const auto& q = *quadrature_;
    return q.node_values[i] +
           adaptive_lobatto([&](double s) { return q.integrand(sample_jets(s)); }, a.t, t, q.tol);
  }

  Trajectory with_quadrature(QuadratureChannel channel) const {
    if (channel.node_values.size() != samples_->size()) {
      throw ArityError("quadrature channel length differs from sample count");
    }
    Trajectory out = *this;
    out.quadrature_ = std::move(channel);
    return out;
  }

  /// Index i of the segment [t_i, t_{i+1}] holding t (t must be in span).
  std::size_t segment_index(double t) const {
    const auto& s = *samples_;
    std::size_t lo = 0;
    std::size_t hi = s.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      const bool before = forward_ ? s[mid].t <= t : s[mid].t >= t;
      if (before) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return lo;
  }

 private:
  // Channel j is interpolated by its own Hermite polynomial matching jets
  // j..K at both ends; differentiating one polynomial built from q alone
  // loses digits to cancellation in the high jets. The top channel K is the
  // derivative of channel K-1 unless a closure supplies it.
  JetState interpolate(const JetState& a, const JetState& b, double t) const {
    const std::size_t m = bases_.size();
    const std::size_t n = a.dim();
    const double h = b.t - a.t;
    const double s = (t - a.t) / h;
    std::vector<double> left(m), right(m), coeff(2 * m);
    JetState out;
    out.t = t;
    out.jets.assign(m, Vector(n));
    for (std::size_t j = 0; j + 1 < m; ++j) {
      const auto& basis = *bases_[m - j - 1];
      const std::size_t k = basis.conditions();
      for (std::size_t c = 0; c < n; ++c) {
        double hp = 1.0;
        for (std::size_t i = 0; i < k; ++i) {
          left[i] = hp * a.jets[j + i][c];
          right[i] = hp * b.jets[j + i][c];
          hp *= h;
        }
        const std::span<double> cf(coeff.data(), 2 * k);
        basis.coefficients(std::span<const double>(left.data(), k),
                           std::span<const double>(right.data(), k), cf);
        out.jets[j][c] = detail::poly_derivative(cf, 0, s);
        if (j + 2 == m) out.jets[j + 1][c] = detail::poly_derivative(cf, 1, s) / h;
      }
    }
    if (closure_ && m == 2 * order_ + 1) {
      const auto flat = flatten_jets<double>(out, 2 * order_);
      out.jets[2 * order_] = closure_(t, JetView<double>(flat, n));
    }
    return out;
  }

  std::size_t order_;
  Closure closure_;
  bool forward_ = true;
  std::shared_ptr<const std::vector<JetState>> samples_;
  // bases_[i] has i + 1 conditions per endpoint.
  std::vector<std::shared_ptr<const detail::HermiteBasis>> bases_;
  std::optional<QuadratureChannel> quadrature_;
  std::optional<double> tolerance_;
};

/// Statistics of a candidate constant's deviation from its first value.
struct DriftReport {
  double reference_value = 0.0;
  double max_abs_drift = 0.0;
  double max_rel_drift = 0.0;  // max_abs_drift / max(1, |reference_value|)
  std::size_t sample_count = 0;
};

inline DriftReport drift_report(std::span<const std::pair<double, double>> values) {
  if (values.size() < 2) throw ArityError("drift_report needs at least two values");
  DriftReport r;
  r.reference_value = values.front().second;
  r.sample_count = values.size();
  for (const auto& [t, v] : values) {
    r.max_abs_drift = std::max(r.max_abs_drift, std::abs(v - r.reference_value));
  }
  r.max_rel_drift = r.max_abs_drift / std::max(1.0, std::abs(r.reference_value));
  return r;
}

inline DriftReport drift_report(const std::vector<std::pair<double, double>>& values) {
  return drift_report(std::span<const std::pair<double, double>>(values));
}

}  // namespace nlcm

namespace nlcm {

/// Builds a trajectory from an externally known solution. `jet_fn(t)` must
/// return jets q, ..., q^(K) with K >= 2N-1; `count` nodes are placed
/// uniformly from t_begin to t_end (either orientation).
template <class JetFn>
Trajectory sample_trajectory(std::size_t order, JetFn&& jet_fn, double t_begin, double t_end,
                             std::size_t count, Closure closure = {}) {
  if (count < 2) throw ArityError("sample_trajectory needs at least two nodes");
  std::vector<JetState> nodes;
  nodes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = i + 1 == count
                         ? t_end
                         : t_begin + (t_end - t_begin) * static_cast<double>(i) /
                                         static_cast<double>(count - 1);
    nodes.push_back(JetState{t, jet_fn(t)});
  }
  return Trajectory(order, std::move(nodes), std::move(closure));
}

}  // namespace nlcm
