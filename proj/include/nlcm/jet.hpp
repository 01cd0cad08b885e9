#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nlcm/errors.hpp"

namespace nlcm {

using Vector = std::vector<double>;

/// Time plus the derivative tuple (q, q', ..., q^(M)) at one instant.
struct JetState {
  double t = 0.0;
  std::vector<Vector> jets;

  /// Highest stored derivative order M.
  std::size_t order() const { return jets.empty() ? 0 : jets.size() - 1; }
  std::size_t dim() const { return jets.empty() ? 0 : jets.front().size(); }
};

/// Throws unless every jet has the same dimension n >= 1, M >= 1 and all
/// entries are finite.
inline void validate(const JetState& s) {
  if (s.jets.size() < 2) throw ArityError("JetState needs at least q and q'");
  const std::size_t n = s.jets.front().size();
  if (n == 0) throw DimensionError("JetState dimension must be >= 1");
  for (const auto& v : s.jets) {
    if (v.size() != n) throw DimensionError("JetState jets differ in dimension");
    for (double x : v) {
      if (!std::isfinite(x)) throw NumericError("JetState holds a non-finite entry");
    }
  }
  if (!std::isfinite(s.t)) throw NumericError("JetState time is not finite");
}

/// Read-only view over jets stored contiguously, slot by slot. `q[j]` is the
/// n-vector q^(j). This is what Lagrangian callbacks receive, with T = double
/// or a dual type.
template <class T>
class JetView {
 public:
  JetView(std::span<const T> data, std::size_t dim) : data_(data), dim_(dim) {}

  std::span<const T> operator[](std::size_t j) const { return data_.subspan(j * dim_, dim_); }
  std::size_t dim() const { return dim_; }
  std::size_t slots() const { return dim_ == 0 ? 0 : data_.size() / dim_; }

 private:
  std::span<const T> data_;
  std::size_t dim_;
};

/// Packs jets[0..count-1] of a state into a flat buffer of T.
template <class T>
std::vector<T> flatten_jets(const JetState& s, std::size_t count) {
  if (s.jets.size() < count) throw ArityError("state carries too few jets");
  const std::size_t n = s.dim();
  std::vector<T> out;
  out.reserve(count * n);
  for (std::size_t j = 0; j < count; ++j) {
    for (double x : s.jets[j]) out.emplace_back(x);
  }
  return out;
}

template <class A, class B>
auto dot(std::span<const A> a, std::span<const B> b) {
  decltype(a[0] * b[0]) acc{};
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double dot(const Vector& a, const Vector& b) {
  return dot(std::span<const double>(a), std::span<const double>(b));
}

template <class A>
auto squared_norm(std::span<const A> a) {
  return dot(a, a);
}

inline double squared_norm(const Vector& a) { return dot(a, a); }

inline double norm(const Vector& a) { return std::sqrt(squared_norm(a)); }

inline double max_abs(const Vector& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

/// det(a, b) = a_x b_y - a_y b_x for planar vectors.
template <class A, class B>
auto det2(std::span<const A> a, std::span<const B> b) {
  return a[0] * b[1] - a[1] * b[0];
}

inline double det2(const Vector& a, const Vector& b) { return a[0] * b[1] - a[1] * b[0]; }

}  // namespace nlcm
