#pragma once

// Forward-mode dual numbers a + b*eps with eps^2 = 0.
//
// Dual<T> nests: Dual<Dual<double>> carries mixed second derivatives, which
// is what the generic second-order closure in the tests relies on.

#include <cmath>
#include <concepts>
#include <type_traits>

namespace nlcm {

template <class T>
struct Dual {
  T v{};  // value
  T d{};  // directional derivative

  constexpr Dual() = default;
  constexpr Dual(T value) : v(value), d(0) {}  // NOLINT: implicit lift of constants
  constexpr Dual(T value, T deriv) : v(value), d(deriv) {}

  template <class S>
    requires std::is_arithmetic_v<S> && (!std::is_same_v<S, T>)
  constexpr Dual(S value) : v(static_cast<T>(value)), d(0) {}  // NOLINT

  constexpr Dual& operator+=(const Dual& o) {
    v += o.v;
    d += o.d;
    return *this;
  }
  constexpr Dual& operator-=(const Dual& o) {
    v -= o.v;
    d -= o.d;
    return *this;
  }
  constexpr Dual& operator*=(const Dual& o) {
    d = d * o.v + v * o.d;
    v *= o.v;
    return *this;
  }
  constexpr Dual& operator/=(const Dual& o) {
    d = (d * o.v - v * o.d) / (o.v * o.v);
    v /= o.v;
    return *this;
  }
};

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};

template <class T>
inline constexpr bool is_dual_v = is_dual<T>::value;

/// Innermost real value of a possibly nested dual.
template <class T>
constexpr double value_of(const T& x) {
  if constexpr (is_dual_v<T>) {
    return value_of(x.v);
  } else {
    return static_cast<double>(x);
  }
}

template <class T>
constexpr Dual<T> operator+(Dual<T> a, const Dual<T>& b) { return a += b; }
template <class T>
constexpr Dual<T> operator-(Dual<T> a, const Dual<T>& b) { return a -= b; }
template <class T>
constexpr Dual<T> operator*(Dual<T> a, const Dual<T>& b) { return a *= b; }
template <class T>
constexpr Dual<T> operator/(Dual<T> a, const Dual<T>& b) { return a /= b; }
template <class T>
constexpr Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }
template <class T>
constexpr Dual<T> operator+(const Dual<T>& a) { return a; }

// Mixed operations with plain arithmetic scalars (and with the inner type T).
template <class T, class S>
  requires std::is_arithmetic_v<S> || std::is_same_v<S, T>
constexpr Dual<T> operator+(const Dual<T>& a, const S& s) { return {a.v + s, a.d}; }
template <class T, class S>
  requires std::is_arithmetic_v<S> || std::is_same_v<S, T>
constexpr Dual<T> operator+(const S& s, const Dual<T>& a) { return {s + a.v, a.d}; }
template <class T, class S>
  requires std::is_arithmetic_v<S> || std::is_same_v<S, T>
constexpr Dual<T> operator-(const Dual<T>& a, const S& s) { return {a.v - s, a.d}; }
template <class T, class S>
  requires std::is_arithmetic_v<S> || std::is_same_v<S, T>
constexpr Dual<T> operator-(const S& s, const Dual<T>& a) { return {s - a.v, -a.d}; }
template <class T, class S>
  requires std::is_arithmetic_v<S> || std::is_same_v<S, T>
constexpr Dual<T> operator*(const Dual<T>& a, const S& s) { return {a.v * s, a.d * s}; }
template <class T, class S>
  requires std::is_arithmetic_v<S> || std::is_same_v<S, T>
constexpr Dual<T> operator*(const S& s, const Dual<T>& a) { return {s * a.v, s * a.d}; }
template <class T, class S>
  requires std::is_arithmetic_v<S> || std::is_same_v<S, T>
constexpr Dual<T> operator/(const Dual<T>& a, const S& s) { return {a.v / s, a.d / s}; }
template <class T, class S>
  requires std::is_arithmetic_v<S> || std::is_same_v<S, T>
constexpr Dual<T> operator/(const S& s, const Dual<T>& a) {
  return {s / a.v, -s * a.d / (a.v * a.v)};
}

// Comparisons look at the value only.
template <class T, class U>
constexpr bool operator<(const T& a, const U& b)
  requires(is_dual_v<T> || is_dual_v<U>)
{
  return value_of(a) < value_of(b);
}
template <class T, class U>
constexpr bool operator>(const T& a, const U& b)
  requires(is_dual_v<T> || is_dual_v<U>)
{
  return value_of(a) > value_of(b);
}
template <class T, class U>
constexpr bool operator<=(const T& a, const U& b)
  requires(is_dual_v<T> || is_dual_v<U>)
{
  return value_of(a) <= value_of(b);
}
template <class T, class U>
constexpr bool operator>=(const T& a, const U& b)
  requires(is_dual_v<T> || is_dual_v<U>)
{
  return value_of(a) >= value_of(b);
}

using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;
using std::abs;

template <class T>
Dual<T> sqrt(const Dual<T>& a) {
  const T s = sqrt(a.v);
  return {s, a.d / (2 * s)};
}

template <class T>
Dual<T> exp(const Dual<T>& a) {
  const T e = exp(a.v);
  return {e, e * a.d};
}

template <class T>
Dual<T> log(const Dual<T>& a) {
  return {log(a.v), a.d / a.v};
}

template <class T>
Dual<T> sin(const Dual<T>& a) {
  return {sin(a.v), cos(a.v) * a.d};
}

template <class T>
Dual<T> cos(const Dual<T>& a) {
  return {cos(a.v), -sin(a.v) * a.d};
}

template <class T>
Dual<T> abs(const Dual<T>& a) {
  return value_of(a.v) < 0 ? -a : a;
}

template <class T>
Dual<T> pow(const Dual<T>& a, double p) {
  if (p == 0) return Dual<T>(T(1));
  return {pow(a.v, p), p * pow(a.v, p - 1) * a.d};
}

/// Integer power by repeated squaring; exact derivative at a = 0.
template <class T>
Dual<T> pow(const Dual<T>& a, int p) {
  if (p < 0) return Dual<T>(T(1)) / pow(a, -p);
  Dual<T> result(T(1));
  Dual<T> base = a;
  while (p > 0) {
    if (p & 1) result *= base;
    base *= base;
    p >>= 1;
  }
  return result;
}

}  // namespace nlcm
