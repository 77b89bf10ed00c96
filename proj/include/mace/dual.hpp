#pragma once

#include <cmath>
#include <type_traits>

namespace mace {

// Forward-mode dual number v + d·ε with ε² = 0.
//
// Running the hand-written adjoints with Dual scalars gives directional
// derivatives of gradients, which is how the force term of the training loss
// is differentiated with respect to the parameters.
template <class V>
struct Dual {
  V v{};
  V d{};

  constexpr Dual() = default;
  constexpr Dual(V value) : v(value) {}  // NOLINT: implicit promotion from scalars
  constexpr Dual(V value, V tangent) : v(value), d(tangent) {}

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

template <class V> constexpr Dual<V> operator-(const Dual<V>& a) { return {-a.v, -a.d}; }
template <class V> constexpr Dual<V> operator+(Dual<V> a, const Dual<V>& b) { return a += b; }
template <class V> constexpr Dual<V> operator-(Dual<V> a, const Dual<V>& b) { return a -= b; }
template <class V> constexpr Dual<V> operator*(Dual<V> a, const Dual<V>& b) { return a *= b; }
template <class V> constexpr Dual<V> operator/(Dual<V> a, const Dual<V>& b) { return a /= b; }
template <class V> constexpr Dual<V> operator+(Dual<V> a, V b) { a.v += b; return a; }
template <class V> constexpr Dual<V> operator+(V b, Dual<V> a) { a.v += b; return a; }
template <class V> constexpr Dual<V> operator-(Dual<V> a, V b) { a.v -= b; return a; }
template <class V> constexpr Dual<V> operator-(V b, const Dual<V>& a) { return {b - a.v, -a.d}; }
template <class V> constexpr Dual<V> operator*(const Dual<V>& a, V b) { return {a.v * b, a.d * b}; }
template <class V> constexpr Dual<V> operator*(V b, const Dual<V>& a) { return {a.v * b, a.d * b}; }
template <class V> constexpr Dual<V> operator/(const Dual<V>& a, V b) { return {a.v / b, a.d / b}; }
template <class V> constexpr Dual<V> operator/(V b, const Dual<V>& a) {
  return {b / a.v, -b * a.d / (a.v * a.v)};
}

template <class V> constexpr bool operator<(const Dual<V>& a, const Dual<V>& b) { return a.v < b.v; }
template <class V> constexpr bool operator>(const Dual<V>& a, const Dual<V>& b) { return a.v > b.v; }
template <class V> constexpr bool operator<=(const Dual<V>& a, const Dual<V>& b) { return a.v <= b.v; }
template <class V> constexpr bool operator>=(const Dual<V>& a, const Dual<V>& b) { return a.v >= b.v; }
template <class V> constexpr bool operator==(const Dual<V>& a, const Dual<V>& b) {
  return a.v == b.v && a.d == b.d;
}

template <class V> Dual<V> sin(const Dual<V>& a) { return {std::sin(a.v), a.d * std::cos(a.v)}; }
template <class V> Dual<V> cos(const Dual<V>& a) { return {std::cos(a.v), -a.d * std::sin(a.v)}; }
template <class V> Dual<V> exp(const Dual<V>& a) {
  const V e = std::exp(a.v);
  return {e, a.d * e};
}
template <class V> Dual<V> sqrt(const Dual<V>& a) {
  const V s = std::sqrt(a.v);
  return {s, a.d / (V(2) * s)};
}
template <class V> bool isfinite(const Dual<V>& a) { return std::isfinite(a.v) && std::isfinite(a.d); }

template <class T> struct is_dual : std::false_type {};
template <class V> struct is_dual<Dual<V>> : std::true_type {};

// Value part of a scalar, stripping any tangent.
inline double primal(double x) { return x; }
template <class V> double primal(const Dual<V>& x) { return primal(x.v); }

// Tangent part; zero for plain doubles.
inline double tangent(double) { return 0.0; }
template <class V> double tangent(const Dual<V>& x) { return primal(x.d); }

using std::cos;
using std::exp;
using std::isfinite;
using std::sin;
using std::sqrt;

}  // namespace mace
