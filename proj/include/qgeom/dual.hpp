#pragma once

#include <cmath>

namespace qgeom {

/// First-order dual number a + a' eps with eps^2 = 0.
template <typename T>
struct Dual {
  T value{};
  T deriv{};

  constexpr Dual() = default;
  constexpr Dual(T v) : value(v) {}  // NOLINT: constants promote implicitly
  constexpr Dual(T v, T d) : value(v), deriv(d) {}

  static constexpr Dual variable(T v) { return {v, T(1)}; }
};

template <typename T>
constexpr Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  return {a.value + b.value, a.deriv + b.deriv};
}
template <typename T>
constexpr Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  return {a.value - b.value, a.deriv - b.deriv};
}
template <typename T>
constexpr Dual<T> operator-(const Dual<T>& a) {
  return {-a.value, -a.deriv};
}
template <typename T>
constexpr Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {a.value * b.value, a.deriv * b.value + a.value * b.deriv};
}
template <typename T>
constexpr Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  return {a.value / b.value,
          (a.deriv * b.value - a.value * b.deriv) / (b.value * b.value)};
}

template <typename T>
Dual<T> sin(const Dual<T>& a) {
  using std::cos, std::sin;
  return {sin(a.value), cos(a.value) * a.deriv};
}
template <typename T>
Dual<T> cos(const Dual<T>& a) {
  using std::cos, std::sin;
  return {cos(a.value), -sin(a.value) * a.deriv};
}
template <typename T>
Dual<T> tan(const Dual<T>& a) {
  using std::cos, std::tan;
  const T c = cos(a.value);
  return {tan(a.value), a.deriv / (c * c)};
}
template <typename T>
Dual<T> exp(const Dual<T>& a) {
  using std::exp;
  const T e = exp(a.value);
  return {e, e * a.deriv};
}
template <typename T>
Dual<T> log(const Dual<T>& a) {
  using std::log;
  return {log(a.value), a.deriv / a.value};
}
template <typename T>
Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  const T r = sqrt(a.value);
  // d sqrt(x) at x = 0 is only finite when x' = 0
  return {r, a.deriv == T(0) ? T(0) : a.deriv / (T(2) * r)};
}
template <typename T>
Dual<T> abs(const Dual<T>& a) {
  using std::abs;
  const T sign = a.value > T(0) ? T(1) : (a.value < T(0) ? T(-1) : T(0));
  return {abs(a.value), sign * a.deriv};
}

/// x^y. The log-branch term is only formed when the exponent actually
/// varies, so negative bases with constant integer exponents work.
template <typename T>
Dual<T> pow(const Dual<T>& x, const Dual<T>& y) {
  using std::log, std::pow;
  const T v = pow(x.value, y.value);
  T d{};
  if (x.deriv != T(0)) {
    d += y.value * pow(x.value, y.value - T(1)) * x.deriv;
  }
  if (y.deriv != T(0)) {
    d += v * log(x.value) * y.deriv;
  }
  return {v, d};
}

template <typename T>
T value_of(const Dual<T>& a) {
  return a.value;
}
inline double value_of(double a) { return a; }

template <typename T>
bool is_finite(const Dual<T>& a) {
  return std::isfinite(a.value) && std::isfinite(a.deriv);
}
inline bool is_finite(double a) { return std::isfinite(a); }

}  // namespace qgeom
