#pragma once

#include <array>
#include <cmath>

namespace brmppi {

/// Forward-mode dual number carrying N directional derivatives.
///
/// The value type S may itself be a Dual, which gives nested (higher-order)
/// derivatives. Only the operations needed by the kinematics and barrier
/// expressions are provided.
template <class S, int N>
struct Dual {
  S v{};
  std::array<S, N> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit lift of constants
  Dual(const S& value, const std::array<S, N>& deriv) : v(value), d(deriv) {}

  /// A variable seeded along derivative direction `k`.
  static Dual variable(const S& value, int k) {
    Dual x(value, {});
    x.d[k] = S(1.0);
    return x;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) { return *this = *this * o; }
  Dual& operator/=(const Dual& o) { return *this = *this / o; }

  friend Dual operator-(const Dual& a) {
    Dual r;
    r.v = -a.v;
    for (int i = 0; i < N; ++i) r.d[i] = -a.d[i];
    return r;
  }
  friend Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r;
    r.v = a.v * b.v;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    Dual r;
    const S inv = S(1.0) / b.v;
    r.v = a.v * inv;
    for (int i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
    return r;
  }

  // Mixed forms skip the zero derivative part of a lifted constant.
  friend Dual operator*(const Dual& a, double s) {
    Dual r;
    r.v = a.v * s;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * s;
    return r;
  }
  friend Dual operator*(double s, const Dual& a) { return a * s; }
  friend Dual operator/(const Dual& a, double s) { return a * (1.0 / s); }
  friend Dual operator+(Dual a, double s) {
    a.v += s;
    return a;
  }
  friend Dual operator+(double s, Dual a) {
    a.v += s;
    return a;
  }
  friend Dual operator-(Dual a, double s) {
    a.v -= s;
    return a;
  }
  friend Dual operator-(double s, const Dual& a) { return -a + s; }

  friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
  friend bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
  friend bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
  friend bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }
};

namespace detail {
template <class S, int N>
Dual<S, N> chain(const Dual<S, N>& x, const S& fx, const S& dfx) {
  Dual<S, N> r;
  r.v = fx;
  for (int i = 0; i < N; ++i) r.d[i] = dfx * x.d[i];
  return r;
}
}  // namespace detail

template <class S, int N>
Dual<S, N> sin(const Dual<S, N>& x) {
  using std::cos, std::sin;
  return detail::chain(x, sin(x.v), cos(x.v));
}

template <class S, int N>
Dual<S, N> cos(const Dual<S, N>& x) {
  using std::cos, std::sin;
  return detail::chain(x, cos(x.v), S(-sin(x.v)));
}

template <class S, int N>
Dual<S, N> tan(const Dual<S, N>& x) {
  using std::tan;
  const S t = tan(x.v);
  return detail::chain(x, t, S(S(1.0) + t * t));
}

template <class S, int N>
Dual<S, N> sqrt(const Dual<S, N>& x) {
  using std::sqrt;
  const S r = sqrt(x.v);
  return detail::chain(x, r, S(S(0.5) / r));
}

/// Derivative of |x| at zero is taken as zero.
template <class S, int N>
Dual<S, N> abs(const Dual<S, N>& x) {
  using std::abs;
  const S sgn = x.v > S(0.0) ? S(1.0) : (x.v < S(0.0) ? S(-1.0) : S(0.0));
  return detail::chain(x, S(abs(x.v)), sgn);
}

/// Underlying double value of a possibly nested dual.
inline double value_of(double x) { return x; }
template <class S, int N>
double value_of(const Dual<S, N>& x) {
  return value_of(x.v);
}

}  // namespace brmppi
