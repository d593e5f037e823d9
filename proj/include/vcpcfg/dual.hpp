#pragma once

#include <cmath>

namespace vcpcfg {

// First-order dual number. Running the whole tape (forward pass and the
// hand-written adjoint rules) in Dual arithmetic yields forward-over-reverse
// differentiation: the tangent component of a gradient equals the gradient
// of the tangent-seeded directional derivative.
struct Dual {
  double v = 0.0;
  double t = 0.0;

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
  Dual(double value, double tangent) : v(value), t(tangent) {}
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.t + b.t}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.t - b.t}; }
inline Dual operator-(Dual a) { return {-a.v, -a.t}; }
inline Dual operator*(Dual a, Dual b) {
  return {a.v * b.v, a.t * b.v + a.v * b.t};
}
inline Dual operator/(Dual a, Dual b) {
  const double inv = 1.0 / b.v;
  const double q = a.v * inv;
  return {q, (a.t - q * b.t) * inv};
}
inline Dual& operator+=(Dual& a, Dual b) { return a = a + b; }
inline Dual& operator-=(Dual& a, Dual b) { return a = a - b; }
inline Dual& operator*=(Dual& a, Dual b) { return a = a * b; }

inline bool operator<(Dual a, Dual b) { return a.v < b.v; }
inline bool operator>(Dual a, Dual b) { return a.v > b.v; }
inline bool operator==(Dual a, Dual b) { return a.v == b.v; }

inline Dual exp(Dual a) {
  const double e = std::exp(a.v);
  return {e, e * a.t};
}
inline Dual log(Dual a) { return {std::log(a.v), a.t / a.v}; }
inline Dual sqrt(Dual a) {
  const double s = std::sqrt(a.v);
  return {s, s > 0.0 ? 0.5 * a.t / s : 0.0};
}
inline Dual tanh(Dual a) {
  const double y = std::tanh(a.v);
  return {y, (1.0 - y * y) * a.t};
}

namespace num {

inline double value_of(double x) { return x; }
inline double value_of(Dual x) { return x.v; }
inline double tangent_of(double) { return 0.0; }
inline double tangent_of(Dual x) { return x.t; }

template <class S>
inline S from_parts(double v, double t);
template <>
inline double from_parts<double>(double v, double) { return v; }
template <>
inline Dual from_parts<Dual>(double v, double t) { return {v, t}; }

}  // namespace num

}  // namespace vcpcfg
