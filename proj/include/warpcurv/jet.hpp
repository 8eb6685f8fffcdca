#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace warpcurv {

// Second-order multivariate dual number: value, gradient and Hessian with
// respect to every coordinate of the evaluation point. Arithmetic propagates
// all three exactly (up to roundoff), so first and second partials of any
// ScalarExpr come out without differencing.
struct Jet {
  double v = 0.0;
  Eigen::VectorXd g;
  Eigen::MatrixXd h;

  Jet() = default;
  explicit Jet(Eigen::Index n, double value = 0.0)
      : v(value), g(Eigen::VectorXd::Zero(n)), h(Eigen::MatrixXd::Zero(n, n)) {}

  static Jet variable(Eigen::Index n, Eigen::Index index, double value) {
    Jet j(n, value);
    j.g(index) = 1.0;
    return j;
  }

  Eigen::Index size() const { return g.size(); }
};

// Chain rule for a scalar function with derivatives f0, f1, f2 at u.v.
inline Jet apply(const Jet& u, double f0, double f1, double f2) {
  Jet r;
  r.v = f0;
  r.g = f1 * u.g;
  r.h = f1 * u.h + f2 * (u.g * u.g.transpose());
  return r;
}

inline Jet operator+(const Jet& a, const Jet& b) {
  Jet r;
  r.v = a.v + b.v;
  r.g = a.g + b.g;
  r.h = a.h + b.h;
  return r;
}

inline Jet operator-(const Jet& a, const Jet& b) {
  Jet r;
  r.v = a.v - b.v;
  r.g = a.g - b.g;
  r.h = a.h - b.h;
  return r;
}

inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r;
  r.v = a.v * b.v;
  r.g = a.v * b.g + b.v * a.g;
  r.h = a.v * b.h + b.v * a.h + a.g * b.g.transpose() + b.g * a.g.transpose();
  return r;
}

inline Jet operator*(double s, const Jet& a) {
  Jet r;
  r.v = s * a.v;
  r.g = s * a.g;
  r.h = s * a.h;
  return r;
}

inline Jet reciprocal(const Jet& a) {
  const double inv = 1.0 / a.v;
  return apply(a, inv, -inv * inv, 2.0 * inv * inv * inv);
}

inline Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

inline Jet exp(const Jet& a) {
  const double e = std::exp(a.v);
  return apply(a, e, e, e);
}

inline Jet sin(const Jet& a) {
  const double s = std::sin(a.v);
  const double c = std::cos(a.v);
  return apply(a, s, c, -s);
}

inline Jet cos(const Jet& a) {
  const double s = std::sin(a.v);
  const double c = std::cos(a.v);
  return apply(a, c, -s, -c);
}

inline Jet log(const Jet& a) {
  return apply(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v));
}

inline Jet pow(const Jet& a, double p) {
  if (p == 0.0) return Jet(a.size(), 1.0);
  if (p == 1.0) return a;
  const double f0 = std::pow(a.v, p);
  const double f1 = p * std::pow(a.v, p - 1.0);
  const double f2 = p * (p - 1.0) * std::pow(a.v, p - 2.0);
  return apply(a, f0, f1, f2);
}

inline Jet sqrt(const Jet& a) { return pow(a, 0.5); }

}  // namespace warpcurv
