#pragma once

// Forward-mode dual numbers carrying several tangent directions at once, so a
// full d x d state Jacobian comes out of a single evaluation.

#include <cmath>

#include <Eigen/Dense>

#include "ega/errors.hpp"

namespace ega {

class Dual {
 public:
  static constexpr int kMaxSeeds = 16;
  using Tangent = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxSeeds, 1>;

  Dual() = default;
  Dual(double value) : value_(value) {}  // NOLINT: constants promote implicitly
  Dual(double value, Tangent tangent) : value_(value), tangent_(std::move(tangent)) {}

  /// Seed direction `index` out of `count`.
  static Dual variable(double value, int index, int count) {
    require(count >= 1 && count <= kMaxSeeds, "Dual: seed count out of range");
    Tangent t = Tangent::Zero(count);
    t(index) = 1.0;
    return {value, t};
  }

  double value() const { return value_; }
  const Tangent& tangent() const { return tangent_; }
  /// Derivative along seed `i`; zero for constants.
  double d(int i) const { return i < tangent_.size() ? tangent_(i) : 0.0; }

  Dual& operator+=(const Dual& o) { return *this = *this + o; }
  Dual& operator-=(const Dual& o) { return *this = *this - o; }
  Dual& operator*=(const Dual& o) { return *this = *this * o; }

  friend Dual operator+(const Dual& a, const Dual& b) {
    return {a.value_ + b.value_, combine(a.tangent_, 1.0, b.tangent_, 1.0)};
  }
  friend Dual operator-(const Dual& a, const Dual& b) {
    return {a.value_ - b.value_, combine(a.tangent_, 1.0, b.tangent_, -1.0)};
  }
  friend Dual operator-(const Dual& a) { return {-a.value_, -a.tangent_}; }
  friend Dual operator*(const Dual& a, const Dual& b) {
    return {a.value_ * b.value_, combine(a.tangent_, b.value_, b.tangent_, a.value_)};
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    const double inv = 1.0 / b.value_;
    return {a.value_ * inv, combine(a.tangent_, inv, b.tangent_, -a.value_ * inv * inv)};
  }
  friend Dual operator*(double s, const Dual& a) { return {s * a.value_, s * a.tangent_}; }
  friend Dual operator*(const Dual& a, double s) { return s * a; }

  friend Dual tanh(const Dual& a) {
    const double t = std::tanh(a.value_);
    return {t, (1.0 - t * t) * a.tangent_};
  }
  friend Dual exp(const Dual& a) {
    const double e = std::exp(a.value_);
    return {e, e * a.tangent_};
  }
  friend Dual square(const Dual& a) { return a * a; }

  bool finite() const { return std::isfinite(value_) && tangent_.allFinite(); }

 private:
  // sa*a + sb*b where an empty tangent stands for zero.
  static Tangent combine(const Tangent& a, double sa, const Tangent& b, double sb) {
    if (a.size() == 0) return sb * b;
    if (b.size() == 0) return sa * a;
    require(a.size() == b.size(), "Dual: mismatched seed counts");
    return sa * a + sb * b;
  }

  double value_ = 0.0;
  Tangent tangent_;
};

inline double tanh(double x) { return std::tanh(x); }
inline double exp(double x) { return std::exp(x); }
inline double square(double x) { return x * x; }

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.value(); }

}  // namespace ega
