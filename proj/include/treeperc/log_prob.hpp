#pragma once

// Probabilities carried as natural logarithms, with -inf as the explicit zero.

#include <algorithm>
#include <cmath>
#include <compare>
#include <limits>
#include <numbers>

namespace treeperc {

class LogProb {
 public:
  constexpr LogProb() = default;

  static constexpr LogProb zero() { return LogProb(); }
  static constexpr LogProb one() { return from_log(0.0); }
  static constexpr LogProb from_log(double log_value) {
    LogProb result;
    result.log_value_ = log_value;
    return result;
  }
  static LogProb from_value(double value) {
    return value <= 0.0 ? zero() : from_log(std::log(value));
  }

  constexpr double log_value() const { return log_value_; }
  double value() const { return is_zero() ? 0.0 : std::exp(log_value_); }
  constexpr bool is_zero() const { return log_value_ == -std::numeric_limits<double>::infinity(); }

  friend LogProb operator*(LogProb a, LogProb b) {
    if (a.is_zero() || b.is_zero()) return zero();
    return from_log(a.log_value_ + b.log_value_);
  }
  friend LogProb operator/(LogProb a, LogProb b) { return from_log(a.log_value_ - b.log_value_); }

  friend LogProb operator+(LogProb a, LogProb b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    const double hi = std::max(a.log_value_, b.log_value_);
    const double lo = std::min(a.log_value_, b.log_value_);
    return from_log(hi + std::log1p(std::exp(lo - hi)));
  }

  /// a - b, clamped at zero when b >= a.
  friend LogProb operator-(LogProb a, LogProb b) {
    if (b.is_zero()) return a;
    if (b.log_value_ >= a.log_value_) return zero();
    return from_log(a.log_value_ + std::log1p(-std::exp(b.log_value_ - a.log_value_)));
  }

  /// 1 - this, clamped at zero.
  LogProb complement() const {
    if (is_zero()) return one();
    if (log_value_ >= 0.0) return zero();
    // log(1 - e^x): expm1 branch near 0, log1p branch far from it.
    if (log_value_ > -std::numbers::ln2) return from_log(std::log(-std::expm1(log_value_)));
    return from_log(std::log1p(-std::exp(log_value_)));
  }

  friend constexpr bool operator==(LogProb a, LogProb b) = default;
  friend constexpr auto operator<=>(LogProb a, LogProb b) { return a.log_value_ <=> b.log_value_; }

 private:
  double log_value_ = -std::numeric_limits<double>::infinity();
};

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace treeperc
