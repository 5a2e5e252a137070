#pragma once

// Generalized Catalan numbers Cat_n = C(rn, n) / ((r-1)n + 1), counting the
// subtrees of the r-ary tree rooted at a fixed node with n nodes, and the
// refinement Cat_{n,h} by height.
//
// Exact values use arbitrary-precision integers up to a threshold; past it
// the logarithm is evaluated from the Stirling series of log-gamma with the
// leading n log n terms cancelled analytically.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "treeperc/core.hpp"

namespace treeperc {

using BigInt = boost::multiprecision::cpp_int;

/// Largest n whose Cat_n is evaluated exactly by default.
inline constexpr int kExactCatalanThreshold = 512;

/// Largest polynomial degree for the exact height-bounded subtree counts.
inline constexpr int kDefaultDegreeCap = 2000;

/// An exact computation would exceed its configured size cap.
class resource_error : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Natural logarithm of a positive big integer; -inf for zero.
inline double log_big(const BigInt& value) {
  if (value.is_zero()) return -std::numeric_limits<double>::infinity();
  const std::size_t bits = boost::multiprecision::msb(value) + 1;
  if (bits <= 64) return std::log(static_cast<double>(static_cast<std::uint64_t>(value)));
  const std::size_t shift = bits - 64;
  const auto top = static_cast<std::uint64_t>(value >> shift);
  return std::log(static_cast<double>(top)) + static_cast<double>(shift) * std::numbers::ln2;
}

/// Cat_0 ... Cat_max_n exactly, by the ratio
/// C(r(n+1), n+1) / C(rn, n) = prod_j (rn+j) / ((n+1) prod_j ((r-1)n+j)).
inline std::vector<BigInt> generalized_catalan_sequence(int r, int max_n) {
  if (r < 2) throw precondition_error("arity r must be >= 2");
  if (max_n < 0) throw precondition_error("n must be >= 0");
  std::vector<BigInt> result;
  result.reserve(static_cast<std::size_t>(max_n) + 1);
  BigInt binom = 1;  // C(rn, n)
  for (int n = 0; n <= max_n; ++n) {
    if (n > 0) {
      const int m = n - 1;
      BigInt numerator = binom;
      for (int j = 1; j <= r; ++j) numerator *= r * m + j;
      BigInt denominator = n;
      for (int j = 1; j <= r - 1; ++j) denominator *= (r - 1) * m + j;
      binom = numerator / denominator;
    }
    result.push_back(binom / ((r - 1) * n + 1));
  }
  return result;
}

inline BigInt generalized_catalan(int r, int n) { return generalized_catalan_sequence(r, n).back(); }

namespace detail {

// Remainder of Stirling's series, log Gamma(x+1) - (x log x - x + log(2 pi x)/2).
inline double stirling_remainder(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
}

// log C(rn, n) - n (r log r - (r-1) log(r-1)), i.e. everything except the
// linear term, for n large enough that the Stirling series is converged.
inline double log_binomial_rn_n_correction(int r, double n) {
  const double rr = r;
  return 0.5 * std::log(rr / (2.0 * std::numbers::pi * (rr - 1.0) * n)) + stirling_remainder(rr * n) -
         stirling_remainder(n) - stirling_remainder((rr - 1.0) * n);
}

inline double log_catalan_growth(int r) {
  const double rr = r;
  return rr * std::log(rr) - (rr - 1.0) * std::log(rr - 1.0);
}

struct LogCatalanCache {
  std::mutex mutex;
  std::map<int, std::shared_ptr<const std::vector<double>>> tables;
};

inline LogCatalanCache& log_catalan_cache() {
  static LogCatalanCache cache;
  return cache;
}

}  // namespace detail

/// log Cat_n for n = 0 ... kExactCatalanThreshold from exact integers, built
/// once per arity and shared read-only.
inline std::shared_ptr<const std::vector<double>> exact_log_catalan_table(int r) {
  auto& cache = detail::log_catalan_cache();
  std::lock_guard lock(cache.mutex);
  auto& slot = cache.tables[r];
  if (!slot) {
    const auto exact = generalized_catalan_sequence(r, kExactCatalanThreshold);
    auto logs = std::make_shared<std::vector<double>>();
    logs->reserve(exact.size());
    for (const auto& value : exact) logs->push_back(log_big(value));
    slot = std::move(logs);
  }
  return slot;
}

/// log Cat_n from the Stirling series (valid for n >= 1; converged to double
/// precision for n in the hundreds and up).
inline double log_generalized_catalan_stirling(int r, long long n) {
  const double x = static_cast<double>(n);
  return x * detail::log_catalan_growth(r) + detail::log_binomial_rn_n_correction(r, x) -
         std::log((r - 1.0) * x + 1.0);
}

inline double log_generalized_catalan(int r, long long n) {
  if (n < 0) throw precondition_error("n must be >= 0");
  if (n <= kExactCatalanThreshold) return (*exact_log_catalan_table(r))[static_cast<std::size_t>(n)];
  return log_generalized_catalan_stirling(r, n);
}

// ============================================================================
// HEIGHT-BOUNDED SUBTREE COUNTS
// ============================================================================

/// Coefficients of T_{<=h}(x), the generating function of rooted subtrees of
/// height at most h, truncated at x^degree. T_{<=0} = x and
/// T_{<=h+1} = x (1 + T_{<=h})^r. h = -1 gives the zero polynomial.
class HeightBoundedCounts {
 public:
  HeightBoundedCounts(int r, int degree, int degree_cap = kDefaultDegreeCap) : r_(r), degree_(degree) {
    if (r < 2) throw precondition_error("arity r must be >= 2");
    if (degree < 1) throw precondition_error("degree must be >= 1");
    if (degree > degree_cap) {
      throw resource_error("exact subtree polynomial degree " + std::to_string(degree) + " exceeds cap " +
                           std::to_string(degree_cap));
    }
    coefficients_.assign(static_cast<std::size_t>(degree) + 1, BigInt(0));
  }

  int height() const { return height_; }
  int degree() const { return degree_; }
  const BigInt& operator[](int n) const { return coefficients_[static_cast<std::size_t>(n)]; }
  const std::vector<BigInt>& coefficients() const { return coefficients_; }

  /// Advances from T_{<=h} to T_{<=h+1}.
  void step() {
    if (height_ < 0) {
      coefficients_[1] = 1;
      height_ = 0;
      return;
    }
    // Once height >= degree - 1 every subtree with at most `degree` nodes is
    // already counted.
    if (height_ >= degree_ - 1) {
      ++height_;
      return;
    }
    std::vector<BigInt> base = coefficients_;
    base[0] += 1;
    std::vector<BigInt> power = base;
    const auto limit = static_cast<std::size_t>(degree_ - 1);
    for (int k = 1; k < r_; ++k) power = multiply_truncated(power, base, limit);
    std::vector<BigInt> next(coefficients_.size(), BigInt(0));
    for (std::size_t i = 0; i <= limit; ++i) next[i + 1] = power[i];
    coefficients_ = std::move(next);
    ++height_;
  }

  void advance_to(int h) {
    while (height_ < h) step();
  }

 private:
  static std::vector<BigInt> multiply_truncated(const std::vector<BigInt>& a, const std::vector<BigInt>& b,
                                                std::size_t limit) {
    std::vector<BigInt> out(limit + 1, BigInt(0));
    for (std::size_t i = 0; i <= limit && i < a.size(); ++i) {
      if (a[i].is_zero()) continue;
      for (std::size_t j = 0; i + j <= limit && j < b.size(); ++j) {
        if (!b[j].is_zero()) out[i + j] += a[i] * b[j];
      }
    }
    return out;
  }

  int r_;
  int degree_;
  int height_ = -1;
  std::vector<BigInt> coefficients_;
};

/// Cat_{n,h}: rooted subtrees with n nodes and height exactly h.
inline BigInt subtree_count_size_height(int r, int n, int h, int degree_cap = kDefaultDegreeCap) {
  if (n < 1) throw precondition_error("subtree size n must be >= 1");
  if (h < 0) throw precondition_error("height h must be >= 0");
  if (h >= n) return 0;
  HeightBoundedCounts counts(r, n, degree_cap);
  counts.advance_to(h - 1);
  const BigInt below = counts[n];
  counts.step();
  return counts[n] - below;
}

/// Exact Cat_n and Cat_{n,h} for all n <= max_n.
class CatalanTable {
 public:
  CatalanTable(int r, int max_n) : r_(r), max_n_(max_n) {
    if (max_n < 1) throw precondition_error("max_n must be >= 1");
    catalan_ = generalized_catalan_sequence(r, max_n);
    by_height_.assign(static_cast<std::size_t>(max_n) + 1, {});
    HeightBoundedCounts counts(r, max_n, std::max(max_n, kDefaultDegreeCap));
    std::vector<BigInt> previous(static_cast<std::size_t>(max_n) + 1, BigInt(0));
    for (int h = 0; h < max_n; ++h) {
      counts.step();
      for (int n = 1; n <= max_n; ++n) {
        by_height_[static_cast<std::size_t>(n)].push_back(counts[n] - previous[static_cast<std::size_t>(n)]);
      }
      previous = counts.coefficients();
    }
  }

  int r() const { return r_; }
  int max_n() const { return max_n_; }

  const BigInt& catalan(int n) const { return catalan_.at(static_cast<std::size_t>(n)); }
  double log_catalan(int n) const { return log_big(catalan(n)); }

  /// Cat_{n,h}; zero outside 0 <= h < n.
  BigInt by_height(int n, int h) const {
    if (n < 1 || n > max_n_) throw precondition_error("n outside the table");
    if (h < 0 || h >= n) return 0;
    return by_height_[static_cast<std::size_t>(n)][static_cast<std::size_t>(h)];
  }

 private:
  int r_;
  int max_n_;
  std::vector<BigInt> catalan_;
  std::vector<std::vector<BigInt>> by_height_;  // [n][h]
};

}  // namespace treeperc
