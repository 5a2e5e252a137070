#pragma once

// Small empirical-distribution helpers for comparing simulations with exact
// laws.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "treeperc/core.hpp"

namespace treeperc::stats {

/// Sample median; the mean of the two central order statistics for even sizes.
template <class T>
double median(std::vector<T> values) {
  if (values.empty()) throw precondition_error("median of an empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = static_cast<double>(values[mid]);
  if (values.size() % 2 == 1) return upper;
  const double lower = static_cast<double>(*std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)));
  return 0.5 * (lower + upper);
}

template <class T>
double mean(const std::vector<T>& values) {
  double sum = 0.0;
  for (const auto& v : values) sum += static_cast<double>(v);
  return sum / static_cast<double>(values.size());
}

template <class T>
double standard_error(const std::vector<T>& values) {
  const double m = mean(values);
  double ss = 0.0;
  for (const auto& v : values) ss += (static_cast<double>(v) - m) * (static_cast<double>(v) - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
}

/// Dvoretzky-Kiefer-Wolfowitz half-width: sup |F_n - F| <= eps with
/// probability at least 1 - alpha.
inline double dkw_epsilon(std::uint64_t sample_count, double alpha = 1e-3) {
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(sample_count)));
}

/// z * sqrt(q (1 - q) / n).
inline double binomial_half_width(double q, std::uint64_t sample_count, double z = 3.0) {
  return z * std::sqrt(std::max(q * (1.0 - q), 0.0) / static_cast<double>(sample_count));
}

/// sup over integers n < limit of |F_emp(n) - F(n)| for an integer sample.
/// F_emp is a step function, so the supremum is attained at a sample value
/// or one below it (or at limit - 1). `cdf` receives the ascending list of
/// evaluation points and returns F at each.
inline double discrete_cdf_distance(
    std::vector<std::uint64_t> sample, std::uint64_t limit,
    const std::function<std::vector<double>(const std::vector<std::int64_t>&)>& cdf) {
  if (sample.empty()) throw precondition_error("empty sample");
  std::sort(sample.begin(), sample.end());
  std::vector<std::int64_t> points;
  for (const auto v : sample) {
    if (v >= limit) break;
    const auto s = static_cast<std::int64_t>(v);
    if (s > 0) points.push_back(s - 1);
    points.push_back(s);
  }
  if (limit > 0) points.push_back(static_cast<std::int64_t>(limit - 1));
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  const auto exact = cdf(points);
  const double total = static_cast<double>(sample.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto at_or_below = std::upper_bound(sample.begin(), sample.end(), static_cast<std::uint64_t>(points[i])) -
                             sample.begin();
    worst = std::max(worst, std::abs(static_cast<double>(at_or_below) / total - exact[i]));
  }
  return worst;
}

}  // namespace treeperc::stats
