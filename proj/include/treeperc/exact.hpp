#pragma once

// Exact laws of K(v), the size of the open cluster rooted at a vertex, and
// R(v), the length of the longest open run started there.
//
//   psi_n = P(K(v) = n) = Cat_n p^n (1-p)^((r-1)n + 1)
//   Psi_n = P(K(v) > n)
//   Phi_h = P(R(v) > h),  Phi_0 = p,  Phi_{h+1} = p (1 - (1 - Phi_h)^r)
//
// All quantities are carried as LogProb so that tails far below 1e-300 stay
// representable.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "treeperc/catalan.hpp"
#include "treeperc/core.hpp"
#include "treeperc/log_prob.hpp"

namespace treeperc {

enum class DistKind { ClusterSize, RunLength };
enum class DistSource { Exact, Empirical };

inline std::string_view to_string(DistKind kind) {
  return kind == DistKind::ClusterSize ? "cluster_size" : "run_length";
}

/// pmf[n] = P(X = n) and tail[n] = P(X > n) for n = 0 ... support_max.
struct DistTable {
  DistKind kind = DistKind::ClusterSize;
  std::int64_t support_max = 0;
  std::vector<LogProb> pmf;
  std::vector<LogProb> tail;
  DistSource source = DistSource::Exact;
  std::uint64_t sample_count = 0;  // Empirical only

  LogProb cdf(std::int64_t n) const {
    if (n < 0) return LogProb::zero();
    if (n > support_max) return tail.empty() ? LogProb::one() : tail.back().complement();
    return tail[static_cast<std::size_t>(n)].complement();
  }
};

// ============================================================================
// CLUSTER SIZE
// ============================================================================

/// Precomputed logarithms for repeated evaluation of psi_n at one (r, p).
class ClusterLaw {
 public:
  explicit ClusterLaw(const ModelParams& params)
      : params_(params),
        regime_(classify(params)),
        log_p_(std::log(params.p())),
        log_q_(std::log1p(-params.p())),
        log_kappa_(treeperc::log_kappa(params)),
        exact_(exact_log_catalan_table(params.r())) {}

  const ModelParams& params() const { return params_; }
  Regime regime() const { return regime_; }
  double log_kappa() const { return log_kappa_; }

  /// log psi_n.
  double log_pmf(std::int64_t n) const {
    if (n < 0) return -std::numeric_limits<double>::infinity();
    const double r = params_.r();
    if (n <= kExactCatalanThreshold) {
      const double x = static_cast<double>(n);
      return (*exact_)[static_cast<std::size_t>(n)] + x * log_p_ + ((r - 1.0) * x + 1.0) * log_q_;
    }
    return log_pmf_stirling(n);
  }

  /// log psi_n with Cat_n from the Stirling series; the linear terms collapse
  /// into n log kappa.
  double log_pmf_stirling(std::int64_t n) const {
    const double x = static_cast<double>(n);
    const double r = params_.r();
    return x * log_kappa_ + log_q_ + detail::log_binomial_rn_n_correction(params_.r(), x) -
           std::log((r - 1.0) * x + 1.0);
  }

  double pmf(std::int64_t n) const { return std::exp(log_pmf(n)); }

 private:
  ModelParams params_;
  Regime regime_;
  double log_p_;
  double log_q_;
  double log_kappa_;
  std::shared_ptr<const std::vector<double>> exact_;
};

/// psi_n from the generalized Catalan form.
inline LogProb cluster_pmf(const ModelParams& params, std::int64_t n) {
  if (n < 0) throw precondition_error("cluster size n must be >= 0");
  return LogProb::from_log(ClusterLaw(params).log_pmf(n));
}

/// psi_n from the hitting-time form (p/n) P(Bin(nr, p) = n - 1), using
/// log-gamma for the binomial coefficient.
inline LogProb cluster_pmf_otter_dwass(const ModelParams& params, std::int64_t n) {
  if (n < 0) throw precondition_error("cluster size n must be >= 0");
  const double p = params.p();
  if (n == 0) return LogProb::from_log(std::log1p(-p));
  const double trials = static_cast<double>(n) * params.r();
  const double k = static_cast<double>(n - 1);
  const double log_binom = std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0);
  const double log_bin_pmf = log_binom + k * std::log(p) + (trials - k) * std::log1p(-p);
  return LogProb::from_log(std::log(p) - std::log(static_cast<double>(n)) + log_bin_pmf);
}

namespace detail {

// Psi_n as 1 - sum_{m <= n} psi_m, compensated. Used where Psi_n is not tiny.
inline double cluster_tail_complement(const ClusterLaw& law, std::int64_t n) {
  CompensatedSum sum;
  sum.add(1.0);
  for (std::int64_t m = 0; m <= n; ++m) sum.add(-law.pmf(m));
  return std::max(0.0, sum.value());
}

// Psi_n as sum_{m > n} psi_m, stopped once terms are negligible and closed
// with the geometric bound psi_{m+1} / psi_m < kappa.
inline LogProb cluster_tail_direct(const ClusterLaw& law, std::int64_t n) {
  const double kappa_value = std::exp(law.log_kappa());
  const double anchor = law.log_pmf(n + 1);
  CompensatedSum sum;
  double term = 1.0;
  std::int64_t m = n + 1;
  constexpr std::int64_t kMaxTerms = 200'000'000;
  for (std::int64_t count = 0; count < kMaxTerms; ++count, ++m) {
    term = std::exp(law.log_pmf(m) - anchor);
    sum.add(term);
    if (term < 1e-18 * sum.value() && count > 8) break;
  }
  sum.add(term * kappa_value / (1.0 - kappa_value));
  return LogProb::from_log(anchor + std::log(sum.value()));
}

}  // namespace detail

/// Psi_n = P(K(v) > n). Undefined (non-vanishing) in the supercritical regime.
inline LogProb cluster_tail(const ModelParams& params, std::int64_t n) {
  require_not_supercritical(params, "cluster_tail");
  if (n < 0) return LogProb::one();
  const ClusterLaw law(params);
  const double complement = detail::cluster_tail_complement(law, n);
  if (law.regime() == Regime::Critical || complement > 1e-3) return LogProb::from_value(complement);
  return detail::cluster_tail_direct(law, n);
}

/// Psi_n for every n in `sizes` (ascending), sharing one pass of partial sums
/// in the critical regime.
inline std::vector<LogProb> cluster_tails(const ModelParams& params, const std::vector<std::int64_t>& sizes) {
  require_not_supercritical(params, "cluster_tails");
  if (!std::is_sorted(sizes.begin(), sizes.end())) throw precondition_error("sizes must be ascending");
  std::vector<LogProb> result;
  result.reserve(sizes.size());
  const ClusterLaw law(params);
  if (law.regime() != Regime::Critical) {
    for (const auto n : sizes) result.push_back(cluster_tail(params, n));
    return result;
  }
  CompensatedSum sum;
  sum.add(1.0);
  std::int64_t next = 0;
  for (const auto n : sizes) {
    for (; next <= n; ++next) sum.add(-law.pmf(next));
    result.push_back(n < 0 ? LogProb::one() : LogProb::from_value(std::max(0.0, sum.value())));
  }
  return result;
}

/// Leading-order tail: C2 kappa^(n+1) n^(-3/2) (subcritical) or C1 n^(-1/2)
/// (critical).
inline double cluster_tail_asymptotic(const ModelParams& params, std::int64_t n) {
  if (n < 1) throw precondition_error("cluster_tail_asymptotic requires n >= 1");
  const double x = static_cast<double>(n);
  switch (classify(params)) {
    case Regime::Critical: return constant_c1(params) / std::sqrt(x);
    case Regime::Subcritical:
      return constant_c2(params) * std::exp((x + 1.0) * log_kappa(params)) * std::pow(x, -1.5);
    case Regime::Supercritical: break;
  }
  throw regime_error("cluster_tail_asymptotic is undefined in the supercritical regime");
}

/// ψ and Ψ for n = 0 ... support_max. The tail is anchored at support_max and
/// filled backwards, tail[n-1] = tail[n] + pmf[n].
inline DistTable cluster_table(const ModelParams& params, std::int64_t support_max) {
  if (support_max < 0) throw precondition_error("support_max must be >= 0");
  require_not_supercritical(params, "cluster_table");
  const ClusterLaw law(params);
  DistTable table;
  table.kind = DistKind::ClusterSize;
  table.support_max = support_max;
  table.pmf.resize(static_cast<std::size_t>(support_max) + 1);
  table.tail.resize(static_cast<std::size_t>(support_max) + 1);
  for (std::int64_t n = 0; n <= support_max; ++n) {
    table.pmf[static_cast<std::size_t>(n)] = LogProb::from_log(law.log_pmf(n));
  }
  table.tail.back() = cluster_tail(params, support_max);
  for (std::int64_t n = support_max; n >= 1; --n) {
    const auto i = static_cast<std::size_t>(n);
    table.tail[i - 1] = table.tail[i] + table.pmf[i];
  }
  return table;
}

// ============================================================================
// RUN LENGTH
// ============================================================================

/// log Phi_0 ... log Phi_max_h from the extinction-time recursion
/// Phi_{h+1} = p (1 - (1 - Phi_h)^r).
inline std::vector<double> run_log_tails(const ModelParams& params, std::int64_t max_h) {
  if (max_h < 0) throw precondition_error("height h must be >= 0");
  const double log_p = std::log(params.p());
  const double r = params.r();
  std::vector<double> logs;
  logs.reserve(static_cast<std::size_t>(max_h) + 1);
  double current = log_p;
  logs.push_back(current);
  for (std::int64_t h = 1; h <= max_h; ++h) {
    const double phi = std::exp(current);
    double log_survive = 0.0;  // log(1 - (1 - phi)^r)
    if (phi > 1e-280) {
      log_survive = std::log(-std::expm1(r * std::log1p(-phi)));
    } else {
      log_survive = std::log(r) + current + std::log1p(-(r - 1.0) * phi / 2.0);
    }
    current = log_p + log_survive;
    logs.push_back(current);
  }
  return logs;
}

struct RunLaw {
  LogProb cdf;   // u_h = P(R(v) <= h)
  LogProb tail;  // Phi_h = P(R(v) > h)
};

inline RunLaw run_cdf_recursion(const ModelParams& params, std::int64_t h) {
  const LogProb tail = LogProb::from_log(run_log_tails(params, h).back());
  return {tail.complement(), tail};
}

inline DistTable run_table(const ModelParams& params, std::int64_t support_max) {
  const auto logs = run_log_tails(params, support_max);
  DistTable table;
  table.kind = DistKind::RunLength;
  table.support_max = support_max;
  table.tail.reserve(logs.size());
  table.pmf.reserve(logs.size());
  for (std::size_t h = 0; h < logs.size(); ++h) {
    const LogProb tail = LogProb::from_log(logs[h]);
    const LogProb above = h == 0 ? LogProb::one() : table.tail[h - 1];
    table.tail.push_back(tail);
    table.pmf.push_back(above - tail);
  }
  return table;
}

/// Phi_h bracketed by truncating the size-height double series at n_max:
///   lower     = sum over clusters with n <= n_max nodes and height >= h
///   remainder = Psi_{n_max}, the mass of all clusters with more nodes.
struct RunSeriesBracket {
  LogProb lower;
  LogProb remainder;

  double lower_value() const { return lower.value(); }
  double upper_value() const { return (lower + remainder).value(); }
  bool contains(double x, double tolerance = 0.0) const {
    return x >= lower_value() - tolerance && x <= upper_value() + tolerance;
  }
};

/// R(v) > h exactly when v is open and its cluster has height >= h, so
/// Phi_h = sum_{l >= h} sum_{n > l} Cat_{n,l} p^n (1-p)^((r-1)n+1)
///       = sum_n (Cat_n - Cat_{n,<=h-1}) p^n (1-p)^((r-1)n+1).
inline RunSeriesBracket run_tail_series(const ModelParams& params, int h, int n_max,
                                        int degree_cap = kDefaultDegreeCap) {
  require_not_supercritical(params, "run_tail_series");
  if (h < 0) throw precondition_error("height h must be >= 0");
  if (n_max < h + 2) throw precondition_error("run_tail_series requires n_max >= h + 2");
  const int r = params.r();
  HeightBoundedCounts counts(r, n_max, degree_cap);
  counts.advance_to(h - 1);
  const auto catalan = generalized_catalan_sequence(r, n_max);
  const double log_p = std::log(params.p());
  const double log_q = std::log1p(-params.p());
  LogProb lower = LogProb::zero();
  for (int n = 1; n <= n_max; ++n) {
    const BigInt tall = catalan[static_cast<std::size_t>(n)] - counts[n];
    if (tall.is_zero()) continue;
    const double log_weight = n * log_p + ((r - 1.0) * n + 1.0) * log_q;
    lower = lower + LogProb::from_log(log_big(tall) + log_weight);
  }
  return {lower, cluster_tail(params, n_max)};
}

/// Numerical value of the implicit constant in Phi_h ~ C4 (rp)^h.
struct C4Estimate {
  double value = 0.0;
  double increment = 0.0;  // |ratio_{h_max} - ratio_{h_max - 1}|
  int h_max = 0;
  bool converged = false;
};

inline C4Estimate estimate_c4(const ModelParams& params, int h_max = 300, double tolerance = 1e-8) {
  require_regime(params, Regime::Subcritical, "estimate_c4");
  if (h_max < 1) throw precondition_error("estimate_c4 requires h_max >= 1");
  const auto logs = run_log_tails(params, h_max);
  const double log_rp = std::log(params.r() * params.p());
  const auto ratio = [&](int h) { return std::exp(logs[static_cast<std::size_t>(h)] - h * log_rp); };
  C4Estimate estimate;
  estimate.h_max = h_max;
  estimate.value = ratio(h_max);
  estimate.increment = std::abs(estimate.value - ratio(h_max - 1));
  estimate.converged = estimate.increment < tolerance;
  return estimate;
}

}  // namespace treeperc
