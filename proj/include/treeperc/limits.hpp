#pragma once

// Poisson approximation and limit laws for K_d and R_d.
//
// W counts maximal open clusters rooted in T_d that exceed the threshold;
// K_d <= n exactly when W = 0. Its mean is
//   lambda_{d,n} = Psi_n + (1-p) (|T_d| - 1) Psi_n
// (run analogue with Phi_h), and P(K_d <= n) is approximated by exp(-lambda).

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>

#include "treeperc/core.hpp"
#include "treeperc/exact.hpp"
#include "treeperc/log_prob.hpp"

namespace treeperc {

namespace detail {

inline double lambda_from_tail(const ModelParams& params, int d, LogProb tail) {
  if (tail.is_zero()) return 0.0;
  const double others = static_cast<double>(tree_size(params.r(), d) - 1);
  return std::exp(tail.log_value() + std::log1p((1.0 - params.p()) * others));
}

}  // namespace detail

/// Exact mean of W_{d,n}.
inline double lambda_cluster(const ModelParams& params, int d, std::int64_t n) {
  require_not_supercritical(params, "lambda_cluster");
  return detail::lambda_from_tail(params, d, cluster_tail(params, n));
}

/// Exact mean of W_{d,h} for runs.
inline double lambda_run(const ModelParams& params, int d, std::int64_t h) {
  require_not_supercritical(params, "lambda_run");
  if (h < 0) return detail::lambda_from_tail(params, d, LogProb::one());
  return detail::lambda_from_tail(params, d, run_cdf_recursion(params, h).tail);
}

/// Centering of K_d: (d - 1.5 log_r d) / log_r(1/kappa).
inline double mu_d(const ModelParams& params, int d) {
  require_regime(params, Regime::Subcritical, "mu_d");
  if (d < 1) throw precondition_error("mu_d requires d >= 1");
  const double log_r = std::log(static_cast<double>(params.r()));
  return (d - 1.5 * std::log(static_cast<double>(d)) / log_r) / (-log_kappa(params) / log_r);
}

/// Centering of R_d: d / (log_r(1/p) - 1).
inline double nu_d(const ModelParams& params, int d) {
  require_regime(params, Regime::Subcritical, "nu_d");
  if (d < 0) throw precondition_error("nu_d requires d >= 0");
  const double log_r = std::log(static_cast<double>(params.r()));
  return d / (-std::log(params.p()) / log_r - 1.0);
}

enum class LimitFamily { CriticalCluster, CriticalRun, LatticeCluster, LatticeRun };

inline std::string_view to_string(LimitFamily family) {
  switch (family) {
    case LimitFamily::CriticalCluster: return "critical_cluster";
    case LimitFamily::CriticalRun: return "critical_run";
    case LimitFamily::LatticeCluster: return "lattice_cluster";
    case LimitFamily::LatticeRun: return "lattice_run";
  }
  return "unknown";
}

/// exp(-C r^(-x/2)).
inline double critical_cluster_cdf(const ModelParams& params, double x) {
  const double c1 = constant_c1(params);
  return std::exp(-c1 * std::pow(static_cast<double>(params.r()), -x / 2.0));
}

/// exp(-C3 r^(-x)).
inline double critical_run_cdf(const ModelParams& params, double x) {
  const double c3 = constant_c3(params);
  return std::exp(-c3 * std::pow(static_cast<double>(params.r()), -x));
}

/// P([Z + a] - a <= x) where P(Z <= z) = exp(-C base^z):
/// exp(-C base^([a + x] - a + 1)). Right-continuous step function.
inline double lattice_limit_cdf(double constant, double base, double a, double x) {
  if (!(constant > 0.0)) throw precondition_error("lattice limit constant must be > 0");
  if (!(base > 0.0 && base < 1.0)) throw precondition_error("lattice base must lie in (0,1)");
  if (!(a >= 0.0 && a < 1.0)) throw precondition_error("lattice offset a must lie in [0,1)");
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  const double exponent = std::floor(a + x) - a + 1.0;
  return std::exp(-constant * std::exp(exponent * std::log(base)));
}

/// A limiting CDF with its constants.
struct LimitLaw {
  LimitFamily family = LimitFamily::LatticeCluster;
  double constant = 1.0;  // C1, C3, C_cluster or C_run
  double base = 0.5;      // r (critical families) or kappa / rp (lattice)
  double a = 0.0;         // lattice offset
  std::string centering;  // "2d", "d", "mu_d" or "nu_d"

  double cdf(double x) const {
    switch (family) {
      case LimitFamily::CriticalCluster: return std::exp(-constant * std::pow(base, -x / 2.0));
      case LimitFamily::CriticalRun: return std::exp(-constant * std::pow(base, -x));
      case LimitFamily::LatticeCluster:
      case LimitFamily::LatticeRun: return lattice_limit_cdf(constant, base, a, x);
    }
    return std::numeric_limits<double>::quiet_NaN();
  }
};

inline LimitLaw critical_cluster_law(const ModelParams& params) {
  return {LimitFamily::CriticalCluster, constant_c1(params), static_cast<double>(params.r()), 0.0, "2d"};
}

inline LimitLaw critical_run_law(const ModelParams& params) {
  return {LimitFamily::CriticalRun, constant_c3(params), static_cast<double>(params.r()), 0.0, "d"};
}

/// Limit of lambda_{d, [mu_d + x]} divided by kappa^([a + x] - a + 1).
/// r^d kappa^(mu_d) = d^(3/2) cancels only against d^(3/2), while the tail
/// contributes n^(-3/2) ~ mu_d^(-3/2); the ratio (d / mu_d)^(3/2) tends to
/// log_r(1/kappa)^(3/2), which multiplies C_cluster.
inline double lattice_cluster_constant(const ModelParams& params) {
  const double log_r_inv_kappa = -log_kappa(params) / std::log(static_cast<double>(params.r()));
  return constant_c_cluster(params) * std::pow(log_r_inv_kappa, 1.5);
}

inline LimitLaw lattice_cluster_law(const ModelParams& params, double a) {
  return {LimitFamily::LatticeCluster, lattice_cluster_constant(params), kappa(params), a, "mu_d"};
}

inline LimitLaw lattice_run_law(const ModelParams& params, double c4, double a) {
  return {LimitFamily::LatticeRun, constant_c_run(params, c4), params.r() * params.p(), a, "nu_d"};
}

/// Fractional part x - [x].
inline double fractional_part(double x) { return x - std::floor(x); }

enum class ThresholdKind { ClusterSize, RunLength };

/// exp(-lambda) as the approximation to P(K_d <= n) (or P(R_d <= h)). The
/// third Chen-Stein term vanishes here because Y_A is independent of every
/// Y_B outside the neighbourhood of A.
inline double poisson_approx_prob(const ModelParams& params, int d, std::int64_t threshold, ThresholdKind kind) {
  const double lambda =
      kind == ThresholdKind::ClusterSize ? lambda_cluster(params, d, threshold) : lambda_run(params, d, threshold);
  return std::exp(-lambda);
}

/// Upper bound on the second Chen-Stein term,
///   2 (1-p)^(-1) |T_d| sum_{m > n} psi_m ((r-1)m + 1) Psi_n.
struct GBound {
  double value = 0.0;
  double remainder = 0.0;           // bound on the truncated part of the m-sum, included in value
  bool critical = false;            // evaluated at criticality, where the m-sum diverges
};

inline constexpr std::int64_t kGBoundTruncation = 2000;

inline GBound chen_stein_g_bound(const ModelParams& params, int d, std::int64_t n) {
  require_not_supercritical(params, "chen_stein_g_bound");
  if (n < 0) throw precondition_error("chen_stein_g_bound requires n >= 0");
  GBound bound;
  if (classify(params) == Regime::Critical) {
    bound.critical = true;
    bound.value = std::numeric_limits<double>::infinity();
    bound.remainder = std::numeric_limits<double>::infinity();
    return bound;
  }
  const ClusterLaw law(params);
  const double r = params.r();
  const double kappa_value = std::exp(law.log_kappa());
  const double anchor = law.log_pmf(n + 1);
  CompensatedSum sum;
  std::int64_t m = n + 1;
  double term = 0.0;
  double ratio_bound = 1.0;
  while (true) {
    term = std::exp(law.log_pmf(m) - anchor) * ((r - 1.0) * static_cast<double>(m) + 1.0);
    sum.add(term);
    // psi_{k+1}/psi_k < kappa and the size weight grows by at most this factor.
    ratio_bound = kappa_value * (1.0 + (r - 1.0) / ((r - 1.0) * static_cast<double>(m) + 1.0));
    if (m >= n + kGBoundTruncation && ratio_bound < 1.0) break;
    ++m;
  }
  const double remainder = term * ratio_bound / (1.0 - ratio_bound);
  const double log_scale = std::log(2.0) - std::log1p(-params.p()) +
                           std::log(static_cast<double>(tree_size(params.r(), d))) +
                           cluster_tail(params, n).log_value() + anchor;
  bound.remainder = std::exp(log_scale + std::log(remainder));
  bound.value = std::exp(log_scale + std::log(sum.value() + remainder));
  return bound;
}

/// Depth d >= 0 whose lambda_{d,n} is closest to 1 on the log scale.
inline int depth_for_unit_lambda(const ModelParams& params, std::int64_t n, int max_d = 60) {
  int best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  const LogProb tail = cluster_tail(params, n);
  for (int d = 0; d <= max_d; ++d) {
    double lambda = 0.0;
    try {
      lambda = detail::lambda_from_tail(params, d, tail);
    } catch (const precondition_error&) {
      break;  // |T_d| no longer fits in 64 bits
    }
    const double gap = std::abs(std::log(lambda));
    if (gap < best_gap) {
      best_gap = gap;
      best = d;
    }
  }
  return best;
}

}  // namespace treeperc
