#pragma once

// Model parameters for Bernoulli site percolation on the rooted r-ary tree,
// regime classification, closed-form limit constants and tree-size
// bookkeeping.

#include <cmath>
#include <cstdint>
#include <charconv>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace treeperc {

// ============================================================================
// ERRORS
// ============================================================================

/// A precondition on an argument was violated (bad arity, p outside (0,1),
/// negative depth, integer overflow, guard limits).
class precondition_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The operation is not defined in the regime of the supplied parameters.
class regime_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A simulation plan exceeds the configured work budget.
class budget_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ============================================================================
// PARAMETERS
// ============================================================================

enum class Regime { Subcritical, Critical, Supercritical };

inline std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::Subcritical: return "subcritical";
    case Regime::Critical: return "critical";
    case Regime::Supercritical: return "supercritical";
  }
  return "unknown";
}

/// Exact rational p = numerator / denominator.
struct Rational {
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;
};

/// Arity r >= 2 and open-site probability p in (0,1). When p was supplied as
/// an exact rational it is kept alongside the real value so that criticality
/// can be decided exactly.
class ModelParams {
 public:
  ModelParams(int r, double p) : r_(r), p_(p) { validate(); }

  ModelParams(int r, Rational p)
      : r_(r),
        p_(static_cast<double>(p.numerator) / static_cast<double>(p.denominator)),
        rational_(p) {
    if (p.denominator <= 0 || p.numerator <= 0 || p.numerator >= p.denominator) {
      throw precondition_error("p must be a rational a/b with 0 < a < b");
    }
    validate();
  }

  /// Parses p from "0.3" or "1/3".
  static ModelParams parse(int r, std::string_view p_text) {
    const std::string text(p_text);
    if (const auto slash = text.find('/'); slash != std::string::npos) {
      std::size_t used_num = 0;
      std::size_t used_den = 0;
      std::int64_t num = 0;
      std::int64_t den = 0;
      try {
        const std::string num_text = text.substr(0, slash);
        const std::string den_text = text.substr(slash + 1);
        num = std::stoll(num_text, &used_num);
        den = std::stoll(den_text, &used_den);
        if (used_num != num_text.size() || used_den != den_text.size()) {
          throw std::invalid_argument("trailing characters");
        }
      } catch (const std::logic_error&) {
        throw precondition_error("cannot parse p = '" + text + "' as a/b");
      }
      return ModelParams(r, Rational{num, den});
    }
    std::size_t used = 0;
    double p = 0.0;
    try {
      p = std::stod(text, &used);
    } catch (const std::logic_error&) {
      throw precondition_error("cannot parse p = '" + text + "' as a number");
    }
    if (used != text.size()) {
      throw precondition_error("cannot parse p = '" + text + "' as a number");
    }
    return ModelParams(r, p);
  }

  int r() const { return r_; }
  double p() const { return p_; }
  const std::optional<Rational>& rational() const { return rational_; }

  /// "1/3" when supplied as a rational, else the shortest decimal form.
  std::string p_text() const {
    if (rational_) {
      return std::to_string(rational_->numerator) + "/" + std::to_string(rational_->denominator);
    }
    char buffer[32];
    const auto end = std::to_chars(buffer, buffer + sizeof buffer, p_).ptr;
    return std::string(buffer, end);
  }

 private:
  void validate() const {
    if (r_ < 2) throw precondition_error("arity r must be >= 2");
    if (!(p_ > 0.0 && p_ < 1.0)) throw precondition_error("p must lie in the open interval (0,1)");
  }

  int r_;
  double p_;
  std::optional<Rational> rational_;
};

// ============================================================================
// REGIME AND CONSTANTS
// ============================================================================

inline constexpr double kCriticalRelativeTolerance = 1e-15;

inline Regime classify(const ModelParams& params) {
  const auto r = static_cast<std::int64_t>(params.r());
  if (const auto& q = params.rational()) {
    // Compare a/b with 1/r as a*r vs b; a < b keeps the product in range for
    // any sane denominator.
    const __int128 lhs = static_cast<__int128>(q->numerator) * r;
    const __int128 rhs = q->denominator;
    if (lhs < rhs) return Regime::Subcritical;
    if (lhs == rhs) return Regime::Critical;
    return Regime::Supercritical;
  }
  const double threshold = 1.0 / static_cast<double>(r);
  if (std::abs(params.p() - threshold) <= kCriticalRelativeTolerance * threshold) {
    return Regime::Critical;
  }
  return params.p() < threshold ? Regime::Subcritical : Regime::Supercritical;
}

inline void require_regime(const ModelParams& params, Regime wanted, std::string_view what) {
  const Regime actual = classify(params);
  if (actual != wanted) {
    throw regime_error(std::string(what) + " requires the " + std::string(to_string(wanted)) +
                       " regime, got " + std::string(to_string(actual)));
  }
}

inline void require_not_supercritical(const ModelParams& params, std::string_view what) {
  if (classify(params) == Regime::Supercritical) {
    throw regime_error(std::string(what) + " requires p <= 1/r (supercritical tail does not vanish)");
  }
}

/// log kappa, where kappa = p (1-p)^(r-1) r^r / (r-1)^(r-1). Exactly zero at
/// criticality so that n * log kappa carries no rounding drift for large n.
inline double log_kappa(const ModelParams& params) {
  if (classify(params) == Regime::Critical) return 0.0;
  const double r = params.r();
  const double p = params.p();
  return std::log(p) + (r - 1.0) * std::log1p(-p) + r * std::log(r) - (r - 1.0) * std::log(r - 1.0);
}

inline double kappa(const ModelParams& params) { return std::exp(log_kappa(params)); }

/// Number of nodes of generation <= d, (r^(d+1) - 1) / (r - 1).
inline std::uint64_t tree_size(int r, int d) {
  if (r < 2) throw precondition_error("arity r must be >= 2");
  if (d < 0) throw precondition_error("generation depth d must be >= 0");
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  const auto ur = static_cast<std::uint64_t>(r);
  std::uint64_t size = 1;
  for (int g = 1; g <= d; ++g) {
    if (size > (kMax - 1) / ur) {
      throw precondition_error("tree_size(r=" + std::to_string(r) + ", d=" + std::to_string(d) +
                               ") overflows 64 bits");
    }
    size = size * ur + 1;
  }
  return size;
}

/// Number of nodes of generation exactly d, r^d.
inline std::uint64_t boundary_size(int r, int d) {
  return d == 0 ? 1 : tree_size(r, d) - tree_size(r, d - 1);
}

/// Critical cluster constant: P(K(v) > n) ~ C1 / sqrt(n) at p = 1/r.
inline double constant_c1(const ModelParams& params) {
  require_regime(params, Regime::Critical, "constant_c1");
  const double r = params.r();
  return 2.0 / std::sqrt(2.0 * std::numbers::pi * r * (r - 1.0));
}

/// Critical run constant 2rp/(r-1): P(R(v) > h) ~ C3 / h at p = 1/r.
inline double constant_c3(const ModelParams& params) {
  require_regime(params, Regime::Critical, "constant_c3");
  const double r = params.r();
  return 2.0 * r * params.p() / (r - 1.0);
}

/// Subcritical cluster tail constant: P(K(v) > n) ~ C2 kappa^(n+1) n^(-3/2).
inline double constant_c2(const ModelParams& params) {
  require_regime(params, Regime::Subcritical, "constant_c2");
  const double r = params.r();
  const double p = params.p();
  return (1.0 - p) * std::sqrt(r) /
         (std::sqrt(2.0 * std::numbers::pi) * (1.0 - kappa(params)) * std::pow(r - 1.0, 1.5));
}

/// Lattice-limit constant for clusters, C2 (1-p) r / (r-1).
inline double constant_c_cluster(const ModelParams& params) {
  const double r = params.r();
  return constant_c2(params) * (1.0 - params.p()) * r / (r - 1.0);
}

/// Lattice-limit constant for runs given the run tail constant C4,
/// C4 (1-p) / (p (r-1)).
inline double constant_c_run(const ModelParams& params, double c4) {
  require_regime(params, Regime::Subcritical, "constant_c_run");
  const double r = params.r();
  const double p = params.p();
  return c4 * (1.0 - p) / (p * (r - 1.0));
}

}  // namespace treeperc
