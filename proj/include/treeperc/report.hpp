#pragma once

// JSON and CSV renderings of tables, simulations, constants and limit-law
// comparisons. Doubles are written in shortest round-trip form so that equal
// inputs give byte-identical output.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "treeperc/catalan.hpp"
#include "treeperc/core.hpp"
#include "treeperc/exact.hpp"
#include "treeperc/limits.hpp"
#include "treeperc/sim.hpp"
#include "treeperc/stats.hpp"

namespace treeperc {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Shortest round-trip text for a double; "nan", "inf", "-inf" otherwise.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buffer[32];
  const auto end = std::to_chars(buffer, buffer + sizeof buffer, x).ptr;
  return std::string(buffer, end);
}

/// Non-finite doubles become null.
inline Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json params_json(const ModelParams& params) {
  return {{"r", params.r()},
          {"p", params.p()},
          {"p_text", params.p_text()},
          {"regime", std::string(to_string(classify(params)))}};
}

inline Json metadata_json(const ModelParams& params, std::optional<std::uint64_t> seed = std::nullopt) {
  Json meta = {{"schema_version", kSchemaVersion},
               {"tool", "treeperc"},
               {"version", std::string(kCodeVersion)},
               {"generator", std::string(kGeneratorId)},
               {"params", params_json(params)}};
  meta["seed"] = seed ? Json(*seed) : Json(nullptr);
  return meta;
}

// ============================================================================
// TABLES
// ============================================================================

inline Json dist_table_json(const ModelParams& params, const DistTable& table) {
  Json out = metadata_json(params);
  out["kind"] = std::string(to_string(table.kind));
  out["source"] = table.source == DistSource::Exact ? "exact" : "empirical";
  out["support_max"] = table.support_max;
  if (table.source == DistSource::Empirical) out["sample_count"] = table.sample_count;
  // Catalan numbers accompany exact cluster rows while they are stored exactly.
  std::vector<BigInt> catalan;
  if (table.kind == DistKind::ClusterSize && table.source == DistSource::Exact) {
    catalan = generalized_catalan_sequence(params.r(), std::min<std::int64_t>(table.support_max, kExactCatalanThreshold));
  }
  Json rows = Json::array();
  for (std::size_t n = 0; n < table.pmf.size(); ++n) {
    Json row = {{"n", n},
                {"pmf", table.pmf[n].value()},
                {"tail", table.tail[n].value()},
                {"log_pmf", number_or_null(table.pmf[n].log_value())},
                {"log_tail", number_or_null(table.tail[n].log_value())}};
    if (n < catalan.size()) row["catalan"] = catalan[n].str();
    rows.push_back(std::move(row));
  }
  out["rows"] = std::move(rows);
  return out;
}

inline std::string dist_table_csv(const DistTable& table) {
  std::ostringstream out;
  out << "n,pmf,tail,log_pmf,log_tail\n";
  for (std::size_t n = 0; n < table.pmf.size(); ++n) {
    out << n << ',' << format_number(table.pmf[n].value()) << ',' << format_number(table.tail[n].value()) << ','
        << format_number(table.pmf[n].log_value()) << ',' << format_number(table.tail[n].log_value()) << '\n';
  }
  return out.str();
}

// ============================================================================
// SIMULATIONS
// ============================================================================

inline Json config_json(const SimConfig& config) {
  return {{"d", config.d},
          {"replicates", config.replicates},
          {"cluster_size_cap", config.cluster_size_cap},
          {"height_cap", config.height_cap},
          {"statistic", std::string(to_string(config.statistic))},
          {"work_budget", config.work_budget}};
}

inline Json outcome_json(const SimOutcome& outcome) {
  Json histogram = Json::array();
  for (const auto& [value, count] : outcome.histogram) histogram.push_back({value, count});
  Json replicate = Json::array(), value = Json::array(), censored = Json::array(), work = Json::array();
  for (const auto& record : outcome.records) {
    replicate.push_back(record.replicate);
    value.push_back(record.value);
    censored.push_back(record.censored);
    work.push_back(record.work);
  }
  const auto values = outcome.values();
  return {{"statistic", std::string(to_string(outcome.statistic))},
          {"censored_count", outcome.censored_count},
          {"mean", stats::mean(values)},
          {"median", stats::median(values)},
          {"histogram", std::move(histogram)},
          {"records", {{"replicate", std::move(replicate)},
                       {"value", std::move(value)},
                       {"censored", std::move(censored)},
                       {"work", std::move(work)}}}};
}

inline Json simulation_json(const std::vector<SimOutcome>& outcomes) {
  if (outcomes.empty()) throw precondition_error("no outcomes to report");
  const auto& config = outcomes.front().config;
  Json out = metadata_json(config.params, config.seed);
  out["config"] = config_json(config);
  Json list = Json::array();
  for (const auto& outcome : outcomes) list.push_back(outcome_json(outcome));
  out["outcomes"] = std::move(list);
  return out;
}

/// Per-replicate CSV for a single statistic. Comment lines carry the
/// metadata.
inline std::string simulation_csv(const SimOutcome& outcome) {
  std::ostringstream out;
  const auto& config = outcome.config;
  out << "# tool=treeperc version=" << kCodeVersion << " generator=" << kGeneratorId << " seed=" << config.seed
      << " r=" << config.params.r() << " p=" << config.params.p_text() << " d=" << config.d
      << " statistic=" << to_string(outcome.statistic) << '\n';
  out << "replicate,value,censored,work\n";
  for (const auto& record : outcome.records) {
    out << record.replicate << ',' << record.value << ',' << (record.censored ? 1 : 0) << ',' << record.work << '\n';
  }
  return out.str();
}

// ============================================================================
// CONSTANTS
// ============================================================================

namespace detail {

template <class Fn>
Json guarded_constant(Fn&& fn) {
  try {
    return {{"value", fn()}};
  } catch (const std::exception& error) {
    return {{"error", error.what()}};
  }
}

}  // namespace detail

/// kappa and the limit constants routed by regime. A constant that does not
/// apply is reported with its error instead of aborting the report.
inline Json constants_json(const ModelParams& params) {
  Json out = metadata_json(params);
  const Regime regime = classify(params);
  Json constants = Json::object();
  constants["kappa"] = detail::guarded_constant([&] { return kappa(params); });
  if (regime != Regime::Subcritical) {
    constants["C1"] = detail::guarded_constant([&] { return constant_c1(params); });
    constants["C3"] = detail::guarded_constant([&] { return constant_c3(params); });
  }
  if (regime != Regime::Critical) {
    constants["C2"] = detail::guarded_constant([&] { return constant_c2(params); });
    constants["C_cluster"] = detail::guarded_constant([&] { return constant_c_cluster(params); });
    try {
      const auto c4 = estimate_c4(params);
      constants["C4"] = {{"value", c4.value},
                         {"increment", c4.increment},
                         {"h_max", c4.h_max},
                         {"converged", c4.converged}};
      constants["C_run"] = detail::guarded_constant([&] { return constant_c_run(params, c4.value); });
    } catch (const std::exception& error) {
      constants["C4"] = {{"error", error.what()}};
      constants["C_run"] = {{"error", error.what()}};
    }
  }
  out["constants"] = std::move(constants);
  return out;
}

inline std::string constants_csv(const Json& report) {
  std::ostringstream out;
  out << "name,value,error\n";
  for (const auto& [name, entry] : report.at("constants").items()) {
    out << name << ',';
    if (entry.contains("value")) out << format_number(entry.at("value").get<double>());
    out << ',';
    if (entry.contains("error")) out << '"' << entry.at("error").get<std::string>() << '"';
    out << '\n';
  }
  return out.str();
}

// ============================================================================
// LIMIT-LAW COMPARISON
// ============================================================================

enum class VerifyMode { CriticalCluster, SubcriticalCluster, CriticalRun, SubcriticalRun };

inline std::string_view to_string(VerifyMode mode) {
  switch (mode) {
    case VerifyMode::CriticalCluster: return "critical-cluster";
    case VerifyMode::SubcriticalCluster: return "subcritical-cluster";
    case VerifyMode::CriticalRun: return "critical-run";
    case VerifyMode::SubcriticalRun: return "subcritical-run";
  }
  return "unknown";
}

inline VerifyMode parse_verify_mode(std::string_view text) {
  for (const auto mode : {VerifyMode::CriticalCluster, VerifyMode::SubcriticalCluster, VerifyMode::CriticalRun,
                          VerifyMode::SubcriticalRun}) {
    if (text == to_string(mode)) return mode;
  }
  throw precondition_error("unknown verify mode '" + std::string(text) + "'");
}

inline bool is_cluster_mode(VerifyMode mode) {
  return mode == VerifyMode::CriticalCluster || mode == VerifyMode::SubcriticalCluster;
}

inline bool is_critical_mode(VerifyMode mode) {
  return mode == VerifyMode::CriticalCluster || mode == VerifyMode::CriticalRun;
}

inline std::vector<double> default_x_grid(VerifyMode mode) {
  switch (mode) {
    case VerifyMode::CriticalCluster: return {-4, -2, 0, 2};
    case VerifyMode::CriticalRun: return {-2, -1, 0, 1, 2};
    default: return {-6, -3, 0, 3, 6};
  }
}

struct VerifyRequest {
  VerifyMode mode = VerifyMode::SubcriticalCluster;
  SimConfig sim;
  std::vector<double> x_grid;  // empty = default grid for the mode
  double tolerance = 0.05;
};

struct VerifyPoint {
  double x = 0.0;
  std::int64_t threshold = 0;
  std::optional<double> empirical;  // absent when the threshold reaches a cap
  double lambda = 0.0;
  double exp_neg_lambda = 0.0;
  double limit_cdf = 0.0;
  double ci_half_width = 0.0;
  std::optional<double> g_bound;
  bool pass = false;
};

struct VerifyResult {
  Json report;
  std::vector<VerifyPoint> points;
  bool all_pass = false;
};

namespace detail {

inline std::int64_t verify_threshold(VerifyMode mode, const ModelParams& params, int d, double x) {
  const double r = params.r();
  double value = 0.0;
  switch (mode) {
    case VerifyMode::CriticalCluster: value = std::floor(std::pow(r, 2.0 * d + x)); break;
    case VerifyMode::CriticalRun: value = std::floor(std::pow(r, d + x)); break;
    case VerifyMode::SubcriticalCluster: value = std::floor(mu_d(params, d) + x); break;
    case VerifyMode::SubcriticalRun: value = std::floor(nu_d(params, d) + x); break;
  }
  if (!(value < 9.0e18)) throw precondition_error("threshold for x = " + format_number(x) + " is too large");
  return static_cast<std::int64_t>(value);
}

inline std::uint64_t verify_cap(VerifyMode mode, const SimConfig& config) {
  return is_cluster_mode(mode) ? config.cluster_size_cap : config.height_cap;
}

}  // namespace detail

inline void check_verify_regime(const VerifyRequest& request) {
  const auto& params = request.sim.params;
  if (is_critical_mode(request.mode)) {
    require_regime(params, Regime::Critical, to_string(request.mode));
  } else {
    require_regime(params, Regime::Subcritical, to_string(request.mode));
  }
  if (!is_critical_mode(request.mode) && request.sim.d < 1) {
    throw precondition_error("subcritical verification requires d >= 1");
  }
}

/// Compares a finished simulation with exp(-lambda) and the limit CDF.
/// Subcritical points pass on |empirical - exp(-lambda)| <= tolerance,
/// critical points on |empirical - limit| <= tolerance.
inline VerifyResult verify_outcome(const VerifyRequest& request, const SimOutcome& outcome) {
  check_verify_regime(request);
  const auto& params = request.sim.params;
  const int d = request.sim.d;
  const bool cluster = is_cluster_mode(request.mode);
  const auto grid = request.x_grid.empty() ? default_x_grid(request.mode) : request.x_grid;
  const std::uint64_t cap = detail::verify_cap(request.mode, request.sim);

  Json report = metadata_json(params, request.sim.seed);
  report["config"] = config_json(request.sim);
  report["mode"] = std::string(to_string(request.mode));
  report["tolerance"] = request.tolerance;

  std::optional<LimitLaw> law;
  double centering = 0.0;
  switch (request.mode) {
    case VerifyMode::CriticalCluster:
      law = critical_cluster_law(params);
      report["claim"] = "P(log_r K_d <= 2d + x) -> exp(-C1 r^(-x/2))";
      report["threshold_rule"] = "n = floor(r^(2d + x))";
      centering = 2.0 * d;
      break;
    case VerifyMode::CriticalRun:
      law = critical_run_law(params);
      report["claim"] = "P(log_r R_d <= d + x) -> exp(-C3 r^(-x))";
      report["threshold_rule"] = "h = floor(r^(d + x))";
      centering = d;
      break;
    case VerifyMode::SubcriticalCluster: {
      centering = mu_d(params, d);
      law = lattice_cluster_law(params, fractional_part(centering));
      report["claim"] = "K_d - mu_d is tight; along subsequences with mu_d - [mu_d] -> a it converges to [Z + a] - a";
      report["threshold_rule"] = "n = floor(mu_d + x)";
      report["C_cluster"] = constant_c_cluster(params);
      break;
    }
    case VerifyMode::SubcriticalRun: {
      centering = nu_d(params, d);
      const auto c4 = estimate_c4(params);
      law = lattice_run_law(params, c4.value, fractional_part(centering));
      report["claim"] = "R_d - nu_d is tight; along subsequences with nu_d - [nu_d] -> a it converges to [Z + a] - a";
      report["threshold_rule"] = "h = floor(nu_d + x)";
      report["C4"] = {{"value", c4.value}, {"increment", c4.increment}, {"h_max", c4.h_max}, {"converged", c4.converged}};
      break;
    }
  }
  report["centering"] = centering;
  Json law_json = {{"family", std::string(to_string(law->family))},
                   {"constant", law->constant},
                   {"base", law->base},
                   {"centering", law->centering}};
  if (!is_critical_mode(request.mode)) law_json["a"] = law->a;
  report["limit"] = std::move(law_json);

  std::vector<VerifyPoint> points;
  std::vector<std::int64_t> thresholds;
  for (const double x : grid) {
    VerifyPoint point;
    point.x = x;
    point.threshold = detail::verify_threshold(request.mode, params, d, x);
    thresholds.push_back(point.threshold);
    points.push_back(point);
  }

  // Cluster tails in one ascending pass; critical thresholds can be large.
  std::vector<double> tails(points.size(), 1.0);
  if (cluster) {
    std::vector<std::size_t> order(points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return thresholds[a] < thresholds[b]; });
    std::vector<std::int64_t> sorted;
    for (const auto i : order) sorted.push_back(std::max<std::int64_t>(thresholds[i], 0));
    const auto values = cluster_tails(params, sorted);
    for (std::size_t k = 0; k < order.size(); ++k) tails[order[k]] = values[k].log_value();
  } else {
    std::int64_t top = 0;
    for (const auto t : thresholds) top = std::max(top, t);
    const auto logs = run_log_tails(params, std::max<std::int64_t>(top, 0));
    for (std::size_t i = 0; i < points.size(); ++i) {
      tails[i] = thresholds[i] < 0 ? 0.0 : logs[static_cast<std::size_t>(thresholds[i])];
    }
  }

  bool all_pass = true;
  Json rows = Json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& point = points[i];
    const LogProb tail = thresholds[i] < 0 ? LogProb::one() : LogProb::from_log(tails[i]);
    point.lambda = detail::lambda_from_tail(params, d, tail);
    point.exp_neg_lambda = std::exp(-point.lambda);
    if (is_critical_mode(request.mode)) {
      point.limit_cdf = point.threshold < 1 ? 0.0 : law->cdf(std::log(static_cast<double>(point.threshold)) /
                                                              std::log(static_cast<double>(params.r())) -
                                                          centering);
    } else {
      point.limit_cdf = law->cdf(static_cast<double>(point.threshold) - centering);
    }
    const bool reachable = cap == 0 || (point.threshold >= 0 && static_cast<std::uint64_t>(point.threshold) < cap);
    if (reachable) {
      point.empirical = point.threshold < 0 ? 0.0 : outcome.empirical_cdf(static_cast<std::uint64_t>(point.threshold));
      point.ci_half_width = stats::binomial_half_width(*point.empirical, outcome.records.size());
      const double reference = is_critical_mode(request.mode) ? point.limit_cdf : point.exp_neg_lambda;
      point.pass = std::abs(*point.empirical - reference) <= request.tolerance;
    }
    if (request.mode == VerifyMode::SubcriticalCluster && point.threshold >= 0) {
      point.g_bound = chen_stein_g_bound(params, d, point.threshold).value;
    }
    all_pass = all_pass && point.pass;

    Json row = {{"x", point.x},
                {"threshold", point.threshold},
                {"empirical", point.empirical ? Json(*point.empirical) : Json(nullptr)},
                {"lambda", point.lambda},
                {"exp_neg_lambda", point.exp_neg_lambda},
                {"limit_cdf", point.limit_cdf},
                {"ci_half_width", point.ci_half_width},
                {"g_bound", point.g_bound ? number_or_null(*point.g_bound) : Json(nullptr)},
                {"pass", point.pass}};
    rows.push_back(std::move(row));
  }
  report["censored_count"] = outcome.censored_count;
  report["points"] = std::move(rows);
  report["pass"] = all_pass;
  return {std::move(report), std::move(points), all_pass};
}

/// Simulates the statistic the mode needs, then compares.
inline VerifyResult verify(VerifyRequest request) {
  check_verify_regime(request);
  request.sim.statistic = is_cluster_mode(request.mode) ? Statistic::ClusterK : Statistic::RunR;
  const auto outcomes = simulate(request.sim);
  return verify_outcome(request, outcomes.front());
}

inline std::string verify_csv(const VerifyResult& result) {
  std::ostringstream out;
  const auto& report = result.report;
  out << "# tool=treeperc version=" << kCodeVersion << " generator=" << kGeneratorId
      << " seed=" << report.at("seed").get<std::uint64_t>() << " mode=" << report.at("mode").get<std::string>()
      << " r=" << report.at("params").at("r").get<int>()
      << " p=" << report.at("params").at("p_text").get<std::string>()
      << " d=" << report.at("config").at("d").get<int>() << '\n';
  out << "x,threshold,empirical,lambda,exp_neg_lambda,limit_cdf,ci_half_width,g_bound,pass\n";
  for (const auto& point : result.points) {
    out << format_number(point.x) << ',' << point.threshold << ','
        << (point.empirical ? format_number(*point.empirical) : "") << ',' << format_number(point.lambda) << ','
        << format_number(point.exp_neg_lambda) << ',' << format_number(point.limit_cdf) << ','
        << format_number(point.ci_half_width) << ',' << (point.g_bound ? format_number(*point.g_bound) : "") << ','
        << (point.pass ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace treeperc
