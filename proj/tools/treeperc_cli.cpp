// treeperc: exact tables, simulations, constants and limit-law comparisons
// for site percolation on the r-ary tree.
//
// Exit status: 0 success, 2 usage error, 3 regime/precondition/resource
// error, 4 work budget exceeded, 1 anything else (I/O).

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "treeperc/report.hpp"

namespace {

using namespace treeperc;

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kPrecondition = 3, kBudget = 4 };

struct Options {
  int r = 2;
  std::string p;
  int d = 10;
  std::uint64_t reps = 1000;
  std::uint64_t seed = 1;
  std::uint64_t cap = 0;
  std::uint64_t height_cap = 0;
  std::string format = "json";
  std::string out;
  unsigned threads = 1;
  double budget = kDefaultWorkBudget;
  std::string kind = "cluster";
  std::int64_t n_max = 50;
  int series_n = 200;
  std::string stat = "both";
  std::string mode;
  std::vector<double> x;
  double tol = 0.05;
  bool strict = false;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const Options& options, const std::string& text) {
  if (options.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream file(options.out, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + options.out + "' for writing");
  file << text;
  if (!file) throw std::runtime_error("write to '" + options.out + "' failed");
}

std::string dump(const Json& json) { return json.dump(2) + "\n"; }

Statistic parse_statistic(const std::string& text) {
  if (text == "K") return Statistic::ClusterK;
  if (text == "R") return Statistic::RunR;
  if (text == "K-boundary") return Statistic::BoundaryK;
  if (text == "R-boundary") return Statistic::BoundaryR;
  if (text == "both") return Statistic::Both;
  throw UsageError("--stat must be one of K, R, K-boundary, R-boundary, both");
}

SimConfig sim_config(const Options& options) {
  SimConfig config;
  config.params = ModelParams::parse(options.r, options.p);
  config.d = options.d;
  config.replicates = options.reps;
  config.seed = options.seed;
  config.cluster_size_cap = options.cap;
  config.height_cap = options.height_cap;
  config.threads = options.threads;
  config.work_budget = options.budget;
  return config;
}

int run_constants(const Options& options) {
  const auto report = constants_json(ModelParams::parse(options.r, options.p));
  emit(options, options.format == "csv" ? constants_csv(report) : dump(report));
  return kOk;
}

int run_exact_dist(const Options& options) {
  const auto params = ModelParams::parse(options.r, options.p);
  if (options.n_max < 0) throw UsageError("--n-max must be >= 0");
  DistTable table;
  if (options.kind == "cluster") {
    table = cluster_table(params, options.n_max);
  } else if (options.kind == "run") {
    require_not_supercritical(params, "exact run table");
    table = run_table(params, options.n_max);
  } else {
    throw UsageError("--kind must be cluster or run");
  }
  emit(options, options.format == "csv" ? dist_table_csv(table) : dump(dist_table_json(params, table)));
  return kOk;
}

int run_simulate(const Options& options) {
  auto config = sim_config(options);
  config.statistic = parse_statistic(options.stat);
  if (options.format == "csv" && config.statistic == Statistic::Both) {
    throw UsageError("CSV holds one statistic per file; choose --stat K, R, K-boundary or R-boundary");
  }
  const auto outcomes = simulate(config);
  emit(options, options.format == "csv" ? simulation_csv(outcomes.front()) : dump(simulation_json(outcomes)));
  return kOk;
}

int run_verify(const Options& options) {
  if (options.mode.empty()) throw UsageError("verify requires --mode");
  VerifyRequest request;
  request.mode = parse_verify_mode(options.mode);
  request.sim = sim_config(options);
  request.x_grid = options.x;
  request.tolerance = options.tol;
  const auto result = verify(request);
  emit(options, options.format == "csv" ? verify_csv(result) : dump(result.report));
  return options.strict && !result.all_pass ? kFailure : kOk;
}

// Brute-force and series oracles next to the production formulas.
int run_oracle(const Options& options) {
  const auto params = ModelParams::parse(options.r, options.p);
  Json report = metadata_json(params);
  report["kind"] = options.kind;
  Json rows = Json::array();
  std::ostringstream csv;
  if (options.kind == "cluster") {
    const auto enumerated = enumerate_small_pmf(params, static_cast<int>(options.n_max));
    csv << "n,enumerated,catalan_form,otter_dwass,abs_diff\n";
    for (std::int64_t n = 0; n <= options.n_max; ++n) {
      const double e = enumerated.pmf[static_cast<std::size_t>(n)].value();
      const double c = cluster_pmf(params, n).value();
      const double o = cluster_pmf_otter_dwass(params, n).value();
      rows.push_back({{"n", n}, {"enumerated", e}, {"catalan_form", c}, {"otter_dwass", o}, {"abs_diff", std::abs(e - c)}});
      csv << n << ',' << format_number(e) << ',' << format_number(c) << ',' << format_number(o) << ','
          << format_number(std::abs(e - c)) << '\n';
    }
  } else if (options.kind == "run") {
    report["series_n_max"] = options.series_n;
    csv << "h,recursion,series_lower,series_upper,contained\n";
    for (std::int64_t h = 0; h <= options.n_max; ++h) {
      const double recursion = run_cdf_recursion(params, h).tail.value();
      const auto bracket = run_tail_series(params, static_cast<int>(h), options.series_n);
      const bool contained = bracket.contains(recursion, 1e-14);
      rows.push_back({{"h", h},
                      {"recursion", recursion},
                      {"series_lower", bracket.lower_value()},
                      {"series_upper", bracket.upper_value()},
                      {"contained", contained}});
      csv << h << ',' << format_number(recursion) << ',' << format_number(bracket.lower_value()) << ','
          << format_number(bracket.upper_value()) << ',' << (contained ? 1 : 0) << '\n';
    }
  } else {
    throw UsageError("--kind must be cluster or run");
  }
  report["rows"] = std::move(rows);
  emit(options, options.format == "csv" ? csv.str() : dump(report));
  return kOk;
}

void add_params(CLI::App* command, Options& options) {
  command->add_option("--r", options.r, "tree arity r >= 2")->capture_default_str();
  command->add_option("--p", options.p, "open-site probability, decimal or a/b")->required();
}

void add_output(CLI::App* command, Options& options) {
  command->add_option("--format", options.format, "output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  command->add_option("--out", options.out, "output file (default: stdout)");
}

void add_simulation(CLI::App* command, Options& options) {
  command->add_option("--d", options.d, "depth d of T_d")->capture_default_str();
  command->add_option("--reps", options.reps, "number of replicates")->capture_default_str();
  command->add_option("--seed", options.seed, "64-bit seed")->capture_default_str();
  command->add_option("--cap", options.cap, "cluster size cap, 0 = none")->capture_default_str();
  command->add_option("--height-cap", options.height_cap, "run length cap, 0 = none")->capture_default_str();
  command->add_option("--threads", options.threads, "worker threads, 0 = all cores; never changes results")
      ->capture_default_str();
  command->add_option("--budget", options.budget, "maximum planned node visits")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact laws, Monte Carlo and limit-law checks for percolation on the r-ary tree"};
  app.set_version_flag("--version", std::string(kCodeVersion));
  app.require_subcommand(1);
  Options options;

  auto* constants = app.add_subcommand("constants", "kappa, regime and limit constants");
  add_params(constants, options);
  add_output(constants, options);

  auto* exact = app.add_subcommand("exact-dist", "exact pmf/tail table of K(v) or R(v)");
  add_params(exact, options);
  add_output(exact, options);
  exact->add_option("--kind", options.kind, "cluster or run")->capture_default_str();
  exact->add_option("--n-max", options.n_max, "largest n (or h) in the table")->capture_default_str();

  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo of K_d, R_d or the horizon maxima");
  add_params(simulate_cmd, options);
  add_output(simulate_cmd, options);
  add_simulation(simulate_cmd, options);
  simulate_cmd->add_option("--stat", options.stat, "K, R, K-boundary, R-boundary or both")->capture_default_str();

  auto* verify_cmd = app.add_subcommand("verify", "simulate and compare with exp(-lambda) and the limit law");
  add_params(verify_cmd, options);
  add_output(verify_cmd, options);
  add_simulation(verify_cmd, options);
  verify_cmd
      ->add_option("--mode", options.mode, "critical-cluster, subcritical-cluster, critical-run or subcritical-run")
      ->required();
  verify_cmd->add_option("--x", options.x, "comma-separated grid of x offsets")->delimiter(',');
  verify_cmd->add_option("--tol", options.tol, "absolute tolerance per grid point")->capture_default_str();
  verify_cmd->add_flag("--strict", options.strict, "exit with status 1 when a grid point fails");

  auto* oracle = app.add_subcommand("oracle", "brute-force enumeration or series bracket against the formulas");
  add_params(oracle, options);
  add_output(oracle, options);
  oracle->add_option("--kind", options.kind, "cluster (enumeration, n-max <= 8) or run (series bracket)")
      ->capture_default_str();
  oracle->add_option("--n-max", options.n_max, "largest n (cluster) or h (run)")->capture_default_str();
  oracle->add_option("--series-n", options.series_n, "cluster sizes kept in the run series")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (constants->parsed()) return run_constants(options);
    if (exact->parsed()) return run_exact_dist(options);
    if (simulate_cmd->parsed()) return run_simulate(options);
    if (verify_cmd->parsed()) return run_verify(options);
    if (oracle->parsed()) return run_oracle(options);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const budget_error& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return kBudget;
  } catch (const std::invalid_argument& e) {  // precondition_error
    std::cerr << "precondition violated: " << e.what() << "\n";
    return kPrecondition;
  } catch (const std::domain_error& e) {  // regime_error
    std::cerr << "regime error: " << e.what() << "\n";
    return kPrecondition;
  } catch (const std::length_error& e) {  // resource_error
    std::cerr << "resource limit: " << e.what() << "\n";
    return kPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
