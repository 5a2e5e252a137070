#include "treeperc/report.hpp"

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace treeperc {
namespace {

const ModelParams kSub(2, 0.3);

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream fields(line);
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

void expect_same_number(const std::string& cell, const Json& value) {
  if (value.is_null()) {
    EXPECT_TRUE(cell.empty() || cell == "-inf" || cell == "inf" || cell == "nan") << cell;
    return;
  }
  const double parsed = std::stod(cell);
  const double expected = value.get<double>();
  EXPECT_LE(std::abs(parsed - expected), 1e-15 * std::abs(expected)) << cell;
}

TEST(FormatNumberTest, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.3), "0.3");
  EXPECT_EQ(format_number(0.1 + 0.2), "0.30000000000000004");
  EXPECT_EQ(format_number(-INFINITY), "-inf");
  for (const double x : {1.0 / 3.0, 6.02e23, 2.2250738585072014e-308, 0.84}) EXPECT_EQ(std::stod(format_number(x)), x);
}

TEST(DistTableReportTest, CsvMatchesJson) {
  const auto table = cluster_table(kSub, 40);
  const auto json = dist_table_json(kSub, table);
  const auto rows = parse_csv(dist_table_csv(table));
  ASSERT_EQ(rows.front(), (std::vector<std::string>{"n", "pmf", "tail", "log_pmf", "log_tail"}));
  ASSERT_EQ(rows.size(), 42u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = json["rows"][i - 1];
    EXPECT_EQ(std::stoll(rows[i][0]), row["n"].get<std::int64_t>());
    expect_same_number(rows[i][1], row["pmf"]);
    expect_same_number(rows[i][2], row["tail"]);
    expect_same_number(rows[i][3], row["log_pmf"]);
    expect_same_number(rows[i][4], row["log_tail"]);
  }
  EXPECT_EQ(json["rows"][3]["catalan"], "5");
  EXPECT_EQ(json["rows"][40]["catalan"], generalized_catalan(2, 40).str());
  EXPECT_EQ(json["schema_version"], kSchemaVersion);
  EXPECT_EQ(json["generator"], std::string(kGeneratorId));
}

TEST(DistTableReportTest, LargeCatalanIsDecimalString) {
  const auto json = dist_table_json(ModelParams(3, 0.2), cluster_table(ModelParams(3, 0.2), 200));
  const std::string text = json["rows"][200]["catalan"].get<std::string>();
  EXPECT_GT(text.size(), 100u);
  EXPECT_EQ(text.find_first_not_of("0123456789"), std::string::npos);
}

TEST(SimulationReportTest, CsvMatchesJsonRecords) {
  SimConfig config;
  config.params = kSub;
  config.d = 5;
  config.replicates = 50;
  config.seed = 42;
  config.statistic = Statistic::ClusterK;
  const auto outcomes = simulate(config);
  const auto json = simulation_json(outcomes);
  const auto rows = parse_csv(simulation_csv(outcomes.front()));
  ASSERT_EQ(rows.front(), (std::vector<std::string>{"replicate", "value", "censored", "work"}));
  const auto& records = json["outcomes"][0]["records"];
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(std::stoull(rows[i][0]), records["replicate"][i - 1].get<std::uint64_t>());
    EXPECT_EQ(std::stoull(rows[i][1]), records["value"][i - 1].get<std::uint64_t>());
    EXPECT_EQ(rows[i][2] == "1", records["censored"][i - 1].get<bool>());
    EXPECT_EQ(std::stoull(rows[i][3]), records["work"][i - 1].get<std::uint64_t>());
  }
  EXPECT_EQ(json["seed"], 42u);
  std::uint64_t total = 0;
  for (const auto& bin : json["outcomes"][0]["histogram"]) total += bin[1].get<std::uint64_t>();
  EXPECT_EQ(total, 50u);
}

TEST(ConstantsReportTest, RegimeRouting) {
  const auto sub = constants_json(kSub);
  EXPECT_DOUBLE_EQ(sub["constants"]["kappa"]["value"].get<double>(), 0.84);
  EXPECT_TRUE(sub["constants"].contains("C4"));
  EXPECT_TRUE(sub["constants"]["C4"]["converged"].get<bool>());
  EXPECT_FALSE(sub["constants"].contains("C1"));

  const auto crit = constants_json(ModelParams::parse(2, "1/2"));
  EXPECT_EQ(crit["params"]["regime"], "critical");
  EXPECT_DOUBLE_EQ(crit["constants"]["C3"]["value"].get<double>(), 2.0);
  EXPECT_FALSE(crit["constants"].contains("C4"));

  const auto super = constants_json(ModelParams(3, 0.5));
  EXPECT_TRUE(super["constants"]["C2"].contains("error"));
  EXPECT_TRUE(super["constants"]["C1"].contains("error"));
  EXPECT_TRUE(super["constants"]["kappa"].contains("value"));
}

TEST(VerifyReportTest, CsvMatchesJsonAndRegimeChecked) {
  VerifyRequest request;
  request.mode = VerifyMode::SubcriticalCluster;
  request.sim.params = kSub;
  request.sim.d = 8;
  request.sim.replicates = 300;
  request.sim.seed = 3;
  const auto result = verify(request);
  const auto rows = parse_csv(verify_csv(result));
  ASSERT_EQ(rows.size(), 6u);
  const auto& points = result.report["points"];
  for (std::size_t i = 1; i < rows.size(); ++i) {
    expect_same_number(rows[i][0], points[i - 1]["x"]);
    EXPECT_EQ(std::stoll(rows[i][1]), points[i - 1]["threshold"].get<std::int64_t>());
    expect_same_number(rows[i][2], points[i - 1]["empirical"]);
    expect_same_number(rows[i][3], points[i - 1]["lambda"]);
    expect_same_number(rows[i][4], points[i - 1]["exp_neg_lambda"]);
    expect_same_number(rows[i][5], points[i - 1]["limit_cdf"]);
    expect_same_number(rows[i][6], points[i - 1]["ci_half_width"]);
    expect_same_number(rows[i][7], points[i - 1]["g_bound"]);
  }
  EXPECT_NEAR(result.report["centering"].get<double>(), mu_d(kSub, 8), 0.0);

  request.mode = VerifyMode::CriticalCluster;
  EXPECT_THROW(verify(request), regime_error);
  request.mode = VerifyMode::SubcriticalRun;
  request.sim.params = ModelParams(2, Rational{1, 2});
  EXPECT_THROW(verify(request), regime_error);
}

TEST(VerifyReportTest, ThresholdAboveCapHasNoEmpirical) {
  VerifyRequest request;
  request.mode = VerifyMode::CriticalCluster;
  request.sim.params = ModelParams(2, Rational{1, 2});
  request.sim.d = 4;
  request.sim.replicates = 100;
  request.sim.cluster_size_cap = 1000;
  request.x_grid = {-2, 4};  // thresholds 64 and 4096
  const auto result = verify(request);
  EXPECT_TRUE(result.points[0].empirical.has_value());
  EXPECT_FALSE(result.points[1].empirical.has_value());
  EXPECT_FALSE(result.points[1].pass);
  EXPECT_FALSE(result.all_pass);
}

// ---------------------------------------------------------------------------
// CLI

struct CliRun {
  int status = -1;
  std::string out;
};

CliRun run_cli(const std::string& args) {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / ("treeperc_report_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  const std::string command = std::string(TREEPERC_CLI_PATH) + " " + args + " > " + path.string() + " 2>/dev/null";
  const int raw = std::system(command.c_str());
  CliRun run;
  run.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(path, std::ios::binary);
  run.out.assign(std::istreambuf_iterator<char>(in), {});
  std::filesystem::remove(path);
  return run;
}

TEST(CliTest, ExitCodes) {
  EXPECT_EQ(run_cli("constants --p 0.3").status, 0);
  EXPECT_EQ(run_cli("--help").status, 0);
  EXPECT_EQ(run_cli("").status, 2);
  EXPECT_EQ(run_cli("constants").status, 2);
  EXPECT_EQ(run_cli("constants --p 0.3 --bogus").status, 2);
  EXPECT_EQ(run_cli("simulate --p 0.3 --d notanumber").status, 2);
  EXPECT_EQ(run_cli("simulate --p 0.3 --format csv").status, 2);
  EXPECT_EQ(run_cli("constants --p 1.5").status, 3);
  EXPECT_EQ(run_cli("constants --r 1 --p 0.3").status, 3);
  EXPECT_EQ(run_cli("verify --mode critical-cluster --p 0.3 --d 4 --reps 10").status, 3);
  EXPECT_EQ(run_cli("simulate --r 3 --p 0.5 --d 3 --reps 5 --stat K").status, 3);
  EXPECT_EQ(run_cli("oracle --p 0.3 --n-max 9").status, 3);
  EXPECT_EQ(run_cli("simulate --p 0.3 --d 25 --reps 1000").status, 4);
  EXPECT_EQ(run_cli("simulate --p 0.3 --d 4 --reps 10 --budget 100").status, 4);
}

TEST(CliTest, ConstantsContent) {
  const auto sub = Json::parse(run_cli("constants --p 0.3").out);
  EXPECT_DOUBLE_EQ(sub["constants"]["kappa"]["value"].get<double>(), 0.84);
  const auto crit = Json::parse(run_cli("constants --p 1/2").out);
  EXPECT_EQ(crit["params"]["regime"], "critical");
  EXPECT_DOUBLE_EQ(crit["constants"]["C3"]["value"].get<double>(), 2.0);
  EXPECT_FALSE(crit["constants"].contains("C4"));
  const auto decimal = Json::parse(run_cli("constants --p 0.5").out);
  EXPECT_EQ(decimal["params"]["regime"], "critical");
}

TEST(CliTest, OutputEmbedsProvenance) {
  const auto json = Json::parse(run_cli("simulate --p 0.3 --d 3 --reps 5 --seed 17").out);
  EXPECT_EQ(json["seed"], 17u);
  EXPECT_EQ(json["generator"], std::string(kGeneratorId));
  EXPECT_EQ(json["version"], std::string(kCodeVersion));
  EXPECT_EQ(json["params"]["r"], 2);
  const auto csv = run_cli("simulate --p 0.3 --d 3 --reps 5 --seed 17 --stat R --format csv").out;
  EXPECT_NE(csv.find("seed=17"), std::string::npos);
  EXPECT_NE(csv.find(std::string(kGeneratorId)), std::string::npos);
}

TEST(CliTest, VerifyIsByteIdenticalAcrossRunsAndThreads) {
  const std::string args = "verify --mode subcritical-run --p 0.3 --d 9 --reps 400 --seed 5";
  const auto first = run_cli(args);
  const auto second = run_cli(args);
  const auto threaded = run_cli(args + " --threads 3");
  ASSERT_EQ(first.status, 0);
  EXPECT_FALSE(first.out.empty());
  EXPECT_EQ(first.out, second.out);
  EXPECT_EQ(first.out, threaded.out);
  const auto other_seed = run_cli("verify --mode subcritical-run --p 0.3 --d 9 --reps 400 --seed 6");
  EXPECT_NE(first.out, other_seed.out);
}

TEST(CliTest, OutFileAndNegativeGrid) {
  const auto path = std::filesystem::temp_directory_path() / ("treeperc_out_" + std::to_string(::getpid()) + ".csv");
  EXPECT_EQ(run_cli("exact-dist --p 0.3 --kind run --n-max 5 --format csv --out " + path.string()).status, 0);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "n,pmf,tail,log_pmf,log_tail");
  std::filesystem::remove(path);

  const auto json = Json::parse(run_cli("verify --mode subcritical-cluster --p 0.3 --d 6 --reps 50 --x=-2,0,2").out);
  ASSERT_EQ(json["points"].size(), 3u);
  EXPECT_EQ(json["points"][0]["x"], -2.0);
}

TEST(CliTest, OracleAgreement) {
  const auto cluster = Json::parse(run_cli("oracle --r 3 --p 0.2 --kind cluster --n-max 7").out);
  for (const auto& row : cluster["rows"]) EXPECT_LT(row["abs_diff"].get<double>(), 1e-12);
  const auto run = Json::parse(run_cli("oracle --p 0.3 --kind run --n-max 6").out);
  for (const auto& row : run["rows"]) EXPECT_TRUE(row["contained"].get<bool>());
}

}  // namespace
}  // namespace treeperc
