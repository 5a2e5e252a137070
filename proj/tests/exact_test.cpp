#include "treeperc/exact.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "treeperc/sim.hpp"

namespace treeperc {
namespace {

const ModelParams kSub(2, 0.3);
const ModelParams kCrit(2, Rational{1, 2});

TEST(ClusterPmfTest, SmallValues) {
  EXPECT_NEAR(cluster_pmf(kSub, 0).value(), 0.7, 1e-15);
  EXPECT_NEAR(cluster_pmf(kSub, 1).value(), 0.147, 1e-15);
  EXPECT_NEAR(cluster_pmf(kSub, 2).value(), 0.06174, 1e-15);
  EXPECT_NEAR(cluster_pmf(kSub, 3).value(), 5 * std::pow(0.3, 3) * std::pow(0.7, 4), 1e-15);
  EXPECT_THROW(cluster_pmf(kSub, -1), precondition_error);
}

TEST(ClusterPmfTest, OtterDwassFormAgrees) {
  for (int r : {2, 3}) {
    for (double p : {0.2, 0.3, 1.0 / r}) {
      const ModelParams params(r, p);
      for (int n = 0; n <= 50; ++n) {
        const double catalan_form = cluster_pmf(params, n).value();
        const double hitting_form = cluster_pmf_otter_dwass(params, n).value();
        EXPECT_NEAR(hitting_form / catalan_form, 1.0, 1e-12) << "r=" << r << " p=" << p << " n=" << n;
      }
    }
  }
}

TEST(ClusterPmfTest, MatchesEnumeration) {
  for (int r : {2, 3}) {
    for (double p : {0.2, 0.3, 1.0 / r}) {
      const ModelParams params(r, p);
      const auto table = enumerate_small_pmf(params, 7);
      for (int n = 0; n <= 7; ++n) {
        EXPECT_NEAR(cluster_pmf(params, n).value(), table.pmf[static_cast<std::size_t>(n)].value(), 1e-14);
      }
    }
  }
}

TEST(ClusterPmfTest, ExactAndStirlingRoutesAgreeOnOverlap) {
  for (const auto& params : {kSub, kCrit, ModelParams(3, 0.2)}) {
    const ClusterLaw law(params);
    for (int n = 480; n <= kExactCatalanThreshold; ++n) {
      EXPECT_NEAR(law.log_pmf_stirling(n), law.log_pmf(n), 1e-10 * std::abs(law.log_pmf(n)));
    }
  }
}

TEST(ClusterPmfTest, Normalization) {
  const ClusterLaw law(kSub);
  double total = 0.0;
  for (int n = 0; n <= 500; ++n) total += law.pmf(n);
  EXPECT_GE(total, 1.0 - 1e-10);
  EXPECT_LE(total, 1.0 + 1e-12);
}

TEST(ClusterPmfTest, MeanMatchesBranchingIdentity) {
  // E K(v) = p / (1 - rp)
  const ClusterLaw law(kSub);
  double mean = 0.0;
  for (int n = 1; n <= 2000; ++n) mean += n * law.pmf(n);
  EXPECT_NEAR(mean, 0.75, 1e-10);
}

TEST(ClusterTailTest, SmallValues) {
  EXPECT_NEAR(cluster_tail(kSub, 0).value(), 0.3, 1e-15);
  EXPECT_NEAR(cluster_tail(kSub, 2).value(), 0.09126, 1e-14);
  EXPECT_DOUBLE_EQ(cluster_tail(kSub, -1).value(), 1.0);
  EXPECT_THROW(cluster_tail(ModelParams(3, 0.5), 3), regime_error);
}

TEST(ClusterTailTest, DirectAndComplementRoutesAgree) {
  const ClusterLaw law(kSub);
  for (int n : {0, 5, 20, 40}) {
    const double complement = detail::cluster_tail_complement(law, n);
    const double direct = detail::cluster_tail_direct(law, n).value();
    EXPECT_NEAR(direct / complement, 1.0, 1e-9) << n;
  }
}

TEST(ClusterTailTest, DeepSubcriticalTailStaysRelative) {
  // Psi_300 ~ 1e-26: far below what 1 - sum could resolve.
  const double tail = cluster_tail(kSub, 300).value();
  EXPECT_GT(tail, 0.0);
  EXPECT_LT(tail, 1e-20);
  const ClusterLaw law(kSub);
  double direct = 0.0;
  for (int m = 4000; m > 300; --m) direct += law.pmf(m);
  EXPECT_NEAR(tail / direct, 1.0, 1e-12);
}

TEST(ClusterTailTest, CriticalTailMatchesAsymptote) {
  const double tail = cluster_tail(kCrit, 10000).value();
  EXPECT_NEAR(tail / 0.564e-2, 1.0, 0.05);
  EXPECT_NEAR(tail * 100.0 / constant_c1(kCrit), 1.0, 0.05);
}

TEST(ClusterTailTest, StrictlyDecreasing) {
  for (const auto& params : {kSub, kCrit, ModelParams(3, 0.2)}) {
    const auto table = cluster_table(params, 400);
    for (std::size_t n = 1; n < table.tail.size(); ++n) EXPECT_LT(table.tail[n], table.tail[n - 1]) << n;
  }
}

TEST(ClusterTailTest, BatchMatchesSingle) {
  const std::vector<std::int64_t> sizes{0, 3, 17, 250, 2000};
  for (const auto& params : {kSub, kCrit}) {
    const auto batch = cluster_tails(params, sizes);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      EXPECT_NEAR(batch[i].log_value(), cluster_tail(params, sizes[i]).log_value(), 1e-9);
    }
  }
  EXPECT_THROW(cluster_tails(kSub, {3, 1}), precondition_error);
}

TEST(ClusterTailAsymptoticTest, SubcriticalRatio) {
  const double ratio = cluster_tail(kSub, 300).value() / cluster_tail_asymptotic(kSub, 300);
  EXPECT_GE(ratio, 0.95);
  EXPECT_LE(ratio, 1.05);
}

TEST(ClusterTailAsymptoticTest, CriticalRatio) {
  const double ratio = cluster_tail(kCrit, 10000).value() / cluster_tail_asymptotic(kCrit, 10000);
  EXPECT_GE(ratio, 0.95);
  EXPECT_LE(ratio, 1.05);
}

TEST(ClusterTailAsymptoticTest, PlugInAndErrors) {
  EXPECT_NEAR(cluster_tail_asymptotic(kSub, 1), constant_c2(kSub) * 0.84 * 0.84, 1e-14);
  EXPECT_THROW(cluster_tail_asymptotic(kSub, 0), precondition_error);
  EXPECT_THROW(cluster_tail_asymptotic(ModelParams(2, 0.7), 5), regime_error);
}

TEST(DistTableTest, ClusterInvariants) {
  const auto table = cluster_table(kSub, 300);
  EXPECT_DOUBLE_EQ(table.pmf[0].value(), 1.0 - 0.3);
  for (std::size_t n = 1; n < table.tail.size(); ++n) {
    EXPECT_NEAR(table.tail[n].value(), table.tail[n - 1].value() - table.pmf[n].value(), 1e-12);
    EXPECT_LE(table.tail[n], table.tail[n - 1]);
  }
  EXPECT_NEAR(table.tail[0].value(), 0.3, 1e-14);
  EXPECT_NEAR(table.cdf(2).value(), 1.0 - 0.09126, 1e-14);
}

TEST(DistTableTest, RunInvariants) {
  const auto table = run_table(kSub, 60);
  EXPECT_NEAR(table.pmf[0].value(), 0.7, 1e-15);
  for (std::size_t h = 1; h < table.tail.size(); ++h) {
    EXPECT_NEAR(table.tail[h].value(), table.tail[h - 1].value() - table.pmf[h].value(), 1e-12);
  }
}

TEST(RunRecursionTest, SmallValues) {
  EXPECT_NEAR(run_cdf_recursion(kSub, 0).tail.value(), 0.3, 1e-15);
  EXPECT_NEAR(run_cdf_recursion(kSub, 1).tail.value(), 0.153, 1e-15);
  EXPECT_NEAR(run_cdf_recursion(kSub, 1).cdf.value(), 0.847, 1e-15);
  EXPECT_THROW(run_cdf_recursion(kSub, -1), precondition_error);
}

TEST(RunRecursionTest, CriticalTail) {
  const double scaled = 1000.0 * run_cdf_recursion(kCrit, 1000).tail.value();
  EXPECT_NEAR(scaled, 2.0, 0.2);
}

TEST(RunRecursionTest, Monotone) {
  for (const auto& params : {kSub, kCrit}) {
    const auto logs = run_log_tails(params, 2000);
    for (std::size_t h = 1; h < logs.size(); ++h) EXPECT_LT(logs[h], logs[h - 1]);
    // u_h increases to the extinction probability 1.
    EXPECT_GT(LogProb::from_log(logs.back()).complement().value(), 0.99);
  }
}

TEST(RunRecursionTest, DeepTailInLogSpace) {
  // (rp)^h with rp = 0.6 underflows doubles near h = 1400.
  const auto logs = run_log_tails(kSub, 3000);
  const double slope = logs[3000] - logs[2999];
  EXPECT_NEAR(slope, std::log(0.6), 1e-12);
  EXPECT_TRUE(std::isfinite(logs[3000]));
}

TEST(RunTailSeriesTest, BracketsContainRecursion) {
  for (int h = 0; h <= 8; ++h) {
    const auto bracket = run_tail_series(kSub, h, 200);
    const double oracle = run_cdf_recursion(kSub, h).tail.value();
    EXPECT_TRUE(bracket.contains(oracle, 1e-10)) << "h=" << h << " lower=" << bracket.lower_value()
                                                 << " upper=" << bracket.upper_value() << " oracle=" << oracle;
    EXPECT_LT(bracket.upper_value() - bracket.lower_value(), 1e-12);
  }
}

TEST(RunTailSeriesTest, RootTailIsP) {
  const auto bracket = run_tail_series(kSub, 0, 200);
  EXPECT_TRUE(bracket.contains(0.3, 1e-12));
}

TEST(RunTailSeriesTest, LooseTruncationStillBrackets) {
  const auto bracket = run_tail_series(kSub, 4, 6);
  const double oracle = run_cdf_recursion(kSub, 4).tail.value();
  EXPECT_TRUE(bracket.contains(oracle));
  EXPECT_GT(bracket.upper_value() - bracket.lower_value(), 1e-3);
}

TEST(RunTailSeriesTest, CriticalBracket) {
  const auto bracket = run_tail_series(kCrit, 3, 300);
  const double oracle = run_cdf_recursion(kCrit, 3).tail.value();
  EXPECT_TRUE(bracket.contains(oracle, 1e-14)) << bracket.lower_value() << " " << bracket.upper_value() << " " << oracle;
}

TEST(RunTailSeriesTest, Preconditions) {
  EXPECT_THROW(run_tail_series(kSub, 4, 5), precondition_error);
  EXPECT_THROW(run_tail_series(ModelParams(2, 0.6), 1, 10), regime_error);
  EXPECT_THROW(run_tail_series(kSub, 2, 5000), resource_error);
}

TEST(EstimateC4Test, ConvergesAndSelfConsistent) {
  const auto estimate = estimate_c4(kSub, 300);
  EXPECT_TRUE(estimate.converged);
  EXPECT_LT(estimate.increment, 1e-8);
  EXPECT_GT(estimate.value, 0.0);
  const double ratio = run_cdf_recursion(kSub, 350).tail.value() / (estimate.value * std::pow(0.6, 350));
  EXPECT_GE(ratio, 0.999);
  EXPECT_LE(ratio, 1.001);
}

TEST(EstimateC4Test, NearCritical) {
  const ModelParams params(2, 0.45);
  const auto estimate = estimate_c4(params, 400);
  EXPECT_TRUE(estimate.converged);
  const double ratio =
      std::exp(run_log_tails(params, 350).back() - std::log(estimate.value) - 350 * std::log(0.9));
  EXPECT_GE(ratio, 0.999);
  EXPECT_LE(ratio, 1.001);
}

TEST(EstimateC4Test, NonConvergenceReported) {
  const auto estimate = estimate_c4(ModelParams(2, 0.49), 20);
  EXPECT_FALSE(estimate.converged);
  EXPECT_THROW(estimate_c4(kCrit, 300), regime_error);
}

}  // namespace
}  // namespace treeperc
