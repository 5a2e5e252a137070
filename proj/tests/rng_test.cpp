#include "treeperc/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

namespace treeperc {
namespace {

// Known-answer vectors published with the Random123 reference implementation.
TEST(PhiloxTest, KnownAnswers) {
  using C = Philox4x32::Counter;
  EXPECT_EQ(Philox4x32::encrypt({0, 0, 0, 0}, {0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::encrypt({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::encrypt({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(SubstreamTest, DeterministicAndDistinct) {
  Substream a(7, 3, 11), b(7, 3, 11);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());

  std::set<std::uint64_t> firsts;
  firsts.insert(Substream(7, 3, 11)());
  firsts.insert(Substream(8, 3, 11)());
  firsts.insert(Substream(7, 4, 11)());
  firsts.insert(Substream(7, 3, 12)());
  firsts.insert(Substream(7, 3, 11, StreamDomain::SiteBits)());
  firsts.insert(Substream(7, 3, std::uint64_t{1} << 40)());
  EXPECT_EQ(firsts.size(), 6u);
}

TEST(SubstreamTest, UniformMoments) {
  Substream s(1, 0, 0);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  // 5 sigma bands for mean 1/2 and second moment 1/3.
  EXPECT_NEAR(sum / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sq / n, 1.0 / 3, 5 * std::sqrt(4.0 / 45 / n));
}

TEST(SiteBitsTest, SiblingsShareBlockButDiffer) {
  SiteBits bits(5, 0, 0.5);
  SiteBits again(5, 0, 0.5);
  int open = 0;
  const int n = 100000;
  for (std::uint64_t v = 0; v < n; ++v) {
    const bool o = bits.open(v);
    EXPECT_EQ(o, again.open(v));
    open += o;
  }
  EXPECT_NEAR(static_cast<double>(open) / n, 0.5, 5 * std::sqrt(0.25 / n));
  // Random access gives the same answers as sequential access.
  SiteBits random_access(5, 0, 0.5);
  EXPECT_EQ(random_access.open(77777), bits.open(77777));
  EXPECT_EQ(random_access.open(3), again.open(3));
}

TEST(BernoulliThresholdTest, Extremes) {
  BernoulliThreshold half(0.5);
  EXPECT_TRUE(half(0));
  EXPECT_TRUE(half((std::uint64_t{1} << 63) - 1));
  EXPECT_FALSE(half(std::uint64_t{1} << 63));
}

TEST(BinomialSamplerTest, MomentsBothRoutes) {
  const double p = 0.3;
  BinomialSampler sample(p);
  for (std::uint64_t trials : {1u, 2u, 7u, 40u, 41u, 1000u}) {
    Substream s(9, 0, trials);
    const int n = 50000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
      const auto k = sample(trials, s);
      ASSERT_LE(k, trials);
      sum += static_cast<double>(k);
      sq += static_cast<double>(k) * static_cast<double>(k);
    }
    const double mean = static_cast<double>(trials) * p;
    const double var = static_cast<double>(trials) * p * (1 - p);
    EXPECT_NEAR(sum / n, mean, 5 * std::sqrt(var / n)) << trials;
    const double sample_var = sq / n - (sum / n) * (sum / n);
    EXPECT_NEAR(sample_var / var, 1.0, 0.05) << trials;
  }
}

TEST(BinomialSamplerTest, SmallTrialPmf) {
  // Bin(2, 0.3): 0.49, 0.42, 0.09.
  BinomialSampler sample(0.3);
  Substream s(2, 0, 0);
  const int n = 200000;
  std::vector<int> counts(3, 0);
  for (int i = 0; i < n; ++i) ++counts[sample(2, s)];
  const double expected[] = {0.49, 0.42, 0.09};
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(static_cast<double>(counts[k]) / n, expected[k], 5 * std::sqrt(expected[k] * (1 - expected[k]) / n));
  }
  EXPECT_EQ(sample(0, s), 0u);
}

}  // namespace
}  // namespace treeperc
