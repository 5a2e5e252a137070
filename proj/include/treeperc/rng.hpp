#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (seed, domain, replicate, vertex, position), so a simulation does not depend
// on traversal order or on how replicates are scheduled across threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace treeperc {

/// Identifier embedded in every simulation output.
inline constexpr std::string_view kGeneratorId = "philox4x32-10/treeperc-streams-v1";

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter encrypt(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t product0 = static_cast<std::uint64_t>(kMultiplier0) * ctr[0];
      const std::uint64_t product1 = static_cast<std::uint64_t>(kMultiplier1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(product0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(product0);
      const auto hi1 = static_cast<std::uint32_t>(product1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(product1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMultiplier0 = 0xD2511F53u;
  static constexpr std::uint32_t kMultiplier1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Stream domains; the top bit of the vertex word carries the domain.
enum class StreamDomain : std::uint32_t { SiteBits = 0, Continuation = 1 };

inline constexpr Philox4x32::Key seed_key(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

inline constexpr Philox4x32::Counter stream_counter(std::uint32_t block, std::uint32_t replicate,
                                                    std::uint64_t vertex, StreamDomain domain) {
  return {block, replicate, static_cast<std::uint32_t>(vertex),
          static_cast<std::uint32_t>(vertex >> 32) | (static_cast<std::uint32_t>(domain) << 31)};
}

/// Vertex words must fit in 63 bits.
inline constexpr std::uint64_t kMaxStreamVertex = (std::uint64_t{1} << 63) - 1;

/// Sequential 64-bit draws from the substream (seed, domain, replicate, vertex).
/// Satisfies UniformRandomBitGenerator.
class Substream {
 public:
  using result_type = std::uint64_t;

  Substream(std::uint64_t seed, std::uint32_t replicate, std::uint64_t vertex,
            StreamDomain domain = StreamDomain::Continuation)
      : key_(seed_key(seed)), replicate_(replicate), vertex_(vertex), domain_(domain) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (lane_ == 2) {
      const auto out = Philox4x32::encrypt(stream_counter(block_++, replicate_, vertex_, domain_), key_);
      buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
      buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
      lane_ = 0;
    }
    return buffer_[lane_++];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  Philox4x32::Key key_;
  std::uint32_t replicate_;
  std::uint64_t vertex_;
  StreamDomain domain_;
  std::uint32_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int lane_ = 2;
};

/// Open with probability p given a uniform 64-bit word: open iff word < threshold.
class BernoulliThreshold {
 public:
  explicit BernoulliThreshold(double p) : threshold_(static_cast<std::uint64_t>(std::ldexp(p, 64))) {}
  bool operator()(std::uint64_t word) const { return word < threshold_; }

 private:
  std::uint64_t threshold_;
};

/// Site bits of the tree inside T_d: vertex v uses the 64-bit half v mod 2 of
/// the block for (v / 2). Consecutive siblings share one block evaluation.
class SiteBits {
 public:
  SiteBits(std::uint64_t seed, std::uint32_t replicate, double p)
      : key_(seed_key(seed)), replicate_(replicate), open_(p) {}

  bool open(std::uint64_t vertex) {
    const std::uint64_t group = vertex >> 1;
    if (group != cached_group_) {
      const auto out = Philox4x32::encrypt(
          stream_counter(0, replicate_, group, StreamDomain::SiteBits), key_);
      cached_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
      cached_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
      cached_group_ = group;
    }
    return open_(cached_[vertex & 1]);
  }

 private:
  Philox4x32::Key key_;
  std::uint32_t replicate_;
  BernoulliThreshold open_;
  std::uint64_t cached_group_ = std::numeric_limits<std::uint64_t>::max();
  std::array<std::uint64_t, 2> cached_{};
};

/// Bin(trials, p). Small trial counts use sequential inversion on one
/// uniform; larger ones defer to std::binomial_distribution driven by the
/// same substream.
class BinomialSampler {
 public:
  static constexpr std::uint64_t kInversionLimit = 40;

  explicit BinomialSampler(double p) : p_(p), odds_(p / (1.0 - p)) {
    for (std::uint64_t n = 0; n <= kInversionLimit; ++n) {
      zero_mass_[n] = std::pow(1.0 - p, static_cast<double>(n));
    }
  }

  std::uint64_t operator()(std::uint64_t trials, Substream& stream) const {
    if (trials == 0) return 0;
    if (trials <= kInversionLimit) {
      const double u = stream.uniform();
      double mass = zero_mass_[trials];
      double cdf = mass;
      std::uint64_t k = 0;
      while (u >= cdf && k < trials) {
        mass *= odds_ * static_cast<double>(trials - k) / static_cast<double>(k + 1);
        ++k;
        cdf += mass;
      }
      return k;
    }
    std::binomial_distribution<std::uint64_t> dist(trials, p_);
    return dist(stream);
  }

 private:
  double p_;
  double odds_;
  std::array<double, kInversionLimit + 1> zero_mass_{};
};

}  // namespace treeperc
