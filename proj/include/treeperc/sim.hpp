#pragma once

// Monte Carlo for the largest open cluster K_d and the longest open run R_d
// with root in T_d.
//
// Vertices are addressed by heap index: the root is 0 and the children of v
// are r v + 1 ... r v + r. Inside T_d each vertex draws its site bit from the
// SiteBits domain; every open vertex of generation d grows each of its
// children below the horizon as an independent Bin(r, p) branching process
// from the Continuation substream of that child. A replicate is therefore a
// pure function of (seed, replicate index).

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "treeperc/core.hpp"
#include "treeperc/exact.hpp"
#include "treeperc/rng.hpp"

namespace treeperc {

inline constexpr std::string_view kCodeVersion = "1.0.0";

enum class Statistic { ClusterK, RunR, BoundaryK, BoundaryR, Both };

inline std::string_view to_string(Statistic statistic) {
  switch (statistic) {
    case Statistic::ClusterK: return "K_d";
    case Statistic::RunR: return "R_d";
    case Statistic::BoundaryK: return "K_boundary";
    case Statistic::BoundaryR: return "R_boundary";
    case Statistic::Both: return "both";
  }
  return "unknown";
}

inline constexpr double kDefaultWorkBudget = 1e10;

struct SimConfig {
  ModelParams params{2, 0.3};
  int d = 0;
  std::uint64_t replicates = 1;
  std::uint64_t seed = 0;
  std::uint64_t cluster_size_cap = 0;  // 0 = none
  std::uint64_t height_cap = 0;        // 0 = none
  Statistic statistic = Statistic::Both;
  unsigned threads = 1;  // 0 = hardware concurrency; never affects results
  double work_budget = kDefaultWorkBudget;
};

/// Nodes the plan is going to visit at minimum.
inline double planned_work(const SimConfig& config) {
  const bool boundary_only =
      config.statistic == Statistic::BoundaryK || config.statistic == Statistic::BoundaryR;
  const double per_replicate = boundary_only ? static_cast<double>(boundary_size(config.params.r(), config.d))
                                             : static_cast<double>(tree_size(config.params.r(), config.d));
  return per_replicate * static_cast<double>(config.replicates);
}

inline void validate(const SimConfig& config) {
  if (config.d < 0) throw precondition_error("depth d must be >= 0");
  if (config.replicates < 1) throw precondition_error("replicates must be >= 1");
  if (config.replicates > std::numeric_limits<std::uint32_t>::max()) {
    throw precondition_error("replicates must fit in 32 bits");
  }
  // Children of the horizon need stream addresses below 2^63.
  if (tree_size(config.params.r(), config.d + 1) > kMaxStreamVertex) {
    throw precondition_error("depth d too large for vertex addressing");
  }
  if (classify(config.params) == Regime::Supercritical) {
    const bool size_capped = config.cluster_size_cap != 0;
    const bool height_capped = config.height_cap != 0;
    bool ok = true;
    switch (config.statistic) {
      case Statistic::ClusterK:
      case Statistic::BoundaryK: ok = size_capped; break;
      case Statistic::RunR:
      case Statistic::BoundaryR: ok = height_capped; break;
      case Statistic::Both: ok = size_capped || height_capped; break;
    }
    if (!ok) {
      throw precondition_error("supercritical parameters require a nonzero cap for " +
                               std::string(to_string(config.statistic)));
    }
  }
  if (const double work = planned_work(config); work > config.work_budget) {
    throw budget_error("planned work " + std::to_string(work) + " nodes exceeds budget " +
                       std::to_string(config.work_budget));
  }
}

// ============================================================================
// SINGLE-VERTEX SAMPLERS
// ============================================================================

/// One draw of the Bin(r, p) branching process started at a vertex: 0 if the
/// vertex is closed, else its total progeny and extinction generation count,
/// grown one generation at a time from the frontier count alone.
struct ProgenyDraw {
  std::uint64_t size = 0;    // K(v)
  std::uint64_t length = 0;  // R(v)
  bool censored = false;     // a cap stopped the process before extinction
  std::uint64_t work = 1;
};

class ProgenySampler {
 public:
  ProgenySampler(const ModelParams& params, std::uint64_t size_cap, std::uint64_t height_cap)
      : r_(static_cast<std::uint64_t>(params.r())),
        open_(params.p()),
        binomial_(params.p()),
        size_cap_(size_cap),
        height_cap_(height_cap) {
    if (classify(params) == Regime::Supercritical && size_cap == 0 && height_cap == 0) {
      throw precondition_error("supercritical sampling requires a size or height cap");
    }
  }

  ProgenyDraw operator()(Substream& stream) const {
    ProgenyDraw draw;
    if (!open_(stream())) {
      draw.size = 0;
      draw.length = 0;
      return draw;
    }
    draw.size = 1;
    draw.length = 1;
    if (hit_cap(draw)) {
      draw.censored = true;
      return draw;
    }
    std::uint64_t frontier = 1;
    constexpr std::uint64_t kFrontierLimit = std::uint64_t{1} << 56;
    while (true) {
      if (frontier > kFrontierLimit / r_) {
        draw.censored = true;
        break;
      }
      frontier = binomial_(frontier * r_, stream);
      ++draw.work;
      if (frontier == 0) break;
      draw.size += frontier;
      ++draw.length;
      if (hit_cap(draw)) {
        draw.censored = true;
        break;
      }
    }
    return draw;
  }

 private:
  bool hit_cap(const ProgenyDraw& draw) const {
    return (size_cap_ != 0 && draw.size >= size_cap_) || (height_cap_ != 0 && draw.length >= height_cap_);
  }

  std::uint64_t r_;
  BernoulliThreshold open_;
  BinomialSampler binomial_;
  std::uint64_t size_cap_;
  std::uint64_t height_cap_;
};

struct CappedValue {
  std::uint64_t value = 0;
  bool censored = false;
};

/// One draw of K(v), censored once the size reaches `cap` (0 = none).
inline CappedValue sample_cluster_size(const ModelParams& params, std::uint64_t cap, Substream& stream) {
  const auto draw = ProgenySampler(params, cap, 0)(stream);
  return {draw.size, draw.censored};
}

/// One draw of R(v), censored once the length reaches `cap` (0 = none).
inline CappedValue sample_run_length(const ModelParams& params, std::uint64_t cap, Substream& stream) {
  const auto draw = ProgenySampler(params, 0, cap)(stream);
  return {draw.length, draw.censored};
}

// ============================================================================
// FULL-TREE TRAVERSAL
// ============================================================================

/// Both statistics and their horizon-restricted counterparts from a single
/// realization.
struct TreeReplicate {
  std::uint64_t max_cluster = 0;           // K_d
  std::uint64_t max_boundary_cluster = 0;  // K(v) maximized over generation d
  std::uint64_t max_run = 0;               // R_d
  std::uint64_t max_boundary_run = 0;      // R(v) maximized over generation d
  bool cluster_censored = false;
  bool run_censored = false;
  std::uint64_t work = 0;
};

class TreeWalker {
 public:
  TreeWalker(const SimConfig& config, std::uint32_t replicate)
      : config_(config),
        replicate_(replicate),
        r_(static_cast<std::uint64_t>(config.params.r())),
        bits_(config.seed, replicate, config.params.p()),
        progeny_(config.params, config.cluster_size_cap, config.height_cap) {}

  TreeReplicate run() {
    visit(0, 0);
    if (config_.cluster_size_cap != 0 && result_.max_cluster >= config_.cluster_size_cap) {
      result_.cluster_censored = true;
    }
    if (config_.height_cap != 0 && result_.max_run >= config_.height_cap) result_.run_censored = true;
    return result_;
  }

 private:
  struct Subtree {
    std::uint64_t size = 0;    // S(v): open cluster rooted at v
    std::uint64_t length = 0;  // R(v)
  };

  Subtree visit(std::uint64_t vertex, int generation) {
    ++result_.work;
    const bool open = bits_.open(vertex);
    const std::uint64_t first_child = vertex * r_ + 1;
    Subtree here;
    if (generation == config_.d) {
      if (!open) return here;
      here.size = 1;
      std::uint64_t longest = 0;
      for (std::uint64_t c = 0; c < r_; ++c) {
        Substream stream(config_.seed, replicate_, first_child + c, StreamDomain::Continuation);
        const auto draw = progeny_(stream);
        here.size += draw.size;
        longest = std::max(longest, draw.length);
        result_.work += draw.work;
        if (draw.censored) {
          result_.cluster_censored = true;
          result_.run_censored = true;
        }
      }
      here.length = longest + 1;
      result_.max_boundary_cluster = std::max(result_.max_boundary_cluster, here.size);
      result_.max_boundary_run = std::max(result_.max_boundary_run, here.length);
    } else {
      std::uint64_t total = 0;
      std::uint64_t longest = 0;
      for (std::uint64_t c = 0; c < r_; ++c) {
        const auto child = visit(first_child + c, generation + 1);
        total += child.size;
        longest = std::max(longest, child.length);
      }
      if (!open) return here;
      here.size = total + 1;
      here.length = longest + 1;
    }
    result_.max_cluster = std::max(result_.max_cluster, here.size);
    result_.max_run = std::max(result_.max_run, here.length);
    return here;
  }

  const SimConfig& config_;
  std::uint32_t replicate_;
  std::uint64_t r_;
  SiteBits bits_;
  ProgenySampler progeny_;
  TreeReplicate result_;
};

inline TreeReplicate simulate_tree_replicate(const SimConfig& config, std::uint32_t replicate) {
  return TreeWalker(config, replicate).run();
}

/// max of r^d independent single-vertex draws: K^boundary_d (size) and
/// R^boundary_d (length) under the product law (1 - Psi_n)^(r^d).
inline TreeReplicate simulate_boundary_replicate(const SimConfig& config, std::uint32_t replicate) {
  const ProgenySampler progeny(config.params, config.cluster_size_cap, config.height_cap);
  const std::uint64_t first = config.d == 0 ? 0 : tree_size(config.params.r(), config.d - 1);
  const std::uint64_t count = boundary_size(config.params.r(), config.d);
  TreeReplicate result;
  for (std::uint64_t j = 0; j < count; ++j) {
    Substream stream(config.seed, replicate, first + j, StreamDomain::Continuation);
    const auto draw = progeny(stream);
    result.max_boundary_cluster = std::max(result.max_boundary_cluster, draw.size);
    result.max_boundary_run = std::max(result.max_boundary_run, draw.length);
    result.work += draw.work;
    if (draw.censored) {
      result.cluster_censored = true;
      result.run_censored = true;
    }
  }
  if (config.cluster_size_cap != 0 && result.max_boundary_cluster >= config.cluster_size_cap) {
    result.cluster_censored = true;
  }
  if (config.height_cap != 0 && result.max_boundary_run >= config.height_cap) result.run_censored = true;
  result.max_cluster = result.max_boundary_cluster;
  result.max_run = result.max_boundary_run;
  return result;
}

/// Calls fn(i) for i in [0, count) on `threads` workers. fn must only write
/// to the slot it owns.
template <class Fn>
void parallel_for_replicates(std::uint64_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, count));
  if (threads <= 1) {
    for (std::uint64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::uint64_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
}

/// Every replicate of the plan, in replicate order.
inline std::vector<TreeReplicate> simulate_replicates(const SimConfig& config) {
  validate(config);
  std::vector<TreeReplicate> replicates(config.replicates);
  const bool boundary_only =
      config.statistic == Statistic::BoundaryK || config.statistic == Statistic::BoundaryR;
  parallel_for_replicates(config.replicates, config.threads, [&](std::uint64_t i) {
    const auto index = static_cast<std::uint32_t>(i);
    replicates[i] = boundary_only ? simulate_boundary_replicate(config, index)
                                  : simulate_tree_replicate(config, index);
  });
  return replicates;
}

// ============================================================================
// OUTCOMES
// ============================================================================

struct ReplicateRecord {
  std::uint64_t replicate = 0;
  std::uint64_t value = 0;
  std::uint64_t boundary_value = 0;  // same-realization horizon maximum
  bool censored = false;
  std::uint64_t work = 0;
};

struct SimOutcome {
  SimConfig config;
  Statistic statistic = Statistic::ClusterK;  // never Both
  std::vector<ReplicateRecord> records;
  std::map<std::uint64_t, std::uint64_t> histogram;  // value -> replicate count
  std::uint64_t censored_count = 0;

  /// Values in replicate order.
  std::vector<std::uint64_t> values() const {
    std::vector<std::uint64_t> out;
    out.reserve(records.size());
    for (const auto& record : records) out.push_back(record.value);
    return out;
  }

  /// Fraction of replicates whose value is <= n. Exact for n below every
  /// cap, since censored values are at least the cap.
  double empirical_cdf(std::uint64_t n) const {
    std::uint64_t below = 0;
    for (const auto& [value, count] : histogram) {
      if (value > n) break;
      below += count;
    }
    return static_cast<double>(below) / static_cast<double>(records.size());
  }

  /// Empirical pmf/tail over 0 ... support_max.
  DistTable to_dist_table(std::int64_t support_max) const {
    DistTable table;
    table.kind = (statistic == Statistic::ClusterK || statistic == Statistic::BoundaryK) ? DistKind::ClusterSize
                                                                                          : DistKind::RunLength;
    table.support_max = support_max;
    table.source = DistSource::Empirical;
    table.sample_count = records.size();
    const double total = static_cast<double>(records.size());
    std::uint64_t at_or_below = 0;
    for (std::int64_t n = 0; n <= support_max; ++n) {
      const auto it = histogram.find(static_cast<std::uint64_t>(n));
      const std::uint64_t count = it == histogram.end() ? 0 : it->second;
      at_or_below += count;
      table.pmf.push_back(LogProb::from_value(static_cast<double>(count) / total));
      table.tail.push_back(LogProb::from_value(static_cast<double>(records.size() - at_or_below) / total));
    }
    return table;
  }
};

inline SimOutcome make_outcome(const SimConfig& config, Statistic statistic,
                               const std::vector<TreeReplicate>& replicates) {
  SimOutcome outcome;
  outcome.config = config;
  outcome.statistic = statistic;
  const bool cluster = statistic == Statistic::ClusterK || statistic == Statistic::BoundaryK;
  outcome.records.reserve(replicates.size());
  for (std::size_t i = 0; i < replicates.size(); ++i) {
    const auto& rep = replicates[i];
    ReplicateRecord record;
    record.replicate = i;
    record.value = cluster ? rep.max_cluster : rep.max_run;
    record.boundary_value = cluster ? rep.max_boundary_cluster : rep.max_boundary_run;
    record.censored = cluster ? rep.cluster_censored : rep.run_censored;
    record.work = rep.work;
    ++outcome.histogram[record.value];
    if (record.censored) ++outcome.censored_count;
    outcome.records.push_back(record);
  }
  return outcome;
}

inline SimOutcome simulate_K_d(SimConfig config) {
  config.statistic = Statistic::ClusterK;
  return make_outcome(config, Statistic::ClusterK, simulate_replicates(config));
}

inline SimOutcome simulate_R_d(SimConfig config) {
  config.statistic = Statistic::RunR;
  return make_outcome(config, Statistic::RunR, simulate_replicates(config));
}

/// `config.statistic` selects BoundaryK or BoundaryR.
inline SimOutcome simulate_boundary_max(SimConfig config) {
  if (config.statistic != Statistic::BoundaryK && config.statistic != Statistic::BoundaryR) {
    throw precondition_error("simulate_boundary_max requires statistic BoundaryK or BoundaryR");
  }
  return make_outcome(config, config.statistic, simulate_replicates(config));
}

/// Runs the plan once; Both yields the K_d and R_d outcomes of the same
/// realizations.
inline std::vector<SimOutcome> simulate(const SimConfig& config) {
  const auto replicates = simulate_replicates(config);
  if (config.statistic == Statistic::Both) {
    return {make_outcome(config, Statistic::ClusterK, replicates), make_outcome(config, Statistic::RunR, replicates)};
  }
  return {make_outcome(config, config.statistic, replicates)};
}

// ============================================================================
// BRUTE-FORCE ORACLE
// ============================================================================

/// psi_0 ... psi_n_max by explicit enumeration of every rooted subtree A with
/// at most n_max nodes, each weighted p^|A| (1-p)^(number of children of A
/// outside A). Independent of the Catalan formula.
inline DistTable enumerate_small_pmf(const ModelParams& params, int n_max) {
  const int r = params.r();
  if (r != 2 && r != 3) throw precondition_error("enumerate_small_pmf supports r in {2, 3}");
  if (n_max < 0 || n_max > 8) throw precondition_error("enumerate_small_pmf requires 0 <= n_max <= 8");
  const double p = params.p();
  std::vector<double> mass(static_cast<std::size_t>(n_max) + 1, 0.0);
  mass[0] = 1.0 - p;

  // A subtree is grown by choosing, for each node in a fixed order, which of
  // its r children join. The frontier lists nodes whose children are still
  // undecided; `boundary` counts children decided closed.
  std::function<void(int, int, int)> grow = [&](int size, int undecided, int boundary) {
    if (undecided == 0) {
      mass[static_cast<std::size_t>(size)] += std::pow(p, size) * std::pow(1.0 - p, boundary);
      return;
    }
    for (int mask = 0; mask < (1 << r); ++mask) {
      const int added = std::popcount(static_cast<unsigned>(mask));
      if (size + added > n_max) continue;
      grow(size + added, undecided - 1 + added, boundary + (r - added));
    }
  };
  if (n_max >= 1) grow(1, 1, 0);

  DistTable table;
  table.kind = DistKind::ClusterSize;
  table.support_max = n_max;
  double above = 1.0;
  for (int n = 0; n <= n_max; ++n) {
    above -= mass[static_cast<std::size_t>(n)];
    table.pmf.push_back(LogProb::from_value(mass[static_cast<std::size_t>(n)]));
    table.tail.push_back(LogProb::from_value(std::max(0.0, above)));
  }
  return table;
}

/// Number of rooted subtrees of each size 0 ... n_max found by the same
/// enumeration (index 0 is the empty convention).
inline std::vector<std::uint64_t> enumerate_subtree_counts(int r, int n_max) {
  if (r < 2 || r > 3 || n_max < 0 || n_max > 8) throw precondition_error("enumeration guard violated");
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(n_max) + 1, 0);
  counts[0] = 1;
  std::function<void(int, int)> grow = [&](int size, int undecided) {
    if (undecided == 0) {
      ++counts[static_cast<std::size_t>(size)];
      return;
    }
    for (int mask = 0; mask < (1 << r); ++mask) {
      const int added = std::popcount(static_cast<unsigned>(mask));
      if (size + added > n_max) continue;
      grow(size + added, undecided - 1 + added);
    }
  };
  if (n_max >= 1) grow(1, 1);
  return counts;
}

}  // namespace treeperc
