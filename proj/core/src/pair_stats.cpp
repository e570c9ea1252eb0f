#include "disdf/pair_stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "disdf/errors.hpp"

namespace disdf {
namespace {

std::vector<SamplePair> all_pairs(std::span<const int> labels) {
  const std::size_t n = labels.size();
  std::vector<SamplePair> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                       labels[i] != labels[j]});
    }
  }
  return pairs;
}

// Uniform sample of `budget` distinct unordered pairs. If the sample happens
// to contain one kind only, the last entry is swapped for a random pair of
// the missing kind (one is known to exist).
std::vector<SamplePair> sample_pairs(std::span<const int> labels,
                                     std::size_t budget, Rng& rng) {
  const std::size_t n = labels.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::unordered_set<std::uint64_t> seen;
  std::vector<SamplePair> pairs;
  pairs.reserve(budget);
  while (pairs.size() < budget) {
    std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (!seen.insert(static_cast<std::uint64_t>(i) * n + j).second) continue;
    pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                     labels[i] != labels[j]});
  }
  const bool any_same = std::any_of(pairs.begin(), pairs.end(),
                                    [](const SamplePair& p) { return !p.different_class; });
  const bool any_diff = std::any_of(pairs.begin(), pairs.end(),
                                    [](const SamplePair& p) { return p.different_class; });
  if (any_same && any_diff) return pairs;

  const bool want_diff = !any_diff;
  std::vector<SamplePair> candidates;
  for (const SamplePair& p : all_pairs(labels)) {
    if (p.different_class == want_diff) candidates.push_back(p);
  }
  std::uniform_int_distribution<std::size_t> pick_c(0, candidates.size() - 1);
  pairs.back() = candidates[pick_c(rng)];
  return pairs;
}

}  // namespace

void pair_differences(const TreeDistTensor& dists, std::size_t i, std::size_t j,
                      std::span<double> sq_diff, std::span<double> abs_diff) {
  const std::size_t T = dists.trees();
  const std::size_t C = dists.classes();
  const auto a = dists.sample(i);
  const auto b = dists.sample(j);
  for (std::size_t t = 0; t < T; ++t) {
    double sq = 0.0;
    double ab = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double d = a[t * C + c] - b[t * C + c];
      sq += d * d;
      ab += std::abs(d);
    }
    sq_diff[t] = sq;
    abs_diff[t] = ab;
  }
}

PairStats compute_pair_stats(const TreeDistTensor& dists,
                             std::span<const int> labels,
                             std::optional<std::size_t> pair_budget, Rng& rng) {
  const std::size_t n = dists.samples();
  if (labels.size() != n) {
    fail(ErrorCode::kDimensionMismatch,
         "pair stats: " + std::to_string(n) + " samples but " +
             std::to_string(labels.size()) + " labels");
  }
  if (n < 2) fail(ErrorCode::kDegeneratePairSet, "degenerate pair set: fewer than 2 samples");

  bool has_same = false;
  bool has_diff = false;
  {
    std::vector<std::size_t> per_class;
    for (int y : labels) {
      if (static_cast<std::size_t>(y) >= per_class.size()) per_class.resize(y + 1, 0);
      ++per_class[y];
    }
    std::size_t present = 0;
    for (std::size_t c : per_class) {
      if (c >= 2) has_same = true;
      if (c > 0) ++present;
    }
    has_diff = present >= 2;
  }
  if (!has_same || !has_diff) {
    fail(ErrorCode::kDegeneratePairSet,
         std::string("degenerate pair set: no ") +
             (has_same ? "different-class" : "same-class") + " pairs");
  }

  const std::size_t total = n * (n - 1) / 2;
  PairStats stats;
  if (pair_budget && *pair_budget < total) {
    if (*pair_budget < 2) {
      fail(ErrorCode::kInvalidArgument, "pair budget must be >= 2");
    }
    stats.pairs = sample_pairs(labels, *pair_budget, rng);
  } else {
    stats.pairs = all_pairs(labels);
  }

  const std::size_t T = dists.trees();
  stats.sq_diff = Matrix(stats.pairs.size(), T);
  stats.abs_diff = Matrix(stats.pairs.size(), T);
  stats.pi.assign(T, 0.0);
  for (std::size_t p = 0; p < stats.pairs.size(); ++p) {
    const SamplePair& pair = stats.pairs[p];
    pair_differences(dists, pair.i, pair.j, stats.sq_diff.row(p), stats.abs_diff.row(p));
    if (!pair.different_class) {
      const auto sq = stats.sq_diff.row(p);
      for (std::size_t t = 0; t < T; ++t) stats.pi[t] += sq[t];
    }
  }
  return stats;
}

}  // namespace disdf
