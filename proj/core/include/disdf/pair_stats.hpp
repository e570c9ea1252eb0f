#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "disdf/matrix.hpp"
#include "disdf/random.hpp"

namespace disdf {

// Per-sample, per-tree class distributions: n x T x C, contiguous in C.
class TreeDistTensor {
 public:
  TreeDistTensor() = default;
  TreeDistTensor(std::size_t samples, std::size_t trees, std::size_t classes)
      : samples_(samples), trees_(trees), classes_(classes),
        data_(samples * trees * classes, 0.0) {}

  std::size_t samples() const noexcept { return samples_; }
  std::size_t trees() const noexcept { return trees_; }
  std::size_t classes() const noexcept { return classes_; }

  std::span<const double> at(std::size_t i, std::size_t t) const {
    return {data_.data() + (i * trees_ + t) * classes_, classes_};
  }
  std::span<double> at(std::size_t i, std::size_t t) {
    return {data_.data() + (i * trees_ + t) * classes_, classes_};
  }
  // All T x C values of sample i.
  std::span<const double> sample(std::size_t i) const {
    return {data_.data() + i * trees_ * classes_, trees_ * classes_};
  }
  std::span<double> sample(std::size_t i) {
    return {data_.data() + i * trees_ * classes_, trees_ * classes_};
  }

 private:
  std::size_t samples_ = 0;
  std::size_t trees_ = 0;
  std::size_t classes_ = 0;
  std::vector<double> data_;
};

struct SamplePair {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  // z_ij: true when the labels differ.
  bool different_class = false;
};

// Pairwise quantities for one forest:
//   sq_diff(p, t)  = sum_c (p_ic^t - p_jc^t)^2
//   abs_diff(p, t) = sum_c |p_ic^t - p_jc^t|
//   pi[t]          = sum over same-class pairs of sq_diff(p, t)
struct PairStats {
  std::vector<SamplePair> pairs;
  Matrix sq_diff;
  Matrix abs_diff;
  std::vector<double> pi;

  std::size_t num_pairs() const noexcept { return pairs.size(); }
  std::size_t num_trees() const noexcept { return pi.size(); }
};

// Builds PairStats over all i < j pairs, or over a uniform random subsample
// of `pair_budget` pairs that keeps at least one pair of each kind.
// Throws Error(kDegeneratePairSet) when all pairs are same-class or all are
// different-class.
PairStats compute_pair_stats(const TreeDistTensor& dists,
                             std::span<const int> labels,
                             std::optional<std::size_t> pair_budget, Rng& rng);

// Stats for one pair, written into the two length-T outputs.
void pair_differences(const TreeDistTensor& dists, std::size_t i, std::size_t j,
                      std::span<double> sq_diff, std::span<double> abs_diff);

}  // namespace disdf
