#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "disdf/matrix.hpp"
#include "disdf/tree.hpp"

namespace disdf {

// A point on the unit simplex: non-negative entries summing to 1 (1e-9).
class WeightVector {
 public:
  WeightVector() = default;
  // Throws Error(kInvalidArgument) when `values` is off the simplex.
  explicit WeightVector(std::vector<double> values, double tolerance = 1e-9);

  static WeightVector uniform(std::size_t size);
  static WeightVector vertex(std::size_t size, std::size_t index);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  bool is_uniform() const;

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

 private:
  std::vector<double> values_;
};

// True when every entry is >= -tol and the sum is within tol of 1.
bool on_simplex(std::span<const double> w, double tol);

class ForestModel {
 public:
  ForestModel() = default;
  // Checks that trees agree on kind, input dim and class count.
  ForestModel(TreeKind kind, std::vector<TreeModel> trees, WeightVector weights);

  TreeKind kind() const noexcept { return kind_; }
  std::size_t num_trees() const noexcept { return trees_.size(); }
  std::size_t input_dim() const noexcept { return input_dim_; }
  int num_classes() const noexcept { return num_classes_; }
  const std::vector<TreeModel>& trees() const noexcept { return trees_; }
  const WeightVector& weights() const noexcept { return weights_; }
  void set_weights(WeightVector weights);

  friend bool operator==(const ForestModel&, const ForestModel&) = default;

 private:
  TreeKind kind_ = TreeKind::kRandomSplit;
  std::vector<TreeModel> trees_;
  WeightVector weights_;
  std::size_t input_dim_ = 0;
  int num_classes_ = 0;
};

// T trees; random-split trees each see a bootstrap sample of `samples`,
// completely-random trees see all of it. Tree t uses the stream
// derive_seed(seed, {t}), so the result does not depend on scheduling.
ForestModel train_forest(const SampleView& samples, TreeKind kind,
                         std::size_t num_trees, const TreeParams& params,
                         std::uint64_t seed);

// T x C matrix; row t is tree t's leaf distribution for x.
Matrix forest_tree_dists(const ForestModel& forest, std::span<const double> x);

// Writes the T x C tree distributions into `out` (size T * C).
void forest_tree_dists_into(const ForestModel& forest, std::span<const double> x,
                            std::span<double> out);

// v_c = sum_t p_c^(t) w_t. `weights` must have length T and lie on the
// simplex within 1e-6.
std::vector<double> forest_class_vector(const ForestModel& forest,
                                        std::span<const double> x,
                                        std::span<const double> weights);

// Uses the forest's own trained weights.
std::vector<double> forest_class_vector(const ForestModel& forest,
                                        std::span<const double> x);

}  // namespace disdf
