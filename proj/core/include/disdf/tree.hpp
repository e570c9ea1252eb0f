#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "disdf/matrix.hpp"
#include "disdf/random.hpp"

namespace disdf {

enum class TreeKind : std::uint8_t {
  // Best Gini split over ceil(sqrt(m)) randomly chosen features.
  kRandomSplit = 0,
  // Feature and threshold both drawn uniformly at random.
  kCompletelyRandom = 1,
};

struct TreeParams {
  // A node with fewer than 2 * min_leaf samples is not split; random-split
  // search additionally only accepts splits leaving >= min_leaf per side.
  std::size_t min_leaf = 1;
  // 0 means unlimited.
  std::size_t max_depth = 0;
};

// Training rows drawn from a feature matrix. `rows` may repeat indices
// (bootstrap samples).
struct SampleView {
  const Matrix* features = nullptr;
  std::span<const int> labels;
  std::span<const std::size_t> rows;
  int num_classes = 0;
};

struct TreeNode {
  // Internal nodes: feature >= 0, x[feature] <= threshold goes left.
  // Leaves: feature == -1 and `leaf` indexes the leaf distribution table.
  std::int32_t feature = -1;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t leaf = -1;
  double threshold = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class TreeModel {
 public:
  TreeModel() = default;
  // Validates the node graph and leaf distributions; throws Error.
  TreeModel(TreeKind kind, std::size_t input_dim, int num_classes,
            std::vector<TreeNode> nodes, std::vector<double> leaf_dists);

  TreeKind kind() const noexcept { return kind_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  int num_classes() const noexcept { return num_classes_; }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  // num_leaves() x num_classes() row-major.
  const std::vector<double>& leaf_dists() const noexcept { return leaf_dists_; }
  std::size_t num_leaves() const noexcept {
    return num_classes_ == 0 ? 0 : leaf_dists_.size() / num_classes_;
  }
  std::size_t depth() const;

  // Distribution of the leaf reached by x. The view points into the model.
  std::span<const double> predict_dist(std::span<const double> x) const;

  friend bool operator==(const TreeModel&, const TreeModel&) = default;

 private:
  TreeKind kind_ = TreeKind::kRandomSplit;
  std::size_t input_dim_ = 0;
  int num_classes_ = 0;
  std::vector<TreeNode> nodes_;
  std::vector<double> leaf_dists_;
};

TreeModel train_tree(const SampleView& samples, TreeKind kind,
                     const TreeParams& params, Rng& rng);

// Same as TreeModel::predict_dist, copied out.
std::vector<double> tree_predict_dist(const TreeModel& tree,
                                      std::span<const double> x);

}  // namespace disdf
