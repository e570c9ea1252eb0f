#include "disdf/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "disdf/errors.hpp"

namespace disdf {
namespace {

struct PendingNode {
  std::size_t begin;
  std::size_t end;
  std::size_t depth;
  std::int32_t id;
};

struct Split {
  std::int32_t feature = -1;
  double threshold = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const SampleView& samples, TreeKind kind,
              const TreeParams& params, Rng& rng)
      : x_(*samples.features),
        labels_(samples.labels),
        num_classes_(samples.num_classes),
        kind_(kind),
        params_(params),
        rng_(rng),
        rows_(samples.rows.begin(), samples.rows.end()),
        counts_(static_cast<std::size_t>(num_classes_)),
        features_(x_.cols()) {
    std::iota(features_.begin(), features_.end(), 0);
  }

  TreeModel build() {
    std::vector<PendingNode> stack;
    nodes_.emplace_back();
    stack.push_back({0, rows_.size(), 0, 0});
    while (!stack.empty()) {
      const PendingNode node = stack.back();
      stack.pop_back();
      count_classes(node.begin, node.end);
      const std::size_t size = node.end - node.begin;
      const bool pure =
          std::count_if(counts_.begin(), counts_.end(),
                        [](std::size_t c) { return c > 0; }) <= 1;
      const bool depth_cap = params_.max_depth != 0 && node.depth >= params_.max_depth;
      Split split;
      if (!pure && !depth_cap && size >= 2 * std::max<std::size_t>(params_.min_leaf, 1)) {
        split = kind_ == TreeKind::kRandomSplit ? best_gini_split(node)
                                                : random_split(node);
      }
      if (split.feature < 0) {
        make_leaf(node.id, size);
        continue;
      }
      const auto mid_it = std::partition(
          rows_.begin() + node.begin, rows_.begin() + node.end,
          [&](std::size_t r) { return x_(r, split.feature) <= split.threshold; });
      const auto mid = static_cast<std::size_t>(mid_it - rows_.begin());
      const auto left = static_cast<std::int32_t>(nodes_.size());
      nodes_.emplace_back();
      nodes_.emplace_back();
      TreeNode& n = nodes_[node.id];
      n.feature = split.feature;
      n.threshold = split.threshold;
      n.left = left;
      n.right = left + 1;
      stack.push_back({mid, node.end, node.depth + 1, left + 1});
      stack.push_back({node.begin, mid, node.depth + 1, left});
    }
    return TreeModel(kind_, x_.cols(), num_classes_, std::move(nodes_),
                     std::move(leaf_dists_));
  }

 private:
  void count_classes(std::size_t begin, std::size_t end) {
    std::fill(counts_.begin(), counts_.end(), 0);
    for (std::size_t k = begin; k < end; ++k) ++counts_[labels_[rows_[k]]];
  }

  void make_leaf(std::int32_t id, std::size_t size) {
    nodes_[id].leaf = static_cast<std::int32_t>(leaf_dists_.size() / num_classes_);
    for (std::size_t c : counts_) {
      leaf_dists_.push_back(static_cast<double>(c) / static_cast<double>(size));
    }
  }

  // Draws features in random order (incremental Fisher-Yates) and returns
  // them through `visit` until it asks to stop or features run out.
  template <typename Visit>
  void for_random_features(Visit&& visit) {
    const std::size_t m = features_.size();
    for (std::size_t k = 0; k < m; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, m - 1);
      std::swap(features_[k], features_[pick(rng_)]);
      if (!visit(features_[k])) return;
    }
  }

  Split best_gini_split(const PendingNode& node) {
    const std::size_t m = x_.cols();
    const auto wanted = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(m))));
    const std::size_t size = node.end - node.begin;
    const std::size_t min_leaf = std::max<std::size_t>(params_.min_leaf, 1);

    Split best;
    double best_score = std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;
    std::vector<std::size_t> left(counts_.size());
    for_random_features([&](std::size_t f) {
      sorted_.clear();
      for (std::size_t k = node.begin; k < node.end; ++k) {
        const std::size_t r = rows_[k];
        sorted_.emplace_back(x_(r, f), labels_[r]);
      }
      std::sort(sorted_.begin(), sorted_.end());
      if (sorted_.front().first == sorted_.back().first) return true;  // constant
      ++evaluated;

      // Weighted Gini: sum over sides of n_side - sum_c n_c^2 / n_side.
      std::fill(left.begin(), left.end(), 0);
      double left_sq = 0.0;
      double right_sq = 0.0;
      for (std::size_t c : counts_) right_sq += static_cast<double>(c) * c;
      for (std::size_t k = 0; k + 1 < size; ++k) {
        const auto y = static_cast<std::size_t>(sorted_[k].second);
        const double l = static_cast<double>(left[y]);
        const double r = static_cast<double>(counts_[y] - left[y]);
        left_sq += 2.0 * l + 1.0;
        right_sq -= 2.0 * r - 1.0;
        ++left[y];
        const double lo = sorted_[k].first;
        const double hi = sorted_[k + 1].first;
        if (lo == hi) continue;
        const std::size_t nl = k + 1;
        const std::size_t nr = size - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double score = (static_cast<double>(nl) - left_sq / nl) +
                             (static_cast<double>(nr) - right_sq / nr);
        if (score < best_score) {
          best_score = score;
          best.feature = static_cast<std::int32_t>(f);
          double mid = lo + (hi - lo) / 2.0;
          if (!(mid < hi)) mid = lo;
          best.threshold = mid;
        }
      }
      return evaluated < wanted;
    });
    return best;
  }

  Split random_split(const PendingNode& node) {
    Split split;
    for_random_features([&](std::size_t f) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::size_t k = node.begin; k < node.end; ++k) {
        const double v = x_(rows_[k], f);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (lo == hi) return true;
      double t = std::uniform_real_distribution<double>(lo, hi)(rng_);
      if (!(t < hi)) t = lo;
      split.feature = static_cast<std::int32_t>(f);
      split.threshold = t;
      return false;
    });
    return split;
  }

  const Matrix& x_;
  std::span<const int> labels_;
  int num_classes_;
  TreeKind kind_;
  TreeParams params_;
  Rng& rng_;

  std::vector<std::size_t> rows_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> features_;
  std::vector<std::pair<double, int>> sorted_;
  std::vector<TreeNode> nodes_;
  std::vector<double> leaf_dists_;
};

}  // namespace

TreeModel::TreeModel(TreeKind kind, std::size_t input_dim, int num_classes,
                     std::vector<TreeNode> nodes, std::vector<double> leaf_dists)
    : kind_(kind),
      input_dim_(input_dim),
      num_classes_(num_classes),
      nodes_(std::move(nodes)),
      leaf_dists_(std::move(leaf_dists)) {
  if (num_classes_ < 1 || nodes_.empty()) {
    fail(ErrorCode::kFormat, "tree: empty node table or no classes");
  }
  const auto C = static_cast<std::size_t>(num_classes_);
  if (leaf_dists_.size() % C != 0) {
    fail(ErrorCode::kFormat, "tree: leaf table size not a multiple of C");
  }
  const std::size_t leaves = leaf_dists_.size() / C;
  for (std::size_t l = 0; l < leaves; ++l) {
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double p = leaf_dists_[l * C + c];
      if (!(p >= 0.0)) fail(ErrorCode::kFormat, "tree: negative leaf probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      fail(ErrorCode::kFormat, "tree: leaf distribution does not sum to 1");
    }
  }
  // Proper binary tree: every non-root node has exactly one parent, and
  // children are reachable only through their parent (no cycles).
  const auto n = static_cast<std::int32_t>(nodes_.size());
  std::vector<int> parents(nodes_.size(), 0);
  std::vector<int> leaf_refs(leaves, 0);
  for (const TreeNode& node : nodes_) {
    if (node.is_leaf()) {
      if (node.leaf < 0 || static_cast<std::size_t>(node.leaf) >= leaves) {
        fail(ErrorCode::kFormat, "tree: leaf index out of range");
      }
      ++leaf_refs[node.leaf];
      continue;
    }
    if (static_cast<std::size_t>(node.feature) >= input_dim_) {
      fail(ErrorCode::kFormat, "tree: split feature out of range");
    }
    for (std::int32_t child : {node.left, node.right}) {
      if (child <= 0 || child >= n) fail(ErrorCode::kFormat, "tree: bad child id");
      ++parents[child];
    }
  }
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (parents[i] != 1) fail(ErrorCode::kFormat, "tree: node without unique parent");
  }
  // n-1 edges each pointing at a distinct non-root node: connected iff
  // acyclic; check reachability from the root.
  std::vector<std::int32_t> stack{0};
  std::size_t seen = 0;
  while (!stack.empty()) {
    const TreeNode& node = nodes_[stack.back()];
    stack.pop_back();
    if (++seen > nodes_.size()) fail(ErrorCode::kFormat, "tree: cycle detected");
    if (!node.is_leaf()) {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  if (seen != nodes_.size()) fail(ErrorCode::kFormat, "tree: unreachable nodes");
  if (std::any_of(leaf_refs.begin(), leaf_refs.end(), [](int r) { return r != 1; })) {
    fail(ErrorCode::kFormat, "tree: leaf distributions not referenced exactly once");
  }
}

std::size_t TreeModel::depth() const {
  std::size_t best = 0;
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [id, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    const TreeNode& node = nodes_[id];
    if (!node.is_leaf()) {
      stack.emplace_back(node.left, d + 1);
      stack.emplace_back(node.right, d + 1);
    }
  }
  return best;
}

std::span<const double> TreeModel::predict_dist(std::span<const double> x) const {
  if (x.size() != input_dim_) {
    fail(ErrorCode::kDimensionMismatch,
         "tree expects " + std::to_string(input_dim_) + " features, got " +
             std::to_string(x.size()));
  }
  const TreeNode* node = &nodes_[0];
  while (!node->is_leaf()) {
    node = &nodes_[x[node->feature] <= node->threshold ? node->left : node->right];
  }
  const auto C = static_cast<std::size_t>(num_classes_);
  return {leaf_dists_.data() + static_cast<std::size_t>(node->leaf) * C, C};
}

TreeModel train_tree(const SampleView& samples, TreeKind kind,
                     const TreeParams& params, Rng& rng) {
  if (samples.features == nullptr || samples.rows.empty()) {
    fail(ErrorCode::kInvalidArgument, "train_tree: empty sample view");
  }
  if (samples.num_classes < 1) {
    fail(ErrorCode::kInvalidArgument, "train_tree: num_classes must be >= 1");
  }
  if (samples.features->cols() == 0) {
    fail(ErrorCode::kInvalidArgument, "train_tree: zero-dimensional features");
  }
  return TreeBuilder(samples, kind, params, rng).build();
}

std::vector<double> tree_predict_dist(const TreeModel& tree,
                                      std::span<const double> x) {
  const auto d = tree.predict_dist(x);
  return {d.begin(), d.end()};
}

}  // namespace disdf
