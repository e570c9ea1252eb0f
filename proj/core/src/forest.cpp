#include "disdf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "disdf/errors.hpp"
#include "disdf/random.hpp"

namespace disdf {

bool on_simplex(std::span<const double> w, double tol) {
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= -tol)) return false;
    sum += v;
  }
  return !w.empty() && std::abs(sum - 1.0) <= tol;
}

WeightVector::WeightVector(std::vector<double> values, double tolerance)
    : values_(std::move(values)) {
  if (!on_simplex(values_, tolerance)) {
    fail(ErrorCode::kInvalidArgument, "weight vector is not on the unit simplex");
  }
}

WeightVector WeightVector::uniform(std::size_t size) {
  if (size == 0) fail(ErrorCode::kInvalidArgument, "empty weight vector");
  return WeightVector(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

WeightVector WeightVector::vertex(std::size_t size, std::size_t index) {
  if (index >= size) fail(ErrorCode::kInvalidArgument, "vertex index out of range");
  std::vector<double> v(size, 0.0);
  v[index] = 1.0;
  return WeightVector(std::move(v));
}

bool WeightVector::is_uniform() const {
  const double u = 1.0 / static_cast<double>(values_.size());
  return std::all_of(values_.begin(), values_.end(),
                     [u](double v) { return v == u; });
}

ForestModel::ForestModel(TreeKind kind, std::vector<TreeModel> trees,
                         WeightVector weights)
    : kind_(kind), trees_(std::move(trees)), weights_(std::move(weights)) {
  if (trees_.empty()) fail(ErrorCode::kInvalidArgument, "forest without trees");
  input_dim_ = trees_.front().input_dim();
  num_classes_ = trees_.front().num_classes();
  for (const TreeModel& t : trees_) {
    if (t.input_dim() != input_dim_ || t.num_classes() != num_classes_ ||
        t.kind() != kind_) {
      fail(ErrorCode::kFormat, "forest trees disagree on kind/dimension/classes");
    }
  }
  if (weights_.size() != trees_.size()) {
    fail(ErrorCode::kDimensionMismatch,
         "forest has " + std::to_string(trees_.size()) + " trees but " +
             std::to_string(weights_.size()) + " weights");
  }
}

void ForestModel::set_weights(WeightVector weights) {
  if (weights.size() != trees_.size()) {
    fail(ErrorCode::kDimensionMismatch,
         "forest has " + std::to_string(trees_.size()) + " trees but " +
             std::to_string(weights.size()) + " weights");
  }
  weights_ = std::move(weights);
}

ForestModel train_forest(const SampleView& samples, TreeKind kind,
                         std::size_t num_trees, const TreeParams& params,
                         std::uint64_t seed) {
  if (num_trees < 1) fail(ErrorCode::kInvalidArgument, "forest needs T >= 1");
  if (samples.rows.empty()) fail(ErrorCode::kInvalidArgument, "train_forest: empty dataset");

  std::vector<TreeModel> trees;
  trees.reserve(num_trees);
  std::vector<std::size_t> bootstrap(samples.rows.size());
  for (std::size_t t = 0; t < num_trees; ++t) {
    Rng rng(derive_seed(seed, {t}));
    SampleView view = samples;
    if (kind == TreeKind::kRandomSplit) {
      std::uniform_int_distribution<std::size_t> pick(0, samples.rows.size() - 1);
      for (auto& r : bootstrap) r = samples.rows[pick(rng)];
      view.rows = bootstrap;
    }
    trees.push_back(train_tree(view, kind, params, rng));
  }
  return ForestModel(kind, std::move(trees), WeightVector::uniform(num_trees));
}

void forest_tree_dists_into(const ForestModel& forest, std::span<const double> x,
                            std::span<double> out) {
  const auto C = static_cast<std::size_t>(forest.num_classes());
  if (out.size() != forest.num_trees() * C) {
    fail(ErrorCode::kDimensionMismatch, "tree distribution buffer has wrong size");
  }
  for (std::size_t t = 0; t < forest.num_trees(); ++t) {
    const auto d = forest.trees()[t].predict_dist(x);
    std::copy(d.begin(), d.end(), out.begin() + t * C);
  }
}

Matrix forest_tree_dists(const ForestModel& forest, std::span<const double> x) {
  Matrix out(forest.num_trees(), static_cast<std::size_t>(forest.num_classes()));
  forest_tree_dists_into(forest, x, out.data());
  return out;
}

std::vector<double> forest_class_vector(const ForestModel& forest,
                                        std::span<const double> x,
                                        std::span<const double> weights) {
  if (weights.size() != forest.num_trees()) {
    fail(ErrorCode::kDimensionMismatch,
         "weight length " + std::to_string(weights.size()) + " != tree count " +
             std::to_string(forest.num_trees()));
  }
  if (!on_simplex(weights, 1e-6)) {
    fail(ErrorCode::kInvalidArgument, "weights are off the unit simplex");
  }
  if (x.size() != forest.input_dim()) {
    fail(ErrorCode::kDimensionMismatch,
         "forest expects " + std::to_string(forest.input_dim()) +
             " features, got " + std::to_string(x.size()));
  }
  const auto C = static_cast<std::size_t>(forest.num_classes());
  std::vector<double> v(C, 0.0);
  for (std::size_t t = 0; t < forest.num_trees(); ++t) {
    const double w = weights[t];
    if (w == 0.0) continue;
    const auto d = forest.trees()[t].predict_dist(x);
    for (std::size_t c = 0; c < C; ++c) v[c] += d[c] * w;
  }
  return v;
}

std::vector<double> forest_class_vector(const ForestModel& forest,
                                        std::span<const double> x) {
  return forest_class_vector(forest, x, forest.weights().values());
}

}  // namespace disdf
