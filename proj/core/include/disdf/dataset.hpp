#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "disdf/matrix.hpp"

namespace disdf {

// Labeled tabular data. Labels are contiguous class indices 0..C-1;
// class_names[c] is the original spelling of class c.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t feature_dim() const noexcept { return features.cols(); }
};

// Checks the Dataset invariants; throws Error on violation.
void validate(const Dataset& ds);

// Rows of `ds` selected by `rows` (in that order). Keeps num_classes.
Dataset subset(const Dataset& ds, std::span<const std::size_t> rows);

// Label column addressed either by 0-based index or by header name.
using LabelColumn = std::variant<std::size_t, std::string>;

// Parses "3" as an index and anything else as a column name.
LabelColumn parse_label_column(const std::string& text);

// Reads a comma-separated table. A single header row is recognised when the
// first row has a non-numeric cell outside the label column. Labels are
// re-encoded to 0..C-1 in order of first appearance.
Dataset load_csv(const std::filesystem::path& path,
                 const std::optional<LabelColumn>& label_column = {});

// Reads only features. When `drop_column` is set, that column is skipped
// (used to predict on a labeled file). An empty file yields an empty matrix.
Matrix load_feature_csv(const std::filesystem::path& path,
                        const std::optional<LabelColumn>& drop_column = {});

// Disjoint uniformly random train/test subsets of the requested sizes,
// deterministic in `seed`. With `stratified`, class proportions are kept
// as closely as integer quotas allow.
std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t n_train,
                                  std::size_t n_test, std::uint64_t seed,
                                  bool stratified = false);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> holdout;
};

// Random partition of 0..n-1 into `folds` holdout parts whose sizes differ
// by at most one (the first n % folds parts get the extra element).
std::vector<Fold> kfold_indices(std::size_t n, std::size_t folds,
                                std::uint64_t seed);

}  // namespace disdf
