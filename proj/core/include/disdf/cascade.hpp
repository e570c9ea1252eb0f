#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "disdf/config.hpp"
#include "disdf/dataset.hpp"
#include "disdf/forest.hpp"
#include "disdf/pair_stats.hpp"

namespace disdf {

// One cascade level: M forests whose class vectors are appended, in forest
// order, to the level's input vector.
struct LevelModel {
  std::vector<ForestModel> forests;
  std::size_t input_dim = 0;

  int num_classes() const { return forests.empty() ? 0 : forests.front().num_classes(); }
  std::size_t output_dim() const {
    return input_dim + forests.size() * static_cast<std::size_t>(num_classes());
  }

  friend bool operator==(const LevelModel&, const LevelModel&) = default;
};

class CascadeModel {
 public:
  CascadeModel() = default;
  // Checks the dimension recurrence: level q consumes m + sum_{q'<q} M_q' C.
  CascadeModel(std::vector<LevelModel> levels, std::size_t base_dim,
               int num_classes, CascadeMode mode,
               std::vector<std::string> class_names = {});

  const std::vector<LevelModel>& levels() const noexcept { return levels_; }
  std::size_t base_dim() const noexcept { return base_dim_; }
  int num_classes() const noexcept { return num_classes_; }
  CascadeMode mode() const noexcept { return mode_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }

  // Sum of the final level's class vectors.
  std::vector<double> class_scores(std::span<const double> x) const;
  int predict(std::span<const double> x) const;

  friend bool operator==(const CascadeModel&, const CascadeModel&) = default;

 private:
  std::vector<LevelModel> levels_;
  std::size_t base_dim_ = 0;
  int num_classes_ = 0;
  CascadeMode mode_ = CascadeMode::kDisDF;
  std::vector<std::string> class_names_;
};

// Forest k of a level: even k random-split, odd k completely random, so the
// default of four forests gives two of each.
TreeKind forest_kind_for(std::size_t k);

// (x_prev, v^(1), ..., v^(M)) using each forest's trained weights.
std::vector<double> augment(const LevelModel& level, std::span<const double> x_prev);

// Argmax of the summed final-level class vectors; lowest class on ties.
int predict(const CascadeModel& model, std::span<const double> x);

// Index of the best score, where a later level only counts as better if it
// improves on the best by more than 1e-4.
std::size_t best_level_index(std::span<const double> scores);

// True once the best score has not improved (by > 1e-4) for `patience`
// consecutive levels.
bool should_stop(std::span<const double> scores, std::size_t patience);

struct ForestFit {
  TreeKind kind = TreeKind::kRandomSplit;
  // Out-of-fold per-tree distributions of the training rows.
  TreeDistTensor oof;
  // Weights applied to the out-of-fold distributions (uniform in baseline).
  WeightVector weights;
  // Objective on the training pair stats (disdf mode only, else 0).
  double objective_uniform = 0.0;
  double objective_trained = 0.0;
  double fw_gap = 0.0;
  std::size_t num_pairs = 0;
};

struct LevelFit {
  LevelModel level;
  std::vector<ForestFit> forests;
  // n x (M C) out-of-fold weighted class vectors, the training-time
  // augmentation for the next level.
  Matrix oof_class_vectors;
  // Out-of-fold accuracy of the summed class vectors.
  double score = 0.0;
};

// Trains level `level_index` on the current (already augmented) features.
LevelFit fit_level(const Matrix& features, std::span<const int> labels,
                   int num_classes, const TrainConfig& cfg,
                   std::size_t level_index);

struct TrainReport {
  std::vector<double> level_scores;
  std::size_t levels_kept = 0;
  // Per trained level, per forest: objective at uniform and trained weights.
  std::vector<std::vector<std::pair<double, double>>> objectives;
};

CascadeModel train_cascade(const Dataset& train, const TrainConfig& cfg,
                           TrainReport* report = nullptr);

}  // namespace disdf
