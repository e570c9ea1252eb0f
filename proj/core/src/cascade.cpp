#include "disdf/cascade.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <string>

#include "disdf/errors.hpp"
#include "disdf/parallel.hpp"
#include "disdf/random.hpp"
#include "disdf/weight_opt.hpp"

namespace disdf {
namespace {

constexpr double kMinImprovement = 1e-4;

int argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < v.size(); ++c) {
    if (v[c] > v[best]) best = c;
  }
  return static_cast<int>(best);
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row(r);
    const auto ra = a.row(r);
    const auto rb = b.row(r);
    std::copy(ra.begin(), ra.end(), dst.begin());
    std::copy(rb.begin(), rb.end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

struct ForestJob {
  ForestModel deployed;
  ForestFit fit;
};

ForestJob fit_forest(const Matrix& features, std::span<const int> labels,
                     int num_classes, const TrainConfig& cfg,
                     std::span<const Fold> folds, std::size_t level_index,
                     std::size_t k) {
  const std::size_t n = features.rows();
  const std::size_t T = cfg.trees_per_forest;
  const auto C = static_cast<std::size_t>(num_classes);
  const std::uint64_t seed = derive_seed(cfg.seed, {level_index, k});

  ForestJob job;
  job.fit.kind = forest_kind_for(k);
  job.fit.oof = TreeDistTensor(n, T, C);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const SampleView view{&features, labels, folds[f].train, num_classes};
    const ForestModel fold_forest =
        train_forest(view, job.fit.kind, T, cfg.tree, derive_seed(seed, {f + 1}));
    for (std::size_t i : folds[f].holdout) {
      forest_tree_dists_into(fold_forest, features.row(i), job.fit.oof.sample(i));
    }
  }

  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  job.deployed = train_forest(SampleView{&features, labels, all, num_classes},
                              job.fit.kind, T, cfg.tree, derive_seed(seed, {0}));

  job.fit.weights = WeightVector::uniform(T);
  if (cfg.mode == CascadeMode::kDisDF) {
    Rng rng(derive_seed(seed, {0xa11}));
    std::optional<std::size_t> budget;
    if (cfg.pair_budget != 0) budget = cfg.pair_budget;
    const PairStats stats = compute_pair_stats(job.fit.oof, labels, budget, rng);
    const Objective objective(stats, {cfg.tau, cfg.lambda});
    FrankWolfeOptions options;
    options.iterations = cfg.fw_iterations;
    const FrankWolfeResult fw = frank_wolfe(objective, options);
    job.fit.objective_uniform = objective.value(job.fit.weights.values());
    // The best iterate includes the uniform start, so the trained weights
    // never score worse than the baseline weighting.
    job.fit.weights = fw.best_weights;
    job.fit.objective_trained = fw.best_objective;
    job.fit.fw_gap = fw.gap;
    job.fit.num_pairs = stats.num_pairs();
  }
  job.deployed.set_weights(job.fit.weights);
  return job;
}

}  // namespace

CascadeModel::CascadeModel(std::vector<LevelModel> levels, std::size_t base_dim,
                           int num_classes, CascadeMode mode,
                           std::vector<std::string> class_names)
    : levels_(std::move(levels)),
      base_dim_(base_dim),
      num_classes_(num_classes),
      mode_(mode),
      class_names_(std::move(class_names)) {
  if (levels_.empty()) fail(ErrorCode::kInvalidArgument, "cascade needs at least one level");
  std::size_t expected = base_dim_;
  for (std::size_t q = 0; q < levels_.size(); ++q) {
    const LevelModel& level = levels_[q];
    if (level.forests.empty()) {
      fail(ErrorCode::kInvalidArgument, "level " + std::to_string(q) + " has no forests");
    }
    if (level.input_dim != expected) {
      fail(ErrorCode::kDimensionMismatch,
           "level " + std::to_string(q) + " consumes " + std::to_string(level.input_dim) +
               " features, expected " + std::to_string(expected));
    }
    for (const ForestModel& f : level.forests) {
      if (f.input_dim() != expected || f.num_classes() != num_classes_) {
        fail(ErrorCode::kDimensionMismatch,
             "forest in level " + std::to_string(q) + " has inconsistent shape");
      }
    }
    expected = level.output_dim();
  }
}

std::vector<double> CascadeModel::class_scores(std::span<const double> x) const {
  if (x.size() != base_dim_) {
    fail(ErrorCode::kDimensionMismatch,
         "model expects " + std::to_string(base_dim_) + " features, got " +
             std::to_string(x.size()));
  }
  std::vector<double> current(x.begin(), x.end());
  for (std::size_t q = 0; q + 1 < levels_.size(); ++q) current = augment(levels_[q], current);
  const auto C = static_cast<std::size_t>(num_classes_);
  std::vector<double> scores(C, 0.0);
  for (const ForestModel& f : levels_.back().forests) {
    const auto v = forest_class_vector(f, current);
    for (std::size_t c = 0; c < C; ++c) scores[c] += v[c];
  }
  return scores;
}

int CascadeModel::predict(std::span<const double> x) const {
  return argmax_lowest(class_scores(x));
}

TreeKind forest_kind_for(std::size_t k) {
  return k % 2 == 0 ? TreeKind::kRandomSplit : TreeKind::kCompletelyRandom;
}

std::vector<double> augment(const LevelModel& level, std::span<const double> x_prev) {
  if (x_prev.size() != level.input_dim) {
    fail(ErrorCode::kDimensionMismatch,
         "level expects " + std::to_string(level.input_dim) + " features, got " +
             std::to_string(x_prev.size()));
  }
  std::vector<double> out(x_prev.begin(), x_prev.end());
  out.reserve(level.output_dim());
  for (const ForestModel& f : level.forests) {
    const auto v = forest_class_vector(f, x_prev);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

int predict(const CascadeModel& model, std::span<const double> x) {
  return model.predict(x);
}

std::size_t best_level_index(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t q = 1; q < scores.size(); ++q) {
    if (scores[q] > scores[best] + kMinImprovement) best = q;
  }
  return best;
}

bool should_stop(std::span<const double> scores, std::size_t patience) {
  if (scores.empty()) return false;
  return scores.size() - 1 - best_level_index(scores) >= patience;
}

LevelFit fit_level(const Matrix& features, std::span<const int> labels,
                   int num_classes, const TrainConfig& cfg,
                   std::size_t level_index) {
  cfg.validate();
  const std::size_t n = features.rows();
  if (labels.size() != n) fail(ErrorCode::kDimensionMismatch, "labels/features row mismatch");
  if (n < cfg.folds) {
    fail(ErrorCode::kInvalidArgument,
         "need at least " + std::to_string(cfg.folds) + " training rows, got " +
             std::to_string(n));
  }
  const std::size_t M = cfg.forests_per_level;
  const auto C = static_cast<std::size_t>(num_classes);
  const auto folds = kfold_indices(n, cfg.folds, derive_seed(cfg.seed, {level_index, 0xf0}));

  std::vector<ForestJob> jobs(M);
  parallel_for(M, cfg.threads, [&](std::size_t k) {
    jobs[k] = fit_forest(features, labels, num_classes, cfg, folds, level_index, k);
  });

  LevelFit out;
  out.level.input_dim = features.cols();
  out.oof_class_vectors = Matrix(n, M * C);
  for (std::size_t k = 0; k < M; ++k) {
    const ForestFit& fit = jobs[k].fit;
    const auto w = fit.weights.values();
    for (std::size_t i = 0; i < n; ++i) {
      auto dst = out.oof_class_vectors.row(i).subspan(k * C, C);
      for (std::size_t t = 0; t < w.size(); ++t) {
        const auto p = fit.oof.at(i, t);
        for (std::size_t c = 0; c < C; ++c) dst[c] += w[t] * p[c];
      }
    }
  }
  std::size_t correct = 0;
  std::vector<double> sums(C);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    const auto row = out.oof_class_vectors.row(i);
    for (std::size_t k = 0; k < M; ++k) {
      for (std::size_t c = 0; c < C; ++c) sums[c] += row[k * C + c];
    }
    if (argmax_lowest(sums) == labels[i]) ++correct;
  }
  out.score = static_cast<double>(correct) / static_cast<double>(n);

  out.level.forests.reserve(M);
  out.forests.reserve(M);
  for (ForestJob& job : jobs) {
    out.level.forests.push_back(std::move(job.deployed));
    out.forests.push_back(std::move(job.fit));
  }
  return out;
}

CascadeModel train_cascade(const Dataset& train, const TrainConfig& cfg,
                           TrainReport* report) {
  cfg.validate();
  validate(train);
  if (train.size() < cfg.folds) {
    fail(ErrorCode::kInvalidArgument,
         "need at least " + std::to_string(cfg.folds) + " training rows, got " +
             std::to_string(train.size()));
  }

  Matrix current = train.features;
  std::vector<LevelModel> levels;
  std::vector<double> scores;
  TrainReport local;
  for (std::size_t q = 0; q < cfg.max_levels; ++q) {
    LevelFit fit = fit_level(current, train.labels, train.num_classes, cfg, q);
    scores.push_back(fit.score);
    std::vector<std::pair<double, double>> objectives;
    for (const ForestFit& f : fit.forests) {
      objectives.emplace_back(f.objective_uniform, f.objective_trained);
    }
    local.objectives.push_back(std::move(objectives));
    levels.push_back(std::move(fit.level));
    if (should_stop(scores, cfg.patience) || q + 1 == cfg.max_levels) break;
    current = hconcat(current, fit.oof_class_vectors);
  }
  const std::size_t keep = best_level_index(scores) + 1;
  levels.resize(keep);
  local.level_scores = scores;
  local.levels_kept = keep;
  if (report != nullptr) *report = std::move(local);
  return CascadeModel(std::move(levels), train.feature_dim(), train.num_classes,
                      cfg.mode, train.class_names);
}

}  // namespace disdf
