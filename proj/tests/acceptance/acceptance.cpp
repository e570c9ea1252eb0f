// Acceptance gate. Usage: disdf_acceptance [criterion...]  (default: all)
// Prints one PASS/FAIL line per criterion; exit status is non-zero if any
// requested criterion fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "disdf/cascade.hpp"
#include "disdf/errors.hpp"
#include "disdf/eval.hpp"
#include "disdf/model_io.hpp"
#include "disdf/weight_opt.hpp"
#include "oracles.hpp"
#include "toy_data.hpp"

namespace {

using namespace disdf;
using Clock = std::chrono::steady_clock;

// Collects sub-check outcomes for one criterion.
class Report {
 public:
  void check(bool ok, const std::string& what) {
    std::cout << "    [" << (ok ? "ok" : "FAILED") << "] " << what << '\n';
    all_ok_ = all_ok_ && ok;
  }
  bool ok() const noexcept { return all_ok_; }

 private:
  bool all_ok_ = true;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

std::string fixed(double v, int precision = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(precision);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// 1. Correctness of the objective, its gradient and both solvers.

constexpr double kGradientRelTol = 1e-5;
constexpr double kFiniteDifferenceStep = 1e-6;
constexpr std::size_t kGradientInstances = 50;
constexpr double kSolverGapTol = 1e-3;
constexpr std::size_t kSolverInstances = 20;
constexpr std::size_t kSolverMaxTrees = 8;
constexpr std::size_t kSolverMaxPairs = 40;
constexpr std::size_t kSolverIterations = 2000;
constexpr double kGridTol = 2e-3;
constexpr std::size_t kConvexityTriples = 100;
constexpr double kConvexityTol = 1e-9;
constexpr double kSimplexTol = 1e-12;

bool criterion1() {
  Report r;
  std::mt19937_64 gen(20240101);

  double worst_grad = 0.0;
  for (std::size_t k = 0; k < kGradientInstances; ++k) {
    const std::size_t trees = 2 + gen() % 7;
    const auto inst = testing::random_instance(6, trees, 3, gen());
    const Objective j(inst.stats, {});
    Rng rng(gen());
    const auto w = testing::random_simplex_point(trees, rng);
    const auto g = j.gradient(w);
    const auto fd = testing::central_difference(
        [&](std::span<const double> v) {
          return testing::direct_objective(inst.dists, inst.labels, v, 0.5, 0.01);
        },
        w, kFiniteDifferenceStep);
    double scale = 0.0;
    double err = 0.0;
    for (std::size_t t = 0; t < trees; ++t) {
      scale = std::max(scale, std::abs(fd[t]));
      err = std::max(err, std::abs(g[t] - fd[t]));
    }
    worst_grad = std::max(worst_grad, err / std::max(scale, 1e-300));
  }
  r.check(worst_grad <= kGradientRelTol,
          "gradient vs central differences, " + std::to_string(kGradientInstances) +
              " instances: worst relative error " + fmt(worst_grad, 3) + " <= " +
              fmt(kGradientRelTol));

  double worst_gap = 0.0;
  double worst_sum = 0.0;
  double worst_negative = 0.0;
  std::size_t iterates = 0;
  for (std::size_t k = 0; k < kSolverInstances; ++k) {
    const std::size_t trees = 2 + k % (kSolverMaxTrees - 1);
    const std::size_t n = 4 + gen() % 6;  // at most 36 pairs
    const auto inst = testing::random_instance(n, trees, 3, gen());
    if (inst.stats.num_pairs() > kSolverMaxPairs) return false;
    const Objective j(inst.stats, {});
    FrankWolfeOptions opt;
    opt.iterations = kSolverIterations;
    opt.observer = [&](const FrankWolfeStep& step) {
      ++iterates;
      const double sum = std::accumulate(step.weights.begin(), step.weights.end(), 0.0);
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
      for (double v : step.weights) worst_negative = std::min(worst_negative, v);
    };
    const auto fw = frank_wolfe(j, opt);
    const auto ref = reference_solve(j, 1e-10);
    worst_gap = std::max(worst_gap, std::abs(fw.objective - j.value(ref.values())));
  }
  r.check(worst_gap <= kSolverGapTol,
          "Frank-Wolfe (S=2000) vs reference solver, " + std::to_string(kSolverInstances) +
              " instances with T<=8 and <=40 pairs: worst |J_fw - J_ref| " + fmt(worst_gap, 3) +
              " <= " + fmt(kSolverGapTol));
  r.check(worst_sum <= kSimplexTol && worst_negative >= 0.0,
          "simplex preserved over " + std::to_string(iterates) + " iterates: max |sum-1| " +
              fmt(worst_sum, 3) + ", min weight " + fmt(worst_negative, 3));

  double worst_grid = 0.0;
  for (std::size_t trees : {2u, 3u}) {
    for (int k = 0; k < 5; ++k) {
      const auto inst = testing::random_instance(6, trees, 3, gen());
      const Objective j(inst.stats, {});
      const auto f = [&](std::span<const double> w) {
        return testing::direct_objective(inst.dists, inst.labels, w, 0.5, 0.01);
      };
      const auto grid =
          trees == 2 ? testing::grid_argmin_2(f, 100000) : testing::grid_argmin_3(f, 1000);
      const auto ref = reference_solve(j, 1e-10);
      for (std::size_t t = 0; t < trees; ++t) {
        worst_grid = std::max(worst_grid, std::abs(ref[t] - grid[t]));
      }
    }
  }
  r.check(worst_grid <= kGridTol, "reference solver vs exhaustive simplex grid (T=2,3): worst component error " +
                                      fmt(worst_grid, 3) + " <= " + fmt(kGridTol));

  double worst_convex = -std::numeric_limits<double>::infinity();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t k = 0; k < kConvexityTriples; ++k) {
    const std::size_t trees = 2 + gen() % 7;
    const auto inst = testing::random_instance(7, trees, 3, gen());
    const Objective j(inst.stats, {});
    Rng rng(gen());
    const auto a = testing::random_simplex_point(trees, rng);
    const auto b = testing::random_simplex_point(trees, rng);
    const double theta = u(gen);
    std::vector<double> mix(trees);
    for (std::size_t t = 0; t < trees; ++t) mix[t] = theta * a[t] + (1.0 - theta) * b[t];
    worst_convex = std::max(
        worst_convex, j.value(mix) - (theta * j.value(a) + (1.0 - theta) * j.value(b)));
  }
  r.check(worst_convex <= kConvexityTol,
          "convexity over " + std::to_string(kConvexityTriples) +
              " random triples: worst J(mix) - chord " + fmt(worst_convex, 3) + " <= " +
              fmt(kConvexityTol));
  return r.ok();
}

// ---------------------------------------------------------------------------
// 2. Structure of trained cascades.

constexpr double kUniformMeanTol = 1e-12;
constexpr double kClassVectorSumTol = 1e-9;

bool criterion2() {
  Report r;
  const Dataset ds = testing::gaussian_blobs(120, 6, 3, 0.8, 7);
  const std::size_t m = 6;
  const std::size_t C = 3;
  std::mt19937_64 gen(3);
  std::normal_distribution<double> g(0.0, 2.0);
  std::vector<std::vector<double>> probes(100, std::vector<double>(m));
  for (auto& x : probes) {
    for (double& v : x) v = g(gen);
  }

  for (CascadeMode mode : {CascadeMode::kBaseline, CascadeMode::kDisDF}) {
    const std::string tag = std::string(to_string(mode)) + ": ";
    TrainConfig cfg;
    cfg.mode = mode;
    cfg.trees_per_forest = 20;
    cfg.max_levels = 3;
    cfg.patience = 3;
    cfg.seed = 11;

    // Dimension recurrence, both on the level-by-level fits and on the
    // (possibly truncated) final model.
    bool dims_ok = true;
    std::vector<LevelModel> fitted;
    Matrix current = ds.features;
    for (std::size_t q = 0; q < 3; ++q) {
      const LevelFit fit = fit_level(current, ds.labels, 3, cfg, q);
      const std::size_t expected = m + q * cfg.forests_per_level * C;
      dims_ok = dims_ok && fit.level.input_dim == expected && current.cols() == expected &&
                fit.level.output_dim() == expected + cfg.forests_per_level * C &&
                fit.oof_class_vectors.cols() == cfg.forests_per_level * C;
      fitted.push_back(fit.level);
      Matrix next(current.rows(), current.cols() + fit.oof_class_vectors.cols());
      for (std::size_t i = 0; i < current.rows(); ++i) {
        std::copy(current.row(i).begin(), current.row(i).end(), next.row(i).begin());
        std::copy(fit.oof_class_vectors.row(i).begin(), fit.oof_class_vectors.row(i).end(),
                  next.row(i).begin() + static_cast<std::ptrdiff_t>(current.cols()));
      }
      current = std::move(next);
    }
    const CascadeModel model = train_cascade(ds, cfg);
    for (std::size_t q = 0; q < model.levels().size(); ++q) {
      const LevelModel& level = model.levels()[q];
      dims_ok = dims_ok && level.input_dim == m + q * level.forests.size() * C;
      for (const ForestModel& f : level.forests) dims_ok = dims_ok && f.input_dim() == level.input_dim;
    }
    r.check(dims_ok, tag + "level q consumes m + q*M*C features for 3 fitted levels and " +
                         std::to_string(model.levels().size()) + " kept level(s)");

    // Class vectors are checked through the three fitted levels and
    // through the kept levels of the final model.
    double worst_mean = 0.0;
    double worst_sum = 0.0;
    const std::vector<const std::vector<LevelModel>*> chains = {&fitted, &model.levels()};
    for (const std::vector<LevelModel>* chain : chains) {
      for (const auto& x : probes) {
        std::vector<double> input = x;
        for (const LevelModel& level : *chain) {
          for (const ForestModel& f : level.forests) {
            const auto v = forest_class_vector(f, input);
            worst_sum =
                std::max(worst_sum, std::abs(std::accumulate(v.begin(), v.end(), 0.0) - 1.0));
            if (mode == CascadeMode::kBaseline) {
              const auto mean = testing::mean_tree_distribution(f, input);
              for (std::size_t c = 0; c < C; ++c) {
                worst_mean = std::max(worst_mean, std::abs(v[c] - mean[c]));
              }
            }
          }
          input = augment(level, input);
        }
      }
    }
    if (mode == CascadeMode::kBaseline) {
      r.check(worst_mean <= kUniformMeanTol, tag + "class vectors equal tree means, worst error " +
                                                 fmt(worst_mean, 3) + " <= " + fmt(kUniformMeanTol));
    }
    r.check(worst_sum <= kClassVectorSumTol, tag + "class vectors sum to 1, worst error " +
                                                 fmt(worst_sum, 3) + " <= " + fmt(kClassVectorSumTol));

    const ModelFile back = deserialize_model(serialize_model(model, cfg));
    bool identical = back.model == model;
    for (const auto& x : probes) {
      const auto a = model.class_scores(x);
      const auto b = back.model.class_scores(x);
      for (std::size_t c = 0; c < C; ++c) {
        identical = identical && std::bit_cast<std::uint64_t>(a[c]) == std::bit_cast<std::uint64_t>(b[c]);
      }
      identical = identical && model.predict(x) == back.model.predict(x);
    }
    r.check(identical, tag + "model round-trip gives bitwise-identical scores on 100 inputs");
  }
  return r.ok();
}

// ---------------------------------------------------------------------------
// 3. Trained weights separate classes at least as well as uniform ones.

constexpr std::size_t kBlobRows = 200;
constexpr std::size_t kBlobDims = 5;
constexpr std::size_t kEffectSeeds = 10;

struct DistanceRatio {
  double trained = 0.0;
  double uniform = 0.0;
};

// Mean different-class over mean same-class Manhattan distance of the
// level's concatenated out-of-fold class vectors.
DistanceRatio manhattan_ratio(const LevelFit& fit, std::span<const int> labels) {
  const std::size_t n = labels.size();
  double diff_t = 0.0, same_t = 0.0, diff_u = 0.0, same_u = 0.0;
  std::size_t n_diff = 0, n_same = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double dt = 0.0;
      double du = 0.0;
      for (const ForestFit& f : fit.forests) {
        const std::size_t T = f.oof.trees();
        for (std::size_t t = 0; t < T; ++t) {
          const auto a = f.oof.at(i, t);
          const auto b = f.oof.at(j, t);
          double q = 0.0;
          for (std::size_t c = 0; c < a.size(); ++c) q += std::abs(a[c] - b[c]);
          dt += f.weights[t] * q;
          du += q / static_cast<double>(T);
        }
      }
      if (labels[i] == labels[j]) {
        same_t += dt;
        same_u += du;
        ++n_same;
      } else {
        diff_t += dt;
        diff_u += du;
        ++n_diff;
      }
    }
  }
  return {(diff_t / n_diff) / (same_t / n_same), (diff_u / n_diff) / (same_u / n_same)};
}

bool criterion3() {
  Report r;
  bool non_degrading = true;
  double worst_margin = -std::numeric_limits<double>::infinity();
  double sum_trained = 0.0;
  double sum_uniform = 0.0;
  for (std::size_t seed = 0; seed < kEffectSeeds; ++seed) {
    const Dataset ds = testing::gaussian_blobs(kBlobRows, kBlobDims, 2, 1.0, 1000 + seed);
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.threads = std::max(1u, std::thread::hardware_concurrency());
    const LevelFit fit = fit_level(ds.features, ds.labels, 2, cfg, 0);
    for (const ForestFit& f : fit.forests) {
      non_degrading = non_degrading && f.objective_trained <= f.objective_uniform;
      worst_margin = std::max(worst_margin, f.objective_trained - f.objective_uniform);
    }
    const DistanceRatio ratio = manhattan_ratio(fit, ds.labels);
    sum_trained += ratio.trained;
    sum_uniform += ratio.uniform;
    std::cout << "      seed " << seed << ": ratio trained " << fixed(ratio.trained)
              << ", uniform " << fixed(ratio.uniform) << '\n';
  }
  r.check(non_degrading, "J(trained) <= J(uniform) for all " + std::to_string(4 * kEffectSeeds) +
                             " forests (worst J(trained) - J(uniform) = " + fmt(worst_margin, 3) + ")");
  const double mean_trained = sum_trained / kEffectSeeds;
  const double mean_uniform = sum_uniform / kEffectSeeds;
  r.check(mean_trained >= mean_uniform,
          "mean different/same-class Manhattan ratio over " + std::to_string(kEffectSeeds) +
              " seeds: trained " + fixed(mean_trained) + " >= uniform " + fixed(mean_uniform));
  return r.ok();
}

// ---------------------------------------------------------------------------
// 4. Accuracy on the benchmark datasets.

constexpr std::size_t kBenchReps = 30;
constexpr double kPairedFloor = -0.01;

struct BenchCell {
  std::string name;
  std::string file;
  std::size_t n_train;
  std::size_t trees;
  double expected_baseline;
  double expected_disdf;
  double tolerance;
};

bool criterion4() {
  Report r;
  const std::vector<BenchCell> cells = {
      {"parkinsons", "parkinsons.csv", 120, 400, 0.92, 0.95, 0.07},
      {"ecoli", "ecoli.csv", 100, 1000, 0.90, 0.93, 0.07},
      {"ionosphere", "ionosphere.csv", 100, 100, 0.72, 0.80, 0.10},
  };
  for (const BenchCell& cell : cells) {
    const std::filesystem::path path = std::filesystem::path(DISDF_DATA_DIR) / cell.file;
    const std::string tag = cell.name + " N=" + std::to_string(cell.n_train) +
                            " T=" + std::to_string(cell.trees) + ": ";
    if (!std::filesystem::exists(path)) {
      r.check(false, tag + "dataset not present at " + path.string());
      continue;
    }
    const Dataset ds = load_csv(path);
    TrainConfig cfg;
    cfg.trees_per_forest = cell.trees;
    cfg.threads = std::max(1u, std::thread::hardware_concurrency());
    const auto start = Clock::now();
    const HoldoutSummary s = repeated_holdout(ds, cell.n_train, kBenchReps, cfg, 2024);
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    std::cout << "      " << tag << "baseline " << fixed(s.baseline.mean) << " (sd "
              << fixed(s.baseline.std) << "), disdf " << fixed(s.disdf.mean) << " (sd "
              << fixed(s.disdf.std) << "), paired diff " << fixed(s.mean_paired_difference)
              << ", " << fixed(secs, 1) << " s\n";
    r.check(std::abs(s.baseline.mean - cell.expected_baseline) <= cell.tolerance,
            tag + "baseline mean " + fixed(s.baseline.mean) + " within " + fmt(cell.tolerance) +
                " of " + fmt(cell.expected_baseline));
    r.check(std::abs(s.disdf.mean - cell.expected_disdf) <= cell.tolerance,
            tag + "disdf mean " + fixed(s.disdf.mean) + " within " + fmt(cell.tolerance) + " of " +
                fmt(cell.expected_disdf));
    r.check(s.mean_paired_difference >= kPairedFloor,
            tag + "paired mean(disdf - baseline) " + fixed(s.mean_paired_difference) +
                " >= " + fmt(kPairedFloor));
  }
  return r.ok();
}

// ---------------------------------------------------------------------------
// 5. Degenerate inputs.

bool criterion5() {
  Report r;
  Dataset single = testing::gaussian_blobs(40, 3, 2, 1.0, 5);
  std::fill(single.labels.begin(), single.labels.end(), 0);
  TrainConfig cfg;
  cfg.trees_per_forest = 10;
  std::string outcome = "no error";
  bool degenerate = false;
  try {
    train_cascade(single, cfg);
  } catch (const Error& e) {
    degenerate = e.code() == ErrorCode::kDegeneratePairSet;
    outcome = e.what();
  } catch (const std::exception& e) {
    outcome = std::string("unexpected exception: ") + e.what();
  }
  r.check(degenerate, "single-class training data in disdf mode -> " + outcome);

  const Dataset ds = testing::gaussian_blobs(60, 3, 3, 1.5, 6);
  const auto [train, test] = split(ds, 40, 20, 1);
  for (CascadeMode mode : {CascadeMode::kDisDF, CascadeMode::kBaseline}) {
    TrainConfig one;
    one.mode = mode;
    one.trees_per_forest = 1;
    bool ok = true;
    std::string detail;
    try {
      const CascadeModel model = train_cascade(train, one);
      for (const LevelModel& level : model.levels()) {
        for (const ForestModel& f : level.forests) ok = ok && f.num_trees() == 1 && f.weights()[0] == 1.0;
      }
      for (std::size_t i = 0; i < test.size(); ++i) {
        const int c = model.predict(test.features.row(i));
        ok = ok && c >= 0 && c < 3;
      }
      detail = "test accuracy " + fixed(accuracy(model, test));
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    r.check(ok, std::string(to_string(mode)) + ": T=1 forests train and predict (" + detail + ")");
  }
  return r.ok();
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<const char*, bool (*)()>> criteria = {
      {1, {"objective, gradient and solver correctness", criterion1}},
      {2, {"cascade structure and model round-trip", criterion2}},
      {3, {"discriminative effect on Gaussian blobs", criterion3}},
      {4, {"benchmark accuracy (30 repetitions)", criterion4}},
      {5, {"degenerate inputs", criterion5}},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty()) {
    for (const auto& [k, v] : criteria) selected.push_back(k);
  }

  bool all = true;
  for (int k : selected) {
    const auto it = criteria.find(k);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << k << '\n';
      return 2;
    }
    const auto start = Clock::now();
    bool ok = false;
    try {
      ok = it->second.second();
    } catch (const std::exception& e) {
      std::cout << "    [FAILED] uncaught exception: " << e.what() << '\n';
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << k << ": " << it->second.first << " ("
              << fixed(secs, 1) << " s)" << std::endl;
    all = all && ok;
  }
  return all ? 0 : 1;
}
