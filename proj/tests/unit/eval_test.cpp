#include <gtest/gtest.h>

#include <chrono>
#include <numeric>
#include <sstream>

#include "disdf/errors.hpp"
#include "disdf/eval.hpp"
#include "toy_data.hpp"

namespace disdf {
namespace {

TrainConfig fast_config() {
  TrainConfig cfg;
  cfg.trees_per_forest = 10;
  cfg.fw_iterations = 200;
  cfg.max_levels = 2;
  return cfg;
}

// One stump on feature 0 at 0.5: class 0 on the left, class 1 on the right.
CascadeModel stump_model() {
  const std::vector<TreeNode> nodes = {
      {.feature = 0, .left = 1, .right = 2, .leaf = -1, .threshold = 0.5},
      {.feature = -1, .left = -1, .right = -1, .leaf = 0, .threshold = 0.0},
      {.feature = -1, .left = -1, .right = -1, .leaf = 1, .threshold = 0.0},
  };
  std::vector<TreeModel> trees;
  trees.emplace_back(TreeKind::kRandomSplit, 1, 2, nodes, std::vector<double>{1.0, 0.0, 0.0, 1.0});
  ForestModel forest(TreeKind::kRandomSplit, std::move(trees), WeightVector::uniform(1));
  return CascadeModel({LevelModel{{forest}, 1}}, 1, 2, CascadeMode::kBaseline);
}

TEST(Accuracy, AllCorrect) {
  const Dataset test = testing::from_rows({{0.1}, {0.9}, {0.2}}, {0, 1, 0}, 2);
  EXPECT_EQ(accuracy(stump_model(), test), 1.0);
}

TEST(Accuracy, ThreeOfFour) {
  const Dataset test = testing::from_rows({{0.1}, {0.9}, {0.2}, {0.3}}, {0, 1, 0, 1}, 2);
  EXPECT_EQ(accuracy(stump_model(), test), 0.75);
}

TEST(Accuracy, MatchesCountingLoop) {
  const Dataset ds = testing::gaussian_blobs(90, 3, 3, 0.6, 4);
  const auto [train, test] = split(ds, 50, 40, 2);
  const CascadeModel model = train_cascade(train, fast_config());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (model.predict(test.features.row(i)) == test.labels[i]) ++correct;
  }
  EXPECT_DOUBLE_EQ(accuracy(model, test), static_cast<double>(correct) / 40.0);
}

TEST(Accuracy, Errors) {
  const Dataset empty = testing::from_rows({}, {}, 2);
  EXPECT_THROW(accuracy(stump_model(), empty), Error);
  const Dataset wide = testing::from_rows({{0.1, 0.2}}, {0}, 2);
  EXPECT_THROW(accuracy(stump_model(), wide), Error);
}

TEST(RepeatedHoldout, TestSizeIsCeilingOfTwoThirds) {
  EXPECT_EQ(holdout_test_size(120), 80u);
  EXPECT_EQ(holdout_test_size(100), 67u);
  EXPECT_EQ(holdout_test_size(50), 34u);
  EXPECT_EQ(holdout_test_size(3), 2u);
  const Dataset ds = testing::gaussian_blobs(200, 2, 2, 2.0, 1);
  TrainConfig cfg = fast_config();
  cfg.trees_per_forest = 3;
  cfg.max_levels = 1;
  const HoldoutSummary s = repeated_holdout(ds, 120, 1, cfg, 0);
  EXPECT_EQ(s.n_test, 80u);
  EXPECT_THROW(repeated_holdout(ds, 121, 1, cfg, 0), Error);
}

TEST(RepeatedHoldout, Deterministic) {
  const Dataset ds = testing::gaussian_blobs(80, 3, 2, 0.7, 3);
  const HoldoutSummary a = repeated_holdout(ds, 30, 1, fast_config(), 17);
  const HoldoutSummary b = repeated_holdout(ds, 30, 1, fast_config(), 17);
  EXPECT_EQ(a.baseline.accuracies, b.baseline.accuracies);
  EXPECT_EQ(a.disdf.accuracies, b.disdf.accuracies);
}

TEST(RepeatedHoldout, ModesArePaired) {
  // With one tree per forest the two modes build identical models, so any
  // per-repetition difference would come from unpaired splits or seeds.
  const Dataset ds = testing::gaussian_blobs(90, 3, 3, 0.5, 8);
  TrainConfig cfg = fast_config();
  cfg.trees_per_forest = 1;
  const HoldoutSummary s = repeated_holdout(ds, 40, 5, cfg, 3);
  EXPECT_EQ(s.baseline.accuracies, s.disdf.accuracies);
  EXPECT_EQ(s.mean_paired_difference, 0.0);
}

TEST(RepeatedHoldout, SeparableDataBaseline) {
  const Dataset ds = testing::separable_clusters(200, 3, 2.0, 5);
  TrainConfig cfg = fast_config();
  cfg.mode = CascadeMode::kBaseline;
  const HoldoutSummary s = repeated_holdout(ds, 60, 10, cfg, 1);
  EXPECT_GE(s.baseline.mean, 0.95);
}

TEST(RepeatedHoldout, ThreadedRepetitionsMatchSerial) {
  const Dataset ds = testing::gaussian_blobs(80, 3, 2, 0.7, 3);
  TrainConfig cfg = fast_config();
  const HoldoutSummary serial = repeated_holdout(ds, 30, 3, cfg, 9);
  cfg.threads = 3;
  const HoldoutSummary threaded = repeated_holdout(ds, 30, 3, cfg, 9);
  EXPECT_EQ(serial.baseline.accuracies, threaded.baseline.accuracies);
  EXPECT_EQ(serial.disdf.accuracies, threaded.disdf.accuracies);
}

TEST(Summarize, MeanAndSampleStd) {
  const ModeSummary s = summarize({0.5, 0.7, 0.9});
  EXPECT_NEAR(s.mean, 0.7, 1e-15);
  EXPECT_NEAR(s.std, 0.2, 1e-15);
  EXPECT_EQ(summarize({0.4}).std, 0.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> values(37);
  for (double& v : values) v = u(rng);
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / 37.0;
  EXPECT_NEAR(summarize(values).mean, mean, 1e-12);
}

TEST(RunGrid, TinyDatasetCellsInRange) {
  const Dataset ds = testing::gaussian_blobs(20, 2, 2, 1.0, 2);
  ExperimentGrid grid;
  grid.ns = {6, 9};
  grid.ts = {1, 4};
  grid.reps = 1;
  grid.base = fast_config();
  const auto start = std::chrono::steady_clock::now();
  const GridResult r = run_grid(ds, grid, "toy");
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(60));
  ASSERT_EQ(r.cells.size(), 4u);
  for (const GridCell& c : r.cells) {
    for (double a : {c.summary.baseline.mean, c.summary.disdf.mean}) {
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 1.0);
    }
  }
  EXPECT_EQ(r.cell(9, 4).n_train, 9u);
  EXPECT_THROW(r.cell(7, 4), Error);
}

TEST(RunGrid, TableLayoutAndCsv) {
  const Dataset ds = testing::separable_clusters(200, 2, 3.0, 7);
  ExperimentGrid grid;
  grid.ns = {50, 80, 100, 120};
  grid.ts = {100, 400, 700, 1000};
  grid.reps = 1;
  grid.base = fast_config();
  grid.base.forests_per_level = 2;
  grid.base.max_levels = 1;
  grid.base.fw_iterations = 20;
  const GridResult r = run_grid(ds, grid, "blobs");
  ASSERT_EQ(r.cells.size(), 16u);

  std::istringstream table(r.format_table());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(table, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 6u);  // two header rows and one row per N
  for (std::size_t k = 2; k < 6; ++k) {
    std::istringstream row(lines[k]);
    std::size_t n = 0;
    row >> n;
    EXPECT_EQ(n, grid.ns[k - 2]);
    std::vector<double> values;
    double v = 0.0;
    while (row >> v) values.push_back(v);
    EXPECT_EQ(values.size(), 8u);
  }

  std::ostringstream reps;
  r.write_rep_csv(reps);
  std::istringstream reps_in(reps.str());
  std::getline(reps_in, line);
  EXPECT_EQ(line, "dataset,N,T,mode,rep,accuracy");
  std::size_t rows = 0;
  while (std::getline(reps_in, line)) ++rows;
  EXPECT_EQ(rows, 32u);

  std::ostringstream summary;
  r.write_summary_csv(summary);
  EXPECT_EQ(summary.str().substr(0, summary.str().find('\n')), "dataset,N,T,mode,mean,std");
}

TEST(RunGrid, Validation) {
  const Dataset ds = testing::gaussian_blobs(20, 2, 2, 1.0, 2);
  ExperimentGrid grid;
  grid.ns = {13};
  grid.ts = {1};
  grid.reps = 1;
  EXPECT_THROW(grid.validate(ds.size()), Error);
  grid.ns = {12};
  EXPECT_NO_THROW(grid.validate(ds.size()));
  grid.ts = {};
  EXPECT_THROW(grid.validate(ds.size()), Error);
}

}  // namespace
}  // namespace disdf
