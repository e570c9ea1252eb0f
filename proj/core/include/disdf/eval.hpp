#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "disdf/cascade.hpp"
#include "disdf/config.hpp"
#include "disdf/dataset.hpp"

namespace disdf {

// Fraction of test rows whose predicted class equals the label.
double accuracy(const CascadeModel& model, const Dataset& test);

// ceil(2N/3).
std::size_t holdout_test_size(std::size_t n_train);

struct ModeSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (0 for one repetition)
  std::vector<double> accuracies;
};

struct HoldoutSummary {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  ModeSummary baseline;
  ModeSummary disdf;
  // Mean of per-repetition (disdf - baseline) accuracy differences.
  double mean_paired_difference = 0.0;
};

ModeSummary summarize(std::vector<double> accuracies);

// Repeated random subsampling: each repetition r draws a fresh split of N
// training and ceil(2N/3) test rows with seed derive_seed(seed, {r}), then
// trains both modes on that split with the same forest seed, so the two
// modes see identical data and identical tree randomness.
HoldoutSummary repeated_holdout(const Dataset& ds, std::size_t n_train,
                                std::size_t reps, const TrainConfig& cfg,
                                std::uint64_t seed);

struct ExperimentGrid {
  std::vector<std::size_t> ns;
  std::vector<std::size_t> ts;
  std::size_t reps = 100;
  TrainConfig base;
  std::uint64_t seed = 0;

  // All N fit (N + ceil(2N/3) <= n), reps >= 1, lists non-empty.
  void validate(std::size_t dataset_size) const;
};

struct GridCell {
  std::size_t n_train = 0;
  std::size_t trees = 0;
  HoldoutSummary summary;
};

struct GridResult {
  std::string dataset;
  std::vector<std::size_t> ns;
  std::vector<std::size_t> ts;
  std::vector<GridCell> cells;  // row-major: N outer, T inner

  const GridCell& cell(std::size_t n_train, std::size_t trees) const;

  // dataset,N,T,mode,rep,accuracy
  void write_rep_csv(std::ostream& out) const;
  // dataset,N,T,mode,mean,std
  void write_summary_csv(std::ostream& out) const;
  // One row per N, a (gcF, DisDF) column pair per T.
  std::string format_table() const;
};

using GridProgress = std::function<void(const GridCell&)>;

GridResult run_grid(const Dataset& ds, const ExperimentGrid& grid,
                    const std::string& dataset_name,
                    const GridProgress& progress = {});

}  // namespace disdf
