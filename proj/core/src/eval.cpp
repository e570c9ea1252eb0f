#include "disdf/eval.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "disdf/errors.hpp"
#include "disdf/parallel.hpp"
#include "disdf/random.hpp"

namespace disdf {

double accuracy(const CascadeModel& model, const Dataset& test) {
  if (test.size() == 0) fail(ErrorCode::kInvalidArgument, "accuracy: empty test set");
  if (test.feature_dim() != model.base_dim()) {
    fail(ErrorCode::kDimensionMismatch,
         "accuracy: test set has " + std::to_string(test.feature_dim()) +
             " features, model expects " + std::to_string(model.base_dim()));
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (model.predict(test.features.row(i)) == test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::size_t holdout_test_size(std::size_t n_train) {
  return (2 * n_train + 2) / 3;
}

ModeSummary summarize(std::vector<double> accuracies) {
  ModeSummary s;
  s.accuracies = std::move(accuracies);
  const auto n = static_cast<double>(s.accuracies.size());
  if (s.accuracies.empty()) return s;
  s.mean = std::accumulate(s.accuracies.begin(), s.accuracies.end(), 0.0) / n;
  if (s.accuracies.size() > 1) {
    double ss = 0.0;
    for (double a : s.accuracies) ss += (a - s.mean) * (a - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

HoldoutSummary repeated_holdout(const Dataset& ds, std::size_t n_train,
                                std::size_t reps, const TrainConfig& cfg,
                                std::uint64_t seed) {
  cfg.validate();
  if (reps < 1) fail(ErrorCode::kInvalidArgument, "repeated_holdout: reps must be >= 1");
  const std::size_t n_test = holdout_test_size(n_train);
  if (n_train + n_test > ds.size()) {
    fail(ErrorCode::kInvalidArgument,
         "N=" + std::to_string(n_train) + " needs " + std::to_string(n_train + n_test) +
             " rows (N + ceil(2N/3)) but dataset has " + std::to_string(ds.size()));
  }

  std::vector<double> base_acc(reps);
  std::vector<double> disdf_acc(reps);
  // Parallelise over repetitions; each training run is then single-threaded.
  const std::size_t outer = std::min(cfg.threads, reps);
  parallel_for(reps, outer, [&](std::size_t r) {
    const std::uint64_t rep_seed = derive_seed(seed, {r});
    const auto [train, test] = split(ds, n_train, n_test, rep_seed, cfg.stratified_split);
    TrainConfig run = cfg;
    run.seed = derive_seed(rep_seed, {0x7ee5});
    if (outer > 1) run.threads = 1;
    run.mode = CascadeMode::kBaseline;
    base_acc[r] = accuracy(train_cascade(train, run), test);
    run.mode = CascadeMode::kDisDF;
    disdf_acc[r] = accuracy(train_cascade(train, run), test);
  });

  HoldoutSummary out;
  out.n_train = n_train;
  out.n_test = n_test;
  double diff = 0.0;
  for (std::size_t r = 0; r < reps; ++r) diff += disdf_acc[r] - base_acc[r];
  out.mean_paired_difference = diff / static_cast<double>(reps);
  out.baseline = summarize(std::move(base_acc));
  out.disdf = summarize(std::move(disdf_acc));
  return out;
}

void ExperimentGrid::validate(std::size_t dataset_size) const {
  if (ns.empty() || ts.empty()) fail(ErrorCode::kInvalidArgument, "grid: empty N or T list");
  if (reps < 1) fail(ErrorCode::kInvalidArgument, "grid: reps must be >= 1");
  for (std::size_t n : ns) {
    if (n < 1 || n + holdout_test_size(n) > dataset_size) {
      fail(ErrorCode::kInvalidArgument,
           "grid: N=" + std::to_string(n) + " exceeds dataset capacity (N + ceil(2N/3) must be <= " +
               std::to_string(dataset_size) + ")");
    }
  }
  for (std::size_t t : ts) {
    if (t < 1) fail(ErrorCode::kInvalidArgument, "grid: T must be >= 1");
  }
  base.validate();
}

const GridCell& GridResult::cell(std::size_t n_train, std::size_t trees) const {
  for (const GridCell& c : cells) {
    if (c.n_train == n_train && c.trees == trees) return c;
  }
  fail(ErrorCode::kInvalidArgument, "grid has no cell N=" + std::to_string(n_train) +
                                        ", T=" + std::to_string(trees));
}

void GridResult::write_rep_csv(std::ostream& out) const {
  out << "dataset,N,T,mode,rep,accuracy\n";
  out << std::setprecision(17);
  for (const GridCell& c : cells) {
    for (const auto& [mode, s] : {std::pair{"baseline", &c.summary.baseline},
                                  std::pair{"disdf", &c.summary.disdf}}) {
      for (std::size_t r = 0; r < s->accuracies.size(); ++r) {
        out << dataset << ',' << c.n_train << ',' << c.trees << ',' << mode << ',' << r
            << ',' << s->accuracies[r] << '\n';
      }
    }
  }
}

void GridResult::write_summary_csv(std::ostream& out) const {
  out << "dataset,N,T,mode,mean,std\n";
  out << std::setprecision(17);
  for (const GridCell& c : cells) {
    out << dataset << ',' << c.n_train << ',' << c.trees << ",baseline,"
        << c.summary.baseline.mean << ',' << c.summary.baseline.std << '\n';
    out << dataset << ',' << c.n_train << ',' << c.trees << ",disdf,"
        << c.summary.disdf.mean << ',' << c.summary.disdf.std << '\n';
  }
}

std::string GridResult::format_table() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3);
  out << std::setw(6) << "T";
  for (std::size_t t : ts) out << std::setw(16) << t;
  out << '\n' << std::setw(6) << "N";
  for (std::size_t k = 0; k < ts.size(); ++k) out << std::setw(8) << "gcF" << std::setw(8) << "DisDF";
  out << '\n';
  for (std::size_t n : ns) {
    out << std::setw(6) << n;
    for (std::size_t t : ts) {
      const GridCell& c = cell(n, t);
      out << std::setw(8) << c.summary.baseline.mean << std::setw(8) << c.summary.disdf.mean;
    }
    out << '\n';
  }
  return out.str();
}

GridResult run_grid(const Dataset& ds, const ExperimentGrid& grid,
                    const std::string& dataset_name, const GridProgress& progress) {
  grid.validate(ds.size());
  GridResult result;
  result.dataset = dataset_name;
  result.ns = grid.ns;
  result.ts = grid.ts;
  for (std::size_t n : grid.ns) {
    for (std::size_t t : grid.ts) {
      TrainConfig cfg = grid.base;
      cfg.trees_per_forest = t;
      GridCell cell;
      cell.n_train = n;
      cell.trees = t;
      // Same split seeds for every T so cells in a row are comparable.
      cell.summary = repeated_holdout(ds, n, grid.reps, cfg, derive_seed(grid.seed, {n}));
      if (progress) progress(cell);
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

}  // namespace disdf
