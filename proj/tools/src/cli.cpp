#include "disdf/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "disdf/cascade.hpp"
#include "disdf/config.hpp"
#include "disdf/dataset.hpp"
#include "disdf/errors.hpp"
#include "disdf/eval.hpp"
#include "disdf/model_io.hpp"

namespace disdf::cli {
namespace {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo:
    case ErrorCode::kVersionMismatch:
    case ErrorCode::kChecksum:
    case ErrorCode::kFormat:
      return kExitIo;
    case ErrorCode::kRaggedRow:
    case ErrorCode::kNonNumeric:
    case ErrorCode::kSingleClass:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kDegeneratePairSet:
      return kExitValidation;
    case ErrorCode::kNonConvergence:
      return kExitInternal;
  }
  return kExitInternal;
}

// Training flags, each mapped onto a TrainConfig key. Flags given on the
// command line override values from --config.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::optional<std::size_t> threads;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--config", config_path, "key=value configuration file");
    const std::pair<const char*, const char*> flags[] = {
        {"--mode", "mode"},
        {"--trees", "trees_per_forest"},
        {"--forests", "forests_per_level"},
        {"--levels", "max_levels"},
        {"--patience", "patience"},
        {"--folds", "folds"},
        {"--tau", "tau"},
        {"--lambda", "lambda"},
        {"--fw-iterations", "fw_iterations"},
        {"--pair-budget", "pair_budget"},
        {"--seed", "seed"},
        {"--min-leaf", "min_leaf"},
        {"--max-depth", "max_depth"},
    };
    for (const auto& [flag, key] : flags) {
      cmd.add_option_function<std::string>(
          flag, [this, key = std::string(key)](const std::string& v) { values[key] = v; },
          "sets " + std::string(key));
    }
    cmd.add_flag_function(
        "--stratified", [this](std::int64_t) { values["stratified_split"] = "true"; },
        "stratified train/test splits (bench)");
    cmd.add_option("--threads", threads, "worker cap (overrides DISDF_THREADS)");
  }

  TrainConfig resolve() const {
    TrainConfig cfg = config_path.empty() ? TrainConfig{} : load_config_file(config_path);
    for (const auto& [key, value] : values) cfg.set(key, value);
    if (threads) {
      cfg.threads = *threads;
    } else if (const char* env = std::getenv("DISDF_THREADS"); env && *env) {
      cfg.set("threads", env);
    }
    cfg.validate();
    return cfg;
  }
};

std::optional<LabelColumn> label_column(const std::string& text) {
  if (text.empty()) return std::nullopt;
  return parse_label_column(text);
}

std::vector<std::size_t> parse_list(const std::string& text, const char* flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size()) {
      fail(ErrorCode::kInvalidArgument,
           std::string(flag) + ": '" + item + "' is not a non-negative integer");
    }
    out.push_back(value);
  }
  if (out.empty()) fail(ErrorCode::kInvalidArgument, std::string(flag) + ": empty list");
  return out;
}

int cmd_train(const std::string& data, const std::string& label_col, const std::string& out_path,
              const ConfigFlags& flags, std::ostream& out) {
  const TrainConfig cfg = flags.resolve();
  const Dataset ds = load_csv(data, label_column(label_col));
  TrainReport report;
  const CascadeModel model = train_cascade(ds, cfg, &report);
  save_model(out_path, model, cfg);

  out << "trained " << to_string(cfg.mode) << " cascade on " << ds.size() << " rows, m="
      << ds.feature_dim() << ", C=" << ds.num_classes << '\n';
  out << std::fixed << std::setprecision(4);
  for (std::size_t q = 0; q < report.level_scores.size(); ++q) {
    out << "level " << q + 1 << ": out-of-fold accuracy " << report.level_scores[q];
    if (cfg.mode == CascadeMode::kDisDF && q < report.objectives.size()) {
      out << ", objective uniform->trained";
      for (const auto& [uniform, trained] : report.objectives[q]) {
        out << ' ' << uniform << "->" << trained;
      }
    }
    out << '\n';
  }
  out << "levels kept: " << report.levels_kept << '\n';
  out << "model written to " << out_path << '\n';
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& data,
                const std::string& drop_col, const std::string& out_path, bool names,
                std::ostream& out) {
  const ModelFile file = load_model(model_path);
  const CascadeModel& model = file.model;
  const Matrix x = load_feature_csv(data, label_column(drop_col));
  if (x.rows() > 0 && x.cols() != model.base_dim()) {
    fail(ErrorCode::kDimensionMismatch,
         data + ": expected " + std::to_string(model.base_dim()) + " features, got " +
             std::to_string(x.cols()));
  }

  std::ofstream file_out;
  std::ostream* sink = &out;
  if (!out_path.empty()) {
    file_out.open(out_path);
    if (!file_out) fail(ErrorCode::kIo, "cannot open '" + out_path + "' for writing");
    sink = &file_out;
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const int c = model.predict(x.row(i));
    if (names && static_cast<std::size_t>(c) < model.class_names().size()) {
      *sink << model.class_names()[static_cast<std::size_t>(c)] << '\n';
    } else {
      *sink << c << '\n';
    }
  }
  sink->flush();
  if (!*sink) fail(ErrorCode::kIo, "failed writing predictions");
  return kExitOk;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  body(f);
  f.close();
  if (!f) fail(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

int cmd_bench(const std::string& data, const std::string& label_col, const std::string& n_list,
              const std::string& t_list, std::size_t reps, const std::string& out_dir,
              std::string name, const ConfigFlags& flags, std::ostream& out) {
  ExperimentGrid grid;
  grid.base = flags.resolve();
  grid.ns = parse_list(n_list, "--N-list");
  grid.ts = parse_list(t_list, "--T-list");
  grid.reps = reps;
  grid.seed = grid.base.seed;
  const Dataset ds = load_csv(data, label_column(label_col));
  if (name.empty()) name = fs::path(data).stem().string();
  grid.validate(ds.size());

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create output directory '" + out_dir + "'");

  const GridResult result = run_grid(ds, grid, name, [&](const GridCell& cell) {
    out << std::fixed << std::setprecision(4) << "N=" << cell.n_train << " T=" << cell.trees
        << " baseline " << cell.summary.baseline.mean << " (" << cell.summary.baseline.std
        << ") disdf " << cell.summary.disdf.mean << " (" << cell.summary.disdf.std
        << ") paired diff " << cell.summary.mean_paired_difference << '\n'
        << std::flush;
  });

  const fs::path reps_csv = fs::path(out_dir) / (name + "_reps.csv");
  const fs::path summary_csv = fs::path(out_dir) / (name + "_summary.csv");
  write_file(reps_csv, [&](std::ostream& f) { result.write_rep_csv(f); });
  write_file(summary_csv, [&](std::ostream& f) { result.write_summary_csv(f); });

  out << '\n' << name << " (reps=" << reps << ")\n" << result.format_table();
  out << "wrote " << reps_csv.string() << " and " << summary_csv.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discriminative deep forest: cascade of forests with trained tree weights"};
  app.name("disdf");
  app.require_subcommand(1);

  std::string data;
  std::string label_col;
  std::string out_path;
  std::string model_path;
  std::string drop_col;
  bool names = false;
  std::string n_list;
  std::string t_list;
  std::size_t reps = 100;
  std::string out_dir = ".";
  std::string dataset_name;
  ConfigFlags train_flags;
  ConfigFlags bench_flags;

  CLI::App* train = app.add_subcommand("train", "train a cascade and write a model file");
  train->add_option("--data", data, "training CSV")->required();
  train->add_option("--label-col", label_col, "label column: 0-based index or header name (default: last)");
  train->add_option("--out", out_path, "model file to write")->required();
  train_flags.add_to(*train);

  CLI::App* predict = app.add_subcommand("predict", "predict class indices for a feature CSV");
  predict->add_option("--model", model_path, "model file")->required();
  predict->add_option("--data", data, "feature CSV")->required();
  predict->add_option("--drop-col", drop_col, "column to ignore, e.g. the label of a labeled file");
  predict->add_option("--out", out_path, "predictions file (default: stdout)");
  predict->add_flag("--names", names, "print class names instead of indices");

  CLI::App* bench = app.add_subcommand("bench", "repeated hold-out comparison of baseline and disdf");
  bench->add_option("--data", data, "dataset CSV")->required();
  bench->add_option("--label-col", label_col, "label column: 0-based index or header name (default: last)");
  bench->add_option("--N-list", n_list, "comma-separated training sizes")->required();
  bench->add_option("--T-list", t_list, "comma-separated trees per forest")->required();
  bench->add_option("--reps", reps, "repetitions per cell");
  bench->add_option("--out-dir", out_dir, "directory for the result CSVs");
  bench->add_option("--name", dataset_name, "dataset name in the tables (default: file stem)");
  bench_flags.add_to(*bench);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (*train) return cmd_train(data, label_col, out_path, train_flags, out);
    if (*predict) return cmd_predict(model_path, data, drop_col, out_path, names, out);
    if (*bench) {
      return cmd_bench(data, label_col, n_list, t_list, reps, out_dir, dataset_name, bench_flags,
                       out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace disdf::cli
