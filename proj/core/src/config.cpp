#include "disdf/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "disdf/errors.hpp"

namespace disdf {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

template <typename T>
T parse_value(std::string_view key, std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorCode::kInvalidArgument,
         "config: bad value '" + std::string(text) + "' for " + std::string(key));
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  fail(ErrorCode::kInvalidArgument,
       "config: bad boolean '" + std::string(text) + "' for " + std::string(key));
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::string_view to_string(CascadeMode mode) {
  return mode == CascadeMode::kDisDF ? "disdf" : "baseline";
}

CascadeMode parse_mode(std::string_view text) {
  if (text == "disdf") return CascadeMode::kDisDF;
  if (text == "baseline" || text == "gcforest") return CascadeMode::kBaseline;
  fail(ErrorCode::kInvalidArgument,
       "unknown mode '" + std::string(text) + "' (expected disdf or baseline)");
}

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::kInvalidArgument, "config: " + what); };
  if (forests_per_level < 1) bad("forests_per_level must be >= 1");
  if (trees_per_forest < 1) bad("trees_per_forest (T) must be >= 1");
  if (max_levels < 1) bad("max_levels must be >= 1");
  if (patience < 1) bad("patience must be >= 1");
  if (folds < 2) bad("folds must be >= 2");
  if (!(tau > 0.0) || !std::isfinite(tau)) bad("tau must be > 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) bad("lambda must be >= 0");
  if (fw_iterations < 1) bad("fw_iterations (S) must be >= 1");
  if (pair_budget == 1) bad("pair_budget must be 0 (unlimited) or >= 2");
  if (tree.min_leaf < 1) bad("min_leaf must be >= 1");
  if (threads < 1) bad("threads must be >= 1");
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  out << "mode=" << to_string(mode) << '\n'
      << "forests_per_level=" << forests_per_level << '\n'
      << "trees_per_forest=" << trees_per_forest << '\n'
      << "max_levels=" << max_levels << '\n'
      << "patience=" << patience << '\n'
      << "folds=" << folds << '\n'
      << "tau=" << format_double(tau) << '\n'
      << "lambda=" << format_double(lambda) << '\n'
      << "fw_iterations=" << fw_iterations << '\n'
      << "pair_budget=" << pair_budget << '\n'
      << "seed=" << seed << '\n'
      << "min_leaf=" << tree.min_leaf << '\n'
      << "max_depth=" << tree.max_depth << '\n'
      << "threads=" << threads << '\n'
      << "stratified_split=" << (stratified_split ? "true" : "false") << '\n';
  return out.str();
}

void TrainConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "mode") mode = parse_mode(value);
  else if (key == "forests_per_level") forests_per_level = parse_value<std::size_t>(key, value);
  else if (key == "trees_per_forest") trees_per_forest = parse_value<std::size_t>(key, value);
  else if (key == "max_levels") max_levels = parse_value<std::size_t>(key, value);
  else if (key == "patience") patience = parse_value<std::size_t>(key, value);
  else if (key == "folds") folds = parse_value<std::size_t>(key, value);
  else if (key == "tau") tau = parse_value<double>(key, value);
  else if (key == "lambda") lambda = parse_value<double>(key, value);
  else if (key == "fw_iterations") fw_iterations = parse_value<std::size_t>(key, value);
  else if (key == "pair_budget") pair_budget = parse_value<std::size_t>(key, value);
  else if (key == "seed") seed = parse_value<std::uint64_t>(key, value);
  else if (key == "min_leaf") tree.min_leaf = parse_value<std::size_t>(key, value);
  else if (key == "max_depth") tree.max_depth = parse_value<std::size_t>(key, value);
  else if (key == "threads") threads = parse_value<std::size_t>(key, value);
  else if (key == "stratified_split") stratified_split = parse_bool(key, value);
  else fail(ErrorCode::kInvalidArgument, "config: unknown key '" + std::string(key) + "'");
}

void TrainConfig::apply_text(std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::kInvalidArgument,
           "config line " + std::to_string(line_no) + ": expected key=value");
    }
    set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

bool operator==(const TrainConfig& a, const TrainConfig& b) {
  return a.to_text() == b.to_text();
}

TrainConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  TrainConfig cfg;
  cfg.apply_text(buf.str());
  return cfg;
}

}  // namespace disdf
