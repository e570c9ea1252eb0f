#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "disdf/tree.hpp"

namespace disdf {

enum class CascadeMode : std::uint8_t {
  kDisDF = 0,     // tree weights trained per forest
  kBaseline = 1,  // uniform weights (plain gcForest averaging)
};

std::string_view to_string(CascadeMode mode);
CascadeMode parse_mode(std::string_view text);

struct TrainConfig {
  std::size_t forests_per_level = 4;  // alternating random / completely-random
  std::size_t trees_per_forest = 100;
  std::size_t max_levels = 10;
  std::size_t patience = 1;
  std::size_t folds = 3;
  double tau = 0.5;
  double lambda = 0.01;
  std::size_t fw_iterations = 2000;
  std::size_t pair_budget = 0;  // 0: use every pair
  std::uint64_t seed = 0;
  CascadeMode mode = CascadeMode::kDisDF;
  TreeParams tree;
  std::size_t threads = 1;
  bool stratified_split = false;

  // Throws Error(kInvalidArgument) naming the offending field.
  void validate() const;

  // Flat `key=value` lines, one per field, doubles at full precision.
  std::string to_text() const;
  // Sets one field from its text form; unknown keys are rejected.
  void set(std::string_view key, std::string_view value);
  // Applies every `key=value` line; '#' starts a comment.
  void apply_text(std::string_view text);

  friend bool operator==(const TrainConfig&, const TrainConfig&);
};

TrainConfig load_config_file(const std::filesystem::path& path);

}  // namespace disdf
