#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "disdf/cascade.hpp"
#include "disdf/config.hpp"

namespace disdf {

// File layout:
//   DISDF-MODEL v<version> crc32=<8 hex> bytes=<payload size>\n
//   payload: sections of {4-byte tag, u64 length, body}, little-endian,
//   doubles stored as their raw IEEE-754 bits.
inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr std::string_view kModelMagic = "DISDF-MODEL";

struct ModelFile {
  CascadeModel model;
  // Configuration of the training run that produced `model`.
  TrainConfig config;
};

std::string serialize_model(const CascadeModel& model, const TrainConfig& config);

// Throws Error with kFormat (bad magic or malformed payload),
// kVersionMismatch (unknown format version) or kChecksum (truncated or
// corrupted payload).
ModelFile deserialize_model(std::string_view bytes);

// Throws Error(kIo) when the file cannot be written or read.
void save_model(const std::filesystem::path& path, const CascadeModel& model,
                const TrainConfig& config);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace disdf
