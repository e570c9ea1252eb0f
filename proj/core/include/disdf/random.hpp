#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace disdf {

using Rng = std::mt19937_64;

// Mixes a base seed with a path of stream identifiers (level, forest, fold,
// repetition, ...) so that every consumer gets an independent, reproducible
// generator regardless of scheduling order.
std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::uint64_t> path);

inline Rng make_rng(std::uint64_t base,
                    std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(base, path));
}

}  // namespace disdf
