#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace disdf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitValidation = 3;

// Runs one command line (args excludes the program name). Diagnostics go to
// `err` as a single line; normal output goes to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace disdf::cli
