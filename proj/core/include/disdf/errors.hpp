#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace disdf {

enum class ErrorCode {
  kIo,
  kRaggedRow,
  kNonNumeric,
  kSingleClass,
  kInvalidArgument,
  kDimensionMismatch,
  kDegeneratePairSet,
  kNonConvergence,
  kVersionMismatch,
  kChecksum,
  kFormat,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries an ErrorCode so callers (the
// CLI in particular) can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace disdf
