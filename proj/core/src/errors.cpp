#include "disdf/errors.hpp"

namespace disdf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io";
    case ErrorCode::kRaggedRow: return "ragged row";
    case ErrorCode::kNonNumeric: return "non-numeric cell";
    case ErrorCode::kSingleClass: return "single class";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kDegeneratePairSet: return "degenerate pair set";
    case ErrorCode::kNonConvergence: return "non-convergence";
    case ErrorCode::kVersionMismatch: return "version mismatch";
    case ErrorCode::kChecksum: return "checksum";
    case ErrorCode::kFormat: return "format";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace disdf
