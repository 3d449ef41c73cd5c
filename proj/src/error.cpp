#include "hyperseq/error.hpp"

namespace hyperseq {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidDimension: return "invalid dimension";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kZeroNorm: return "zero norm";
    case ErrorCode::kDuplicateLabel: return "duplicate label";
    case ErrorCode::kUnknownLabel: return "unknown label";
    case ErrorCode::kEmptyCodebook: return "empty codebook";
    case ErrorCode::kInvalidConfig: return "invalid config";
    case ErrorCode::kWrongArity: return "wrong arity";
    case ErrorCode::kEmptyTraining: return "empty training set";
    case ErrorCode::kAdaptationDisabled: return "adaptation disabled";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kEmptyDataset: return "empty dataset";
    case ErrorCode::kInsufficientUsers: return "insufficient users";
    case ErrorCode::kInsufficientSessions: return "insufficient sessions";
    case ErrorCode::kValidation: return "validation error";
    case ErrorCode::kConvergence: return "convergence error";
    case ErrorCode::kIo: return "i/o error";
  }
  return "error";
}

}  // namespace hyperseq
