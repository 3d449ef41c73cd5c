#pragma once

#include <stdexcept>
#include <string>

namespace hyperseq {

enum class ErrorCode {
  kInvalidDimension,
  kDimensionMismatch,
  kZeroNorm,
  kDuplicateLabel,
  kUnknownLabel,
  kEmptyCodebook,
  kInvalidConfig,
  kWrongArity,
  kEmptyTraining,
  kAdaptationDisabled,
  kFormat,
  kParse,
  kEmptyDataset,
  kInsufficientUsers,
  kInsufficientSessions,
  kValidation,
  kConvergence,
  kIo,
};

const char* to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hyperseq
