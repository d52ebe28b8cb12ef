#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iadet {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidBox,
  kNoPositives,
  kUndefinedRatio,
  kNotFound,
  kIo,
  kParse,
  kAnnotationComplete,
  kAlreadyLabeled,
  kMissingGroundTruth,
  kNonMonotoneVersion,
  kUnknownClass,
  kEmptyEvalSplit,
  kWindowTooLarge,
  kUnavailable,
};

/// Stable machine-readable name, used in HTTP error bodies and CLI output.
std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace iadet
