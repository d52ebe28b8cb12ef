#include "iadet/error.hpp"

namespace iadet {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kInvalidBox: return "invalid_box";
    case ErrorCode::kNoPositives: return "no_positives";
    case ErrorCode::kUndefinedRatio: return "undefined_ratio";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kAnnotationComplete: return "annotation_complete";
    case ErrorCode::kAlreadyLabeled: return "already_labeled";
    case ErrorCode::kMissingGroundTruth: return "missing_ground_truth";
    case ErrorCode::kNonMonotoneVersion: return "non_monotone_version";
    case ErrorCode::kUnknownClass: return "unknown_class";
    case ErrorCode::kEmptyEvalSplit: return "empty_eval_split";
    case ErrorCode::kWindowTooLarge: return "window_too_large";
    case ErrorCode::kUnavailable: return "unavailable";
  }
  return "unknown";
}

}  // namespace iadet
