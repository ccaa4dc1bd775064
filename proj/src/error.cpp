#include "rprec/error.hpp"

namespace rprec {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kNumericalError: return "NumericalError";
    case ErrorCode::kUnsupportedPenalty: return "UnsupportedPenalty";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kConstantSignal: return "ConstantSignal";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kTruncated: return "Truncated";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace rprec
