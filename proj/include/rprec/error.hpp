#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rprec {

enum class ErrorCode {
  kInvalidInput,
  kRankDeficient,
  kTooLarge,
  kNumericalError,
  kUnsupportedPenalty,
  kDegenerateInput,
  kConstantSignal,
  kParseError,
  kNonFinite,
  kTruncated,
  kIoError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. `index()` carries the offending
/// row/column/node when one exists (zero-based).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<std::int64_t> index = std::nullopt)
      : std::runtime_error(what), code_(code), index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::int64_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::int64_t> index_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what,
                              std::optional<std::int64_t> index = std::nullopt) {
  throw Error(code, what, index);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace rprec
