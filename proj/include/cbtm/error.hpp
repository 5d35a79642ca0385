#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cbtm {

enum class ErrorCode {
  kIo,
  kMalformedHeader,
  kTruncated,
  kTrailingData,
  kDimensionMismatch,
  kNonFinite,
  kDuplicateLabel,
  kMissingEmbedding,
  kEmptyInput,
  kValidation,
  kInvalidArgument,
  kNumerical,
  kStaleCache,
  kLocked,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; the code lets callers (and the CLI's
// exit-code mapping) distinguish input problems from computation failures.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures caused by bad or missing user input.
  bool is_input_error() const noexcept {
    return code_ != ErrorCode::kNumerical;
  }

 private:
  ErrorCode code_;
};

}  // namespace cbtm
