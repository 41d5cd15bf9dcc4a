#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mia {

enum class ErrorCode {
  kValidation,
  kParse,
  kDuplicateId,
  kInsufficientShots,
  kInsufficientSamples,
  kMissingTrace,
  kDegenerateTokenization,
  kCapability,
  kEmptyTokenScores,
  kNonFiniteInput,
  kDegenerateLL,
  kTextMismatch,
  kUnknownSampleId,
  kMissingMemberShots,
  kTransport,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the toolkit. `code()` tells callers (and the CLI
/// exit-code mapping) which failure class occurred.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mia
