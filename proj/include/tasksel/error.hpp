#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tasksel {

enum class ErrorCode {
  kIo,
  kParse,
  kDuplicateId,
  kShape,
  kValidation,
  kDegenerateProbability,
  kEmptySequence,
  kInsufficientCandidates,
  kMissingConfidence,
  kMissingScore,
  kMissingEmbedding,
  kNoTasks,
  kInvalidBudget,
  kInvalidKernel,
  kRankExhausted,
  kConfig,
  kLimitExceeded,
};

/// Stable name used in CLI messages and manifests, e.g. "DuplicateId".
std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the error-name prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace tasksel
