#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace surveyeval {

enum class ErrorCode {
  MissingFile,
  MalformedManifest,
  DuplicateId,
  UnpairedGeneratedEntry,
  DecompositionError,
  NoHeadings,
  DuplicateReferenceKey,
  PreconditionViolation,
  ProviderUnavailable,
  UnparseableVerdict,
  DimensionMismatch,
  ZeroVector,
  EmptyHumanSide,
  EmptySide,
  CorruptIndex,
  InvalidDepth,
  ScaleMismatch,
  InvalidConfig,
  PipelineOrder,
  VerificationMismatch,
};

std::string_view to_string(ErrorCode code);

// Process exit status for a given error: 2 validation, 3 provider, 4 verification.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Non-fatal findings accumulated while processing one survey.
using Diagnostics = std::vector<std::string>;

inline void note(Diagnostics* diag, std::string message) {
  if (diag != nullptr) diag->push_back(std::move(message));
}

}  // namespace surveyeval
