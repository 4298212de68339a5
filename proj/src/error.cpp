#include "surveyeval/error.hpp"

namespace surveyeval {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnpairedGeneratedEntry: return "UnpairedGeneratedEntry";
    case ErrorCode::DecompositionError: return "DecompositionError";
    case ErrorCode::NoHeadings: return "NoHeadings";
    case ErrorCode::DuplicateReferenceKey: return "DuplicateReferenceKey";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::UnparseableVerdict: return "UnparseableVerdict";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::EmptyHumanSide: return "EmptyHumanSide";
    case ErrorCode::EmptySide: return "EmptySide";
    case ErrorCode::CorruptIndex: return "CorruptIndex";
    case ErrorCode::InvalidDepth: return "InvalidDepth";
    case ErrorCode::ScaleMismatch: return "ScaleMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::PipelineOrder: return "PipelineOrder";
    case ErrorCode::VerificationMismatch: return "VerificationMismatch";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ProviderUnavailable:
    case ErrorCode::UnparseableVerdict:
      return 3;
    case ErrorCode::VerificationMismatch:
      return 4;
    default:
      return 2;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace surveyeval
