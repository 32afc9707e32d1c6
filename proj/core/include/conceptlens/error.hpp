#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace conceptlens {

enum class ErrorCode {
  kMissingFile,
  kHeaderMismatch,
  kNonFiniteValue,
  kDuplicateInstance,
  kIndexGap,
  kEmptySurface,
  kOrphanToken,
  kUnknownLabel,
  kAnnotationMismatch,
  kMalformedInput,
  kUnknownLayer,
  kEmptyAnnotationSet,
  kUnlabeledSentence,
  kDimensionMismatch,
  kKOutOfRange,
  kEmptyConcept,
  kThetaOutOfRange,
  kInstanceSpaceMismatch,
  kProviderUnavailable,
  kProviderProtocolError,
  kMissingUpstreamArtifact,
  kInvalidArgument,
  kIoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code. All library failures are
/// reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace conceptlens
