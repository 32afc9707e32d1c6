#include "conceptlens/error.hpp"

namespace conceptlens {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kHeaderMismatch: return "HeaderMismatch";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kDuplicateInstance: return "DuplicateInstance";
    case ErrorCode::kIndexGap: return "IndexGap";
    case ErrorCode::kEmptySurface: return "EmptySurface";
    case ErrorCode::kOrphanToken: return "OrphanToken";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kAnnotationMismatch: return "AnnotationMismatch";
    case ErrorCode::kMalformedInput: return "MalformedInput";
    case ErrorCode::kUnknownLayer: return "UnknownLayer";
    case ErrorCode::kEmptyAnnotationSet: return "EmptyAnnotationSet";
    case ErrorCode::kUnlabeledSentence: return "UnlabeledSentence";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kKOutOfRange: return "KOutOfRange";
    case ErrorCode::kEmptyConcept: return "EmptyConcept";
    case ErrorCode::kThetaOutOfRange: return "ThetaOutOfRange";
    case ErrorCode::kInstanceSpaceMismatch: return "InstanceSpaceMismatch";
    case ErrorCode::kProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::kProviderProtocolError: return "ProviderProtocolError";
    case ErrorCode::kMissingUpstreamArtifact: return "MissingUpstreamArtifact";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace conceptlens
