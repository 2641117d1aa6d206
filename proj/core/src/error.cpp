#include "skillrank/error.hpp"

namespace skillrank {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedHeader: return "malformed_header";
    case ErrorCode::kTruncatedPayload: return "truncated_payload";
    case ErrorCode::kNonFiniteValue: return "non_finite_value";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kMissingModality: return "missing_modality";
    case ErrorCode::kDimMismatch: return "dim_mismatch";
    case ErrorCode::kDuplicateVideo: return "duplicate_video";
    case ErrorCode::kInvalidManifest: return "invalid_manifest";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kConfiguration: return "configuration";
    case ErrorCode::kCyclicGraph: return "cyclic_graph";
    case ErrorCode::kSampling: return "sampling";
    case ErrorCode::kArchitecture: return "architecture";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kSplitMismatch: return "split_mismatch";
    case ErrorCode::kTraining: return "training";
    case ErrorCode::kData: return "data";
    case ErrorCode::kEvaluation: return "evaluation";
    case ErrorCode::kOrchestration: return "orchestration";
    case ErrorCode::kMissingVideo: return "missing_video";
    case ErrorCode::kInsufficientPairs: return "insufficient_pairs";
    case ErrorCode::kUnknownHit: return "unknown_hit";
    case ErrorCode::kWrongWorker: return "wrong_worker";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kConflict: return "conflict";
  }
  return "unknown";
}

}  // namespace skillrank
