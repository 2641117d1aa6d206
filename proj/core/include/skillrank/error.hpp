#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace skillrank {

// Every failure raised by the library carries one of these codes. The CLI
// reports the code verbatim in its machine-readable error output.
enum class ErrorCode {
  kMalformedHeader,
  kTruncatedPayload,
  kNonFiniteValue,
  kIo,
  kMissingModality,
  kDimMismatch,
  kDuplicateVideo,
  kInvalidManifest,
  kProtocol,
  kConfiguration,
  kCyclicGraph,
  kSampling,
  kArchitecture,
  kDimensionMismatch,
  kSplitMismatch,
  kTraining,
  kData,
  kEvaluation,
  kOrchestration,
  kMissingVideo,
  kInsufficientPairs,
  kUnknownHit,
  kWrongWorker,
  kValidation,
  kConflict,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised while decoding a feature file. `offset` is the byte offset at which
// decoding failed; `row` is set when the failure is attributable to one row.
class LoadError : public Error {
 public:
  LoadError(ErrorCode code, const std::string& message, std::uint64_t offset,
            std::optional<std::size_t> row = std::nullopt)
      : Error(code, message), offset_(offset), row_(row) {}

  std::uint64_t offset() const noexcept { return offset_; }
  std::optional<std::size_t> row() const noexcept { return row_; }

 private:
  std::uint64_t offset_;
  std::optional<std::size_t> row_;
};

}  // namespace skillrank
