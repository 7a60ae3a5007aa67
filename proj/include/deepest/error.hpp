#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace deepest {

enum class ErrorCode {
  // input parsing / core data
  Io,
  MalformedRow,
  DuplicateId,
  ConfidenceOutOfRange,
  EmptyPopulation,
  NonFiniteTrace,
  MissingTrace,
  RaggedTrace,
  SchemaMismatch,
  ReplacementViolation,
  MissingProbability,
  InvalidSuite,
  // auxiliary scores
  MissingConfidence,
  DimensionMismatch,
  MissingClassReference,
  DegenerateReference,
  AllNeuronsFiltered,
  InsufficientReference,
  DegenerateBandwidth,
  IdMismatch,
  UnscoredId,
  // sampling / estimation
  InvalidConfig,
  AlreadySelected,
  Unlabelled,
  OutOfOrder,
  InvalidProbability,
  // harness
  SingleClassOutcomes,
  InfeasibleConfig,
  NonConvergence,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` identifies the failure and
/// `line()` is set for errors raised while parsing a file.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace deepest
