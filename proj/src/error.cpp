#include "deepest/error.hpp"

namespace deepest {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ConfidenceOutOfRange: return "ConfidenceOutOfRange";
    case ErrorCode::EmptyPopulation: return "EmptyPopulation";
    case ErrorCode::NonFiniteTrace: return "NonFiniteTrace";
    case ErrorCode::MissingTrace: return "MissingTrace";
    case ErrorCode::RaggedTrace: return "RaggedTrace";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::ReplacementViolation: return "ReplacementViolation";
    case ErrorCode::MissingProbability: return "MissingProbability";
    case ErrorCode::InvalidSuite: return "InvalidSuite";
    case ErrorCode::MissingConfidence: return "MissingConfidence";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingClassReference: return "MissingClassReference";
    case ErrorCode::DegenerateReference: return "DegenerateReference";
    case ErrorCode::AllNeuronsFiltered: return "AllNeuronsFiltered";
    case ErrorCode::InsufficientReference: return "InsufficientReference";
    case ErrorCode::DegenerateBandwidth: return "DegenerateBandwidth";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::UnscoredId: return "UnscoredId";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::AlreadySelected: return "AlreadySelected";
    case ErrorCode::Unlabelled: return "Unlabelled";
    case ErrorCode::OutOfOrder: return "OutOfOrder";
    case ErrorCode::InvalidProbability: return "InvalidProbability";
    case ErrorCode::SingleClassOutcomes: return "SingleClassOutcomes";
    case ErrorCode::InfeasibleConfig: return "InfeasibleConfig";
    case ErrorCode::NonConvergence: return "NonConvergence";
  }
  return "Unknown";
}

namespace {
std::string format_message(ErrorCode code, const std::string& message,
                           std::optional<std::size_t> line) {
  std::string out(to_string(code));
  if (line) out += " (line " + std::to_string(*line) + ")";
  out += ": ";
  out += message;
  return out;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(format_message(code, message, line)), code_(code), line_(line) {}

}  // namespace deepest
