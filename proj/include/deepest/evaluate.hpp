#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "deepest/auxiliary.hpp"
#include "deepest/harness.hpp"
#include "deepest/samplers.hpp"

namespace deepest::harness {

/// File-level experiment: what `deepest evaluate` runs.
struct EvaluateOptions {
  std::filesystem::path dataset;
  std::filesystem::path labels;  // optional; dataset true labels are used when empty
  std::filesystem::path traces;  // required for ces
  std::vector<std::filesystem::path> aux;  // score files for deepest-<kind>
  /// srswr, srswor, ces, deepest-confidence, deepest-dsa, deepest-lsa, deepest-combined
  std::vector<std::string> techniques;
  std::size_t n = kDefaultSuiteSize;
  std::size_t repetitions = kDefaultRepetitions;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  sampling::SamplerConfig sampler;  // r and CES parameters
  aux::WeightVariant weight_variant = aux::WeightVariant::GateSelected;
  bool use_clamped = false;
};

/// Runs every technique and writes `<technique>.json` per technique plus
/// `comparison.csv` (A,B,rho,pi over ordered pairs). Output is byte-identical
/// for identical options.
std::vector<ExperimentReport> evaluate(const EvaluateOptions& options);

std::string report_json(const ExperimentReport& report);
std::string comparison_csv(const std::vector<ExperimentReport>& reports);

}  // namespace deepest::harness
