#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "deepest/auxiliary.hpp"
#include "deepest/kernels.hpp"
#include "deepest/types.hpp"

namespace deepest::sampling {

inline constexpr double kDefaultWbsProbability = 0.8;

struct SamplerConfig {
  Technique technique = Technique::Deepest;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double r = kDefaultWbsProbability;
  std::size_t ces_p = 30;
  std::size_t ces_q = 5;
  std::size_t ces_L = 300;
  std::size_t ces_bins = 20;
  double ces_epsilon = 1e-6;
  bool parallel = true;  // CES candidate scoring

  /// Throws InvalidConfig.
  void validate(std::size_t population) const;
};

TestSuite srswr_select(const OperationalDataset& dataset, std::size_t n, std::uint64_t seed);
TestSuite srswor_select(const OperationalDataset& dataset, std::size_t n, std::uint64_t seed);

/// Operational traces binned once for repeated CES runs.
struct CesPopulation {
  kernels::BinnedTraces binned;

  /// Throws MissingTrace when some dataset example has no trace.
  static CesPopulation prepare(const OperationalDataset& dataset, const ActivationTraceSet& traces,
                               std::size_t bins);
};

TestSuite ces_select(const OperationalDataset& dataset, const CesPopulation& population, const SamplerConfig& cfg);
TestSuite ces_select(const OperationalDataset& dataset, const ActivationTraceSet& traces, const SamplerConfig& cfg);

/// Adaptive selection: first unit by SRS, then each step uses weight-based
/// sampling with probability r and SRS otherwise. Records carry the mixture
/// probability of the drawn unit.
TestSuite deepest_select(const OperationalDataset& dataset, const aux::BoundWeights& weights, const SamplerConfig& cfg);
TestSuite deepest_select(const OperationalDataset& dataset, const aux::WeightRule& rule, const SamplerConfig& cfg);

/// Selection probability of every unit at the next step given the units
/// already `selected` (population indices); selected units get 0. Evaluates
/// the weight sums pairwise, without the factorization the sampler uses.
std::vector<double> step_distribution(const aux::BoundWeights& weights, std::span<const std::size_t> selected,
                                      double r);

/// q for one candidate id. Throws AlreadySelected or UnscoredId.
double step_probability(const OperationalDataset& dataset, std::span<const std::string> sample_so_far,
                        const aux::WeightRule& rule, double r, std::string_view candidate);

namespace reference {
/// Straightforward adaptive sampler: O(N k) pairwise weight sums and linear
/// scans per step. Consumes the generator exactly like deepest_select.
TestSuite deepest_select(const OperationalDataset& dataset, const aux::BoundWeights& weights, const SamplerConfig& cfg);
}  // namespace reference

/// Inputs a technique may need beyond the dataset.
struct SelectionContext {
  const aux::BoundWeights* weights = nullptr;  // deepest
  const CesPopulation* ces = nullptr;          // ces
};

/// Dispatches on cfg.technique. Throws InvalidConfig when a required input is missing.
TestSuite select(const OperationalDataset& dataset, const SamplerConfig& cfg, const SelectionContext& context);

}  // namespace deepest::sampling
