#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deepest/auxiliary.hpp"
#include "deepest/samplers.hpp"
#include "deepest/types.hpp"

namespace deepest::harness {

inline constexpr std::size_t kDefaultRepetitions = 30;
inline constexpr std::size_t kDefaultSuiteSize = 200;

/// A technique as run by the harness: sampler settings plus the inputs it needs.
/// `cfg.n` and `cfg.seed` are overwritten per repetition.
struct TechniqueSpec {
  std::string label;
  sampling::SamplerConfig cfg;
  const aux::BoundWeights* weights = nullptr;
  const sampling::CesPopulation* ces = nullptr;
};

struct ExperimentReport {
  std::string technique;
  std::size_t n = 0;
  std::size_t repetitions = 0;
  std::uint64_t base_seed = 0;
  double theta_true = 0.0;
  bool clamped_estimates = false;  // MSE over clamped rather than raw estimates
  double mse = 0.0;
  double mean_phi = 0.0;
  double std_phi = 0.0;  // sample standard deviation over repetitions
  std::vector<double> theta_hats;
  std::vector<std::size_t> phis;
};

double mean_squared_error(std::span<const double> estimates, double theta);

/// R suites from seeds base_seed .. base_seed + R - 1, labelled from the
/// population's ground truth and estimated. Repetitions run in parallel;
/// the report does not depend on the thread count.
ExperimentReport run_experiment(const OperationalDataset& population, const TechniqueSpec& spec, std::size_t n,
                                std::size_t repetitions, std::uint64_t base_seed, bool use_clamped = false);

/// Builds a report from per-repetition results.
ExperimentReport make_report(std::string technique, std::size_t n, std::uint64_t base_seed, double theta_true,
                             std::vector<double> theta_hats, std::vector<std::size_t> phis);

struct PairwiseComparison {
  std::string a;
  std::string b;
  std::optional<double> rho;  // mean_phi_a / mean_phi_b; empty when undefined
  std::optional<double> pi;   // mse_b / mse_a; empty when undefined
};

PairwiseComparison compare(const ExperimentReport& a, const ExperimentReport& b);

struct LogisticFit {
  double intercept = 0.0;
  double slope = 0.0;
  double se_intercept = 0.0;
  double se_slope = 0.0;
  bool converged = false;
  bool separated = false;  // perfect or quasi-complete separation: no finite MLE
  std::size_t iterations = 0;
};

/// Univariate maximum-likelihood logistic regression by iteratively
/// reweighted least squares. Stops when every parameter moves by < 1e-8 or
/// after 100 iterations. Throws SingleClassOutcomes, InvalidConfig.
LogisticFit fit_logistic(std::span<const double> x, std::span<const int> y);

/// Area under the ROC curve of `scores` for the positives (ties count half).
double roc_auc(std::span<const double> scores, std::span<const int> positive);

struct SynthConfig {
  std::size_t N = 10000;
  double theta_true = 0.95;
  std::size_t cluster_count = 0;
  double aux_auc = 0.9;  // AUC of (1 - confidence) against failure
  std::size_t trace_dim = 8;
  std::uint64_t seed = 0;
  std::size_t classes = 10;
  std::size_t training_per_class = 100;
  double auc_tolerance = 0.02;

  void validate() const;
};

struct SyntheticPopulation {
  OperationalDataset dataset;  // fully labelled
  ActivationTraceSet traces;
  TrainingReference training;
};

/// Population with exactly round(N (1 - theta)) mispredictions. Failing
/// traces sit in `cluster_count` Gaussian clusters away from the per-class
/// background; confidence is calibrated to the requested AUC.
SyntheticPopulation generate_synthetic(const SynthConfig& cfg);

}  // namespace deepest::harness
