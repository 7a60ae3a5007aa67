#include "deepest/estimators.hpp"

#include <algorithm>

#include "deepest/error.hpp"

namespace deepest::estimate {
namespace {

int outcome_of(const SelectionRecord& r) {
  if (!r.outcome) throw Error(ErrorCode::Unlabelled, "record at step " + std::to_string(r.step) + " has no outcome");
  return *r.outcome;
}

void finish(EstimateReport& report, double raw) {
  report.theta_hat_raw = raw;
  report.theta_hat = std::clamp(raw, 0.0, 1.0);
  report.clamped = report.theta_hat != raw;
}

}  // namespace

EstimateReport srs_estimate(const TestSuite& suite) {
  if (suite.technique == Technique::Deepest) {
    throw Error(ErrorCode::InvalidConfig, "adaptive suites need the Hansen-Hurwitz estimator");
  }
  if (suite.records.empty()) throw Error(ErrorCode::InvalidSuite, "empty suite");
  EstimateReport report;
  report.n = suite.records.size();
  for (const auto& r : suite.records) report.phi += static_cast<std::size_t>(outcome_of(r));
  finish(report, static_cast<double>(report.n - report.phi) / static_cast<double>(report.n));
  return report;
}

double var_srswr(double theta, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidConfig, "n must be at least 1");
  return theta * (1.0 - theta) / static_cast<double>(n);
}

double var_srswor(double theta, std::size_t n, std::size_t N) {
  if (N < 2) throw Error(ErrorCode::InvalidConfig, "finite-population variance needs N >= 2");
  if (n == 0 || n > N) throw Error(ErrorCode::InvalidConfig, "need 1 <= n <= N");
  const double fpc = static_cast<double>(N - n) / static_cast<double>(N - 1);
  return fpc * theta * (1.0 - theta) / static_cast<double>(n);
}

double hh_step(std::span<const int> prior_outcomes, int y, double q, std::size_t N) {
  if (!(q > 0.0)) throw Error(ErrorCode::InvalidProbability, "selection probability must be positive");
  if (N == 0) throw Error(ErrorCode::InvalidConfig, "population size must be positive");
  double prior = 0.0;
  for (int v : prior_outcomes) prior += v;
  return (prior + y / q) / static_cast<double>(N);
}

EstimateReport deepest_estimate(const TestSuite& suite) {
  if (suite.technique != Technique::Deepest) {
    throw Error(ErrorCode::InvalidConfig, "Hansen-Hurwitz estimate needs an adaptive suite");
  }
  if (suite.records.empty()) throw Error(ErrorCode::InvalidSuite, "empty suite");
  if (suite.population == 0) throw Error(ErrorCode::InvalidSuite, "suite has no population size");
  EstimateReport report;
  report.n = suite.records.size();
  std::vector<int> outcomes;
  outcomes.reserve(report.n);
  std::size_t prev_step = 0;
  double prior = 0.0;  // running sum of earlier outcomes
  for (const auto& r : suite.records) {
    if (r.step <= prev_step) throw Error(ErrorCode::OutOfOrder, "steps not strictly increasing");
    prev_step = r.step;
    if (!(r.q > 0.0 && r.q <= 1.0)) throw Error(ErrorCode::MissingProbability, "record at step " + std::to_string(r.step) + " lacks a valid q");
    const int y = outcome_of(r);
    if (!outcomes.empty()) {
      report.z_series.push_back((prior + y / r.q) / static_cast<double>(suite.population));
    }
    outcomes.push_back(y);
    prior += y;
    report.phi += static_cast<std::size_t>(y);
  }
  double total = outcomes.front();
  for (double z : report.z_series) total += z;
  finish(report, 1.0 - total / static_cast<double>(report.n));
  return report;
}

EstimateReport estimate(const TestSuite& suite) {
  return suite.technique == Technique::Deepest ? deepest_estimate(suite) : srs_estimate(suite);
}

}  // namespace deepest::estimate
