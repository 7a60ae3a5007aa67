#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "deepest/types.hpp"

namespace deepest::estimate {

struct EstimateReport {
  double theta_hat = 0.0;      // clamped to [0,1]
  double theta_hat_raw = 0.0;  // before clamping
  bool clamped = false;
  std::vector<double> z_series;  // steps 2..n for adaptive suites, empty otherwise
  std::size_t phi = 0;           // records with outcome 1
  std::size_t n = 0;
};

/// Share of correct predictions in a labelled non-adaptive suite.
EstimateReport srs_estimate(const TestSuite& suite);

/// theta (1 - theta) / n.
double var_srswr(double theta, std::size_t n);
/// (N - n) / (N - 1) * theta (1 - theta) / n. Throws InvalidConfig if N < 2.
double var_srswor(double theta, std::size_t n, std::size_t N);

/// Hansen-Hurwitz step estimate of the misprediction probability:
/// (sum of prior outcomes + y / q) / N.
double hh_step(std::span<const int> prior_outcomes, int y, double q, std::size_t N);

/// 1 - (y_1 + sum_k z_k) / n over a labelled adaptive suite.
EstimateReport deepest_estimate(const TestSuite& suite);

/// Dispatches on the suite's technique.
EstimateReport estimate(const TestSuite& suite);

}  // namespace deepest::estimate
