#include "deepest/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>

#include <boost/math/special_functions/erf.hpp>

#include "deepest/error.hpp"
#include "deepest/estimators.hpp"
#include "deepest/rng.hpp"

namespace deepest::harness {

double mean_squared_error(std::span<const double> estimates, double theta) {
  if (estimates.empty()) return 0.0;
  double s = 0.0;
  for (double e : estimates) s += (e - theta) * (e - theta);
  return s / static_cast<double>(estimates.size());
}

ExperimentReport make_report(std::string technique, std::size_t n, std::uint64_t base_seed, double theta_true,
                             std::vector<double> theta_hats, std::vector<std::size_t> phis) {
  ExperimentReport report;
  report.technique = std::move(technique);
  report.n = n;
  report.repetitions = theta_hats.size();
  report.base_seed = base_seed;
  report.theta_true = theta_true;
  report.mse = mean_squared_error(theta_hats, theta_true);
  const double R = static_cast<double>(phis.size());
  if (!phis.empty()) {
    double sum = 0.0;
    for (auto p : phis) sum += static_cast<double>(p);
    report.mean_phi = sum / R;
    double ss = 0.0;
    for (auto p : phis) ss += (static_cast<double>(p) - report.mean_phi) * (static_cast<double>(p) - report.mean_phi);
    report.std_phi = phis.size() > 1 ? std::sqrt(ss / (R - 1.0)) : 0.0;
  }
  report.theta_hats = std::move(theta_hats);
  report.phis = std::move(phis);
  return report;
}

ExperimentReport run_experiment(const OperationalDataset& population, const TechniqueSpec& spec, std::size_t n,
                                std::size_t repetitions, std::uint64_t base_seed, bool use_clamped) {
  if (!population.fully_labelled()) {
    for (const auto& e : population.examples()) {
      if (!e.labelled()) throw Error(ErrorCode::Unlabelled, "example '" + e.id + "' has no true label");
    }
  }
  if (repetitions == 0) throw Error(ErrorCode::InvalidConfig, "need at least one repetition");
  sampling::SamplerConfig base = spec.cfg;
  base.n = n;
  base.validate(population.size());
  const sampling::SelectionContext context{spec.weights, spec.ces};

  std::vector<double> estimates(repetitions);
  std::vector<std::size_t> phis(repetitions);
  std::exception_ptr failure;
  const auto R = static_cast<std::ptrdiff_t>(repetitions);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t rep = 0; rep < R; ++rep) {
    try {
      sampling::SamplerConfig cfg = base;
      cfg.seed = repetition_seed(base_seed, static_cast<std::uint64_t>(rep));
      cfg.parallel = false;  // parallelism is across repetitions here
      const auto suite = sampling::select(population, cfg, context).labelled_from(population);
      const auto est = estimate::estimate(suite);
      const auto k = static_cast<std::size_t>(rep);
      estimates[k] = use_clamped ? est.theta_hat : est.theta_hat_raw;
      phis[k] = est.phi;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  auto report = make_report(spec.label, n, base_seed, population.accuracy(), std::move(estimates), std::move(phis));
  report.clamped_estimates = use_clamped;
  return report;
}

PairwiseComparison compare(const ExperimentReport& a, const ExperimentReport& b) {
  PairwiseComparison c;
  c.a = a.technique;
  c.b = b.technique;
  if (b.mean_phi != 0.0) c.rho = a.mean_phi / b.mean_phi;
  if (a.mse != 0.0) c.pi = b.mse / a.mse;
  return c;
}

// ---------------------------------------------------------------- logistic regression

LogisticFit fit_logistic(std::span<const double> x, std::span<const int> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidConfig, "x and y differ in length");
  if (x.empty()) throw Error(ErrorCode::InvalidConfig, "no observations");
  double max0 = -INFINITY, min0 = INFINITY, max1 = -INFINITY, min1 = INFINITY;
  std::size_t ones = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw Error(ErrorCode::InvalidConfig, "outcomes must be 0 or 1");
    if (!std::isfinite(x[i])) throw Error(ErrorCode::InvalidConfig, "non-finite covariate");
    if (y[i] == 1) {
      ++ones;
      max1 = std::max(max1, x[i]);
      min1 = std::min(min1, x[i]);
    } else {
      max0 = std::max(max0, x[i]);
      min0 = std::min(min0, x[i]);
    }
  }
  if (ones == 0 || ones == x.size()) throw Error(ErrorCode::SingleClassOutcomes, "both outcome classes are required");
  if (std::min(min0, min1) == std::max(max0, max1)) {
    throw Error(ErrorCode::InvalidConfig, "need at least two distinct covariate values");
  }

  LogisticFit fit;
  fit.separated = max0 <= min1 || max1 <= min0;
  double b0 = 0.0, b1 = 0.0;
  double h00 = 0.0, h01 = 0.0, h11 = 0.0;
  for (std::size_t iter = 1; iter <= 100; ++iter) {
    double g0 = 0.0, g1 = 0.0;
    h00 = h01 = h11 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-(b0 + b1 * x[i])));
      const double w = p * (1.0 - p);
      const double resid = y[i] - p;
      g0 += resid;
      g1 += resid * x[i];
      h00 += w;
      h01 += w * x[i];
      h11 += w * x[i] * x[i];
    }
    const double det = h00 * h11 - h01 * h01;
    fit.iterations = iter;
    if (!(det > 0.0) || !std::isfinite(det)) break;
    const double d0 = (h11 * g0 - h01 * g1) / det;
    const double d1 = (h00 * g1 - h01 * g0) / det;
    b0 += d0;
    b1 += d1;
    if (std::max(std::abs(d0), std::abs(d1)) < 1e-8) {
      fit.converged = true;
      break;
    }
  }
  if (fit.separated) fit.converged = false;
  fit.intercept = b0;
  fit.slope = b1;
  const double det = h00 * h11 - h01 * h01;
  if (det > 0.0) {
    fit.se_intercept = std::sqrt(h11 / det);
    fit.se_slope = std::sqrt(h00 / det);
  }
  return fit;
}

double roc_auc(std::span<const double> scores, std::span<const int> positive) {
  if (scores.size() != positive.size()) throw Error(ErrorCode::InvalidConfig, "scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1 .. j
    for (std::size_t t = i; t < j; ++t) {
      if (positive[order[t]]) {
        rank_sum += mid_rank;
        ++pos;
      }
    }
    i = j;
  }
  const std::size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorCode::SingleClassOutcomes, "AUC needs both classes");
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

// ---------------------------------------------------------------- synthetic populations

void SynthConfig::validate() const {
  if (N == 0) throw Error(ErrorCode::InfeasibleConfig, "N must be positive");
  if (!(theta_true > 0.0 && theta_true <= 1.0)) throw Error(ErrorCode::InfeasibleConfig, "theta_true must lie in (0,1]");
  if (!(aux_auc >= 0.5 && aux_auc <= 1.0)) throw Error(ErrorCode::InfeasibleConfig, "aux_auc must lie in [0.5,1]");
  if (trace_dim == 0) throw Error(ErrorCode::InfeasibleConfig, "trace_dim must be positive");
  if (classes < 2) throw Error(ErrorCode::InfeasibleConfig, "need at least two classes");
  if (training_per_class < 2) throw Error(ErrorCode::InfeasibleConfig, "need at least two training traces per class");
  const auto failures = static_cast<std::size_t>(std::llround(static_cast<double>(N) * (1.0 - theta_true)));
  if (cluster_count > 0 && failures < cluster_count) {
    throw Error(ErrorCode::InfeasibleConfig, "fewer failing examples than clusters");
  }
}

namespace {

constexpr double kClassSpread = 4.0;
constexpr double kClusterSpread = 8.0;
constexpr double kClusterNoise = 0.5;
// Confidence = 1 / (1 + exp(kSlope * (latent - kShift))): passing examples
// (latent ~ N(0,1)) mostly land above 0.9.
constexpr double kSlope = 1.5;
constexpr double kShift = 2.3;

std::string op_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "op-%06zu", i);
  return buf;
}

std::string tr_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "tr-%06zu", i);
  return buf;
}

std::vector<double> random_centers(Rng& rng, std::size_t count, std::size_t dim, double spread) {
  std::vector<double> centers(count * dim);
  for (double& c : centers) c = spread * rng.normal();
  return centers;
}

// Swaps confidences of discordant (or concordant) failing/passing pairs until
// the AUC of (1 - confidence) is within `tolerance` of `target`.
void calibrate_auc(std::vector<double>& confidence, const std::vector<int>& failing, double target, double tolerance,
                   Rng& rng) {
  std::vector<std::size_t> fails, passes;
  for (std::size_t i = 0; i < failing.size(); ++i) (failing[i] ? fails : passes).push_back(i);
  if (fails.empty() || passes.empty()) return;
  auto auc = [&] {
    std::vector<double> belief(confidence.size());
    for (std::size_t i = 0; i < belief.size(); ++i) belief[i] = 1.0 - confidence[i];
    return roc_auc(belief, failing);
  };
  double current = auc();
  for (std::size_t iter = 0; iter < 100000 && std::abs(current - target) > tolerance; ++iter) {
    const bool raise = current < target;
    bool swapped = false;
    for (int attempt = 0; attempt < 1000 && !swapped; ++attempt) {
      const std::size_t f = fails[rng.index(fails.size())];
      const std::size_t p = passes[rng.index(passes.size())];
      // raising the AUC needs a failing example that currently looks safer than a passing one
      if (raise ? confidence[f] > confidence[p] : confidence[f] < confidence[p]) {
        std::swap(confidence[f], confidence[p]);
        swapped = true;
      }
    }
    if (!swapped) break;
    current = auc();
  }
}

}  // namespace

SyntheticPopulation generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const std::size_t N = cfg.N;
  const std::size_t m = cfg.trace_dim;
  const auto failures = static_cast<std::size_t>(std::llround(static_cast<double>(N) * (1.0 - cfg.theta_true)));

  // Failing subset by partial Fisher-Yates.
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < failures; ++i) std::swap(order[i], order[i + rng.index(N - i)]);
  std::vector<int> failing(N, 0);
  std::vector<std::size_t> cluster_of(N, 0);
  for (std::size_t i = 0; i < failures; ++i) {
    failing[order[i]] = 1;
    if (cfg.cluster_count > 0) cluster_of[order[i]] = i % cfg.cluster_count;
  }

  const auto class_centers = random_centers(rng, cfg.classes, m, kClassSpread);
  const auto cluster_centers = random_centers(rng, cfg.cluster_count, m, kClusterSpread);

  std::vector<Example> examples(N);
  std::vector<std::string> ids(N);
  std::vector<double> rows(N * m);
  for (std::size_t i = 0; i < N; ++i) {
    Example& e = examples[i];
    e.id = ids[i] = op_id(i);
    const auto cls = static_cast<ClassLabel>(rng.index(cfg.classes));
    e.predicted_label = cls;
    if (failing[i]) {
      e.true_label = static_cast<ClassLabel>((static_cast<std::size_t>(cls) + 1 + rng.index(cfg.classes - 1)) % cfg.classes);
    } else {
      e.true_label = cls;
    }
    e.trace_ref = i;
    const bool clustered = failing[i] && cfg.cluster_count > 0;
    const double* center = clustered ? &cluster_centers[cluster_of[i] * m] : &class_centers[static_cast<std::size_t>(cls) * m];
    const double noise = clustered ? kClusterNoise : 1.0;
    for (std::size_t d = 0; d < m; ++d) rows[i * m + d] = center[d] + noise * rng.normal();
  }

  // Binormal latent score: failing shifted by d gives AUC = Phi(d / sqrt 2).
  const double auc = std::min(cfg.aux_auc, 0.999);
  const double shift = 2.0 * boost::math::erf_inv(2.0 * auc - 1.0);  // sqrt2 * Phi^-1(auc)
  std::vector<double> confidence(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double latent = (failing[i] ? shift : 0.0) + rng.normal();
    confidence[i] = 1.0 / (1.0 + std::exp(kSlope * (latent - kShift)));
  }
  calibrate_auc(confidence, failing, cfg.aux_auc, cfg.auc_tolerance / 4.0, rng);
  if (failures > 0 && failures < N) {
    std::vector<double> belief(N);
    for (std::size_t i = 0; i < N; ++i) belief[i] = 1.0 - confidence[i];
    if (std::abs(roc_auc(belief, failing) - cfg.aux_auc) > cfg.auc_tolerance) {
      throw Error(ErrorCode::InfeasibleConfig, "could not calibrate confidence to the requested AUC");
    }
  }
  for (std::size_t i = 0; i < N; ++i) examples[i].confidence = confidence[i];

  std::vector<std::string> train_ids;
  std::vector<double> train_rows;
  std::vector<ClassLabel> train_class;
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    for (std::size_t t = 0; t < cfg.training_per_class; ++t) {
      train_ids.push_back(tr_id(train_ids.size()));
      train_class.push_back(static_cast<ClassLabel>(c));
      for (std::size_t d = 0; d < m; ++d) train_rows.push_back(class_centers[c * m + d] + rng.normal());
    }
  }

  return {OperationalDataset(std::move(examples)), ActivationTraceSet(m, std::move(ids), std::move(rows)),
          TrainingReference(ActivationTraceSet(m, std::move(train_ids), std::move(train_rows)), std::move(train_class))};
}

}  // namespace deepest::harness
