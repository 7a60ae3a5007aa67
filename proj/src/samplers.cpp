#include "deepest/samplers.hpp"

#include <algorithm>
#include <limits>

#include "deepest/error.hpp"
#include "deepest/index_pool.hpp"
#include "deepest/rng.hpp"

namespace deepest::sampling {
namespace {

TestSuite empty_suite(Technique technique, std::size_t n, std::uint64_t seed, std::size_t population) {
  TestSuite suite;
  suite.technique = technique;
  suite.n = n;
  suite.seed = seed;
  suite.population = population;
  suite.records.reserve(n);
  return suite;
}

void push(TestSuite& suite, const OperationalDataset& dataset, std::size_t index, Scheme scheme, double q) {
  SelectionRecord r;
  r.step = suite.records.size() + 1;
  r.example_id = dataset[index].id;
  r.scheme = scheme;
  r.q = q;
  suite.records.push_back(std::move(r));
}

void check_n(std::size_t n, std::size_t population) {
  if (n == 0) throw Error(ErrorCode::InvalidConfig, "suite size n must be at least 1");
  if (n > population) {
    throw Error(ErrorCode::InvalidConfig,
                "n=" + std::to_string(n) + " exceeds population size N=" + std::to_string(population));
  }
}

void check_weights(const OperationalDataset& dataset, const aux::BoundWeights& weights) {
  if (weights.size() != dataset.size()) {
    throw Error(ErrorCode::UnscoredId, "weights are not bound to this dataset");
  }
}

}  // namespace

void SamplerConfig::validate(std::size_t population) const {
  if (technique == Technique::Srswr) {
    if (n == 0) throw Error(ErrorCode::InvalidConfig, "suite size n must be at least 1");
  } else {
    check_n(n, population);
  }
  if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorCode::InvalidConfig, "r must lie in [0,1]");
  if (ces_p == 0 || ces_q == 0 || ces_L == 0 || ces_bins == 0) {
    throw Error(ErrorCode::InvalidConfig, "CES parameters must be at least 1");
  }
  if (ces_bins > std::numeric_limits<std::uint16_t>::max()) throw Error(ErrorCode::InvalidConfig, "too many CES bins");
  if (technique == Technique::Ces && n < ces_p) {
    throw Error(ErrorCode::InvalidConfig, "CES needs n >= p (n=" + std::to_string(n) + ", p=" + std::to_string(ces_p) + ")");
  }
  if (!(ces_epsilon > 0.0)) throw Error(ErrorCode::InvalidConfig, "CES smoothing must be positive");
}

TestSuite srswr_select(const OperationalDataset& dataset, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::InvalidConfig, "suite size n must be at least 1");
  const std::size_t N = dataset.size();
  Rng rng(seed);
  auto suite = empty_suite(Technique::Srswr, n, seed, N);
  const double q = 1.0 / static_cast<double>(N);
  for (std::size_t k = 0; k < n; ++k) push(suite, dataset, rng.index(N), Scheme::Srs, q);
  return suite;
}

TestSuite srswor_select(const OperationalDataset& dataset, std::size_t n, std::uint64_t seed) {
  const std::size_t N = dataset.size();
  check_n(n, N);
  Rng rng(seed);
  IndexPool pool(N);
  auto suite = empty_suite(Technique::Srswor, n, seed, N);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t remaining = pool.remaining();
    const std::size_t i = pool.nth(rng.index(remaining));
    pool.remove(i);
    push(suite, dataset, i, Scheme::Srs, 1.0 / static_cast<double>(remaining));
  }
  return suite;
}

// ---------------------------------------------------------------- CES

CesPopulation CesPopulation::prepare(const OperationalDataset& dataset, const ActivationTraceSet& traces,
                                     std::size_t bins) {
  if (bins == 0 || bins > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::InvalidConfig, "CES bins out of range");
  }
  std::vector<double> rows;
  rows.reserve(dataset.size() * traces.dim());
  for (const auto& e : dataset.examples()) {
    const auto r = traces.find(e.id);
    if (!r) throw Error(ErrorCode::MissingTrace, "no trace for '" + e.id + "'");
    const auto row = traces.row(*r);
    rows.insert(rows.end(), row.begin(), row.end());
  }
  return {kernels::BinnedTraces::build({rows, traces.dim()}, bins)};
}

TestSuite ces_select(const OperationalDataset& dataset, const ActivationTraceSet& traces, const SamplerConfig& cfg) {
  return ces_select(dataset, CesPopulation::prepare(dataset, traces, cfg.ces_bins), cfg);
}

TestSuite ces_select(const OperationalDataset& dataset, const CesPopulation& population, const SamplerConfig& cfg) {
  SamplerConfig checked = cfg;
  checked.technique = Technique::Ces;
  checked.validate(dataset.size());
  const auto& binned = population.binned;
  if (binned.rows != dataset.size() || binned.bins != cfg.ces_bins) {
    throw Error(ErrorCode::InvalidConfig, "CES population was prepared for a different dataset or bin count");
  }
  const std::size_t N = dataset.size();
  Rng rng(cfg.seed);
  IndexPool pool(N);
  auto suite = empty_suite(Technique::Ces, cfg.n, cfg.seed, N);
  std::vector<std::uint32_t> counts(binned.neurons * binned.bins, 0);

  auto take = [&](std::size_t i) {
    push(suite, dataset, i, Scheme::Srs, 1.0 / static_cast<double>(pool.remaining()));
    pool.remove(i);
    for (std::size_t j = 0; j < binned.neurons; ++j) ++counts[j * binned.bins + binned.bin_of[i * binned.neurons + j]];
  };

  for (std::size_t k = 0; k < cfg.ces_p; ++k) take(pool.nth(rng.index(pool.remaining())));

  std::vector<std::size_t> candidates;
  std::vector<std::size_t> ranks;
  while (suite.records.size() < cfg.n) {
    const std::size_t group = std::min(cfg.ces_q, cfg.n - suite.records.size());
    const std::size_t remaining = pool.remaining();
    candidates.clear();
    for (std::size_t l = 0; l < cfg.ces_L; ++l) {
      ranks.clear();
      while (ranks.size() < group) {
        const std::size_t rank = rng.index(remaining);
        if (std::find(ranks.begin(), ranks.end(), rank) == ranks.end()) ranks.push_back(rank);
      }
      for (std::size_t rank : ranks) candidates.push_back(pool.nth(rank));
    }
    const auto scores =
        cfg.parallel ? kernels::parallel::ces_cross_entropy(binned, counts, suite.records.size(), candidates, group,
                                                            cfg.ces_epsilon)
                     : kernels::serial::ces_cross_entropy(binned, counts, suite.records.size(), candidates, group,
                                                          cfg.ces_epsilon);
    const auto best = static_cast<std::size_t>(std::min_element(scores.begin(), scores.end()) - scores.begin());
    for (std::size_t t = 0; t < group; ++t) take(candidates[best * group + t]);
  }
  return suite;
}

// ---------------------------------------------------------------- DeepEST

TestSuite deepest_select(const OperationalDataset& dataset, const aux::WeightRule& rule, const SamplerConfig& cfg) {
  return deepest_select(dataset, rule.bind(dataset), cfg);
}

TestSuite deepest_select(const OperationalDataset& dataset, const aux::BoundWeights& weights, const SamplerConfig& cfg) {
  const std::size_t N = dataset.size();
  SamplerConfig checked = cfg;
  checked.technique = Technique::Deepest;
  checked.validate(N);
  check_weights(dataset, weights);

  Rng rng(cfg.seed);
  IndexPool pool(N);
  std::vector<std::uint8_t> selected(N, 0);
  auto suite = empty_suite(Technique::Deepest, cfg.n, cfg.seed, N);
  // Sum over the sample of selected_factor(j); weight sums are candidate_factor(i) * level.
  double level = 0.0;

  auto take = [&](std::size_t i, Scheme scheme, double q) {
    push(suite, dataset, i, scheme, q);
    pool.remove(i);
    selected[i] = 1;
    level += weights.selected_factor(i);
  };

  take(pool.nth(rng.index(N)), Scheme::FirstSrs, 1.0 / static_cast<double>(N));

  for (std::size_t k = 2; k <= cfg.n; ++k) {
    const std::size_t remaining = pool.remaining();
    const double srs_q = 1.0 / static_cast<double>(remaining);
    double mass = 0.0;  // sum of candidate factors over the unselected pool
    if (level > 0.0) {
      for (std::size_t h = 0; h < N; ++h) {
        if (!selected[h]) mass += weights.candidate_factor(h);
      }
    }
    const bool weighted = level > 0.0 && mass > 0.0;

    const double u = rng.uniform();
    std::size_t pick = 0;
    Scheme scheme = Scheme::Srs;
    if (u < cfg.r && weighted) {
      const double target = rng.uniform() * mass;
      double cumulative = 0.0;
      std::size_t last_positive = N;
      pick = N;
      for (std::size_t h = 0; h < N; ++h) {
        if (selected[h]) continue;
        const double f = weights.candidate_factor(h);
        if (f <= 0.0) continue;
        last_positive = h;
        cumulative += f;
        if (cumulative > target) {
          pick = h;
          break;
        }
      }
      if (pick == N) pick = last_positive;  // target rounded past the final sum
      scheme = Scheme::Wbs;
    } else {
      pick = pool.nth(rng.index(remaining));
    }
    const double q = weighted ? cfg.r * weights.candidate_factor(pick) / mass + (1.0 - cfg.r) * srs_q : srs_q;
    take(pick, scheme, q);
  }
  return suite;
}

std::vector<double> step_distribution(const aux::BoundWeights& weights, std::span<const std::size_t> selected,
                                      double r) {
  const std::size_t N = weights.size();
  std::vector<std::uint8_t> in_sample(N, 0);
  for (std::size_t j : selected) in_sample[j] = 1;
  const std::size_t remaining = N - selected.size();
  std::vector<double> sums(N, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    if (in_sample[i]) continue;
    for (std::size_t j : selected) sums[i] += weights.weight(j, i);
    total += sums[i];
  }
  std::vector<double> q(N, 0.0);
  const double srs_q = 1.0 / static_cast<double>(remaining);
  for (std::size_t i = 0; i < N; ++i) {
    if (in_sample[i]) continue;
    q[i] = total > 0.0 ? r * sums[i] / total + (1.0 - r) * srs_q : srs_q;
  }
  return q;
}

double step_probability(const OperationalDataset& dataset, std::span<const std::string> sample_so_far,
                        const aux::WeightRule& rule, double r, std::string_view candidate) {
  const auto weights = rule.bind(dataset);
  std::vector<std::size_t> selected;
  selected.reserve(sample_so_far.size());
  for (const auto& id : sample_so_far) selected.push_back(dataset.index_of(id));
  const std::size_t c = dataset.index_of(candidate);
  if (std::find(selected.begin(), selected.end(), c) != selected.end()) {
    throw Error(ErrorCode::AlreadySelected, "candidate '" + std::string(candidate) + "' is already in the sample");
  }
  return step_distribution(weights, selected, r)[c];
}

namespace reference {

TestSuite deepest_select(const OperationalDataset& dataset, const aux::BoundWeights& weights, const SamplerConfig& cfg) {
  const std::size_t N = dataset.size();
  check_n(cfg.n, N);
  check_weights(dataset, weights);
  Rng rng(cfg.seed);
  std::vector<std::uint8_t> in_sample(N, 0);
  std::vector<std::size_t> sample;
  auto suite = empty_suite(Technique::Deepest, cfg.n, cfg.seed, N);

  auto nth_unselected = [&](std::size_t rank) {
    for (std::size_t h = 0; h < N; ++h) {
      if (in_sample[h]) continue;
      if (rank == 0) return h;
      --rank;
    }
    return N;
  };
  auto take = [&](std::size_t i, Scheme scheme, double q) {
    push(suite, dataset, i, scheme, q);
    in_sample[i] = 1;
    sample.push_back(i);
  };

  take(nth_unselected(rng.index(N)), Scheme::FirstSrs, 1.0 / static_cast<double>(N));
  for (std::size_t k = 2; k <= cfg.n; ++k) {
    const std::size_t remaining = N - sample.size();
    std::vector<double> sums(N, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      if (in_sample[i]) continue;
      for (std::size_t j : sample) sums[i] += weights.weight(j, i);
      total += sums[i];
    }
    const double u = rng.uniform();
    std::size_t pick = N;
    Scheme scheme = Scheme::Srs;
    if (u < cfg.r && total > 0.0) {
      const double target = rng.uniform() * total;
      double cumulative = 0.0;
      for (std::size_t i = 0; i < N && pick == N; ++i) {
        if (in_sample[i] || sums[i] <= 0.0) continue;
        cumulative += sums[i];
        if (cumulative > target) pick = i;
      }
      if (pick == N) {
        for (std::size_t i = N; i-- > 0;) {
          if (!in_sample[i] && sums[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
      scheme = Scheme::Wbs;
    } else {
      pick = nth_unselected(rng.index(remaining));
    }
    const double srs_q = 1.0 / static_cast<double>(remaining);
    const double q = total > 0.0 ? cfg.r * sums[pick] / total + (1.0 - cfg.r) * srs_q : srs_q;
    take(pick, scheme, q);
  }
  return suite;
}

}  // namespace reference

TestSuite select(const OperationalDataset& dataset, const SamplerConfig& cfg, const SelectionContext& context) {
  cfg.validate(dataset.size());
  switch (cfg.technique) {
    case Technique::Srswr: return srswr_select(dataset, cfg.n, cfg.seed);
    case Technique::Srswor: return srswor_select(dataset, cfg.n, cfg.seed);
    case Technique::Ces:
      if (!context.ces) throw Error(ErrorCode::InvalidConfig, "CES needs operational traces");
      return ces_select(dataset, *context.ces, cfg);
    case Technique::Deepest:
      if (!context.weights) throw Error(ErrorCode::InvalidConfig, "DeepEST needs auxiliary scores");
      return deepest_select(dataset, *context.weights, cfg);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown technique");
}

}  // namespace deepest::sampling
