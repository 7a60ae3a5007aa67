// Acceptance suite: one [PASS]/[FAIL] line per criterion, non-zero exit if any fails.
// Runs entirely on synthetic data.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "deepest/auxiliary.hpp"
#include "deepest/error.hpp"
#include "deepest/estimators.hpp"
#include "deepest/harness.hpp"
#include "deepest/io.hpp"
#include "deepest/rng.hpp"
#include "deepest/samplers.hpp"

using namespace deepest;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// Counts exact-to-1e-12 checks and remembers the first miss.
struct Oracle {
  int total = 0;
  int failed = 0;
  std::string first_miss;
  void check(const std::string& what, double got, double want) {
    ++total;
    if (!(std::abs(got - want) <= 1e-12)) {
      if (failed++ == 0) first_miss = fmt("%s: got %.17g want %.17g", what.c_str(), got, want);
    }
  }
  Outcome outcome() const {
    return {failed == 0, failed == 0 ? fmt("%d cases exact to 1e-12", total)
                                     : fmt("%d/%d cases off; first: %s", failed, total, first_miss.c_str())};
  }
};

TestSuite srs_suite(const std::vector<int>& y) {
  TestSuite s;
  s.technique = Technique::Srswor;
  s.n = y.size();
  s.population = 100;
  for (std::size_t k = 0; k < y.size(); ++k) s.records.push_back({k + 1, "e" + std::to_string(k), Scheme::Srs, 0.01, y[k]});
  return s;
}

TestSuite deepest_suite(std::size_t N, const std::vector<int>& y, const std::vector<double>& q) {
  TestSuite s;
  s.technique = Technique::Deepest;
  s.n = y.size();
  s.population = N;
  for (std::size_t k = 0; k < y.size(); ++k) s.records.push_back({k + 1, "e" + std::to_string(k), Scheme::Wbs, q[k], y[k]});
  return s;
}

aux::AuxiliaryScores scores_of(aux::ScoreKind kind, std::vector<double> values, double tau, aux::Direction dir) {
  aux::AuxiliaryScores s;
  s.kind = kind;
  for (std::size_t i = 0; i < values.size(); ++i) s.ids.push_back("e" + std::to_string(i));
  s.values = std::move(values);
  s.tau = tau;
  s.direction = dir;
  return s;
}

OperationalDataset plain_population(std::size_t n) {
  std::vector<Example> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back({"e" + std::to_string(i), 0, 0.9, 0, std::nullopt});
  return OperationalDataset(std::move(v));
}

Outcome a1_estimator_oracles() {
  Oracle o;
  // Proportion estimator.
  o.check("srs 8/10", estimate::srs_estimate(srs_suite({0, 0, 1, 0, 0, 0, 1, 0, 0, 0})).theta_hat, 0.8);
  o.check("srs all correct", estimate::srs_estimate(srs_suite({0, 0, 0, 0})).theta_hat, 1.0);
  o.check("srs all wrong", estimate::srs_estimate(srs_suite({1, 1, 1})).theta_hat, 0.0);
  // Variance with replacement.
  o.check("var_wr 0.5/100", estimate::var_srswr(0.5, 100), 0.0025);
  o.check("var_wr theta=1", estimate::var_srswr(1.0, 100), 0.0);
  o.check("var_wr 0.9905/200", estimate::var_srswr(0.9905, 200), 4.704875e-5);
  // Variance without replacement.
  o.check("var_wor census", estimate::var_srswor(0.6, 50, 50), 0.0);
  o.check("var_wor 1000/100", estimate::var_srswor(0.5, 100, 1000), 0.0025 * 900.0 / 999.0);
  o.check("var_wor n=1", estimate::var_srswor(0.3, 1, 40), 0.21);
  // Combined score P = Pc (1 - Pd); DSA {2, 0, 10} normalizes to {0.2, 0, 1}.
  const auto p = aux::combined_scores(scores_of(aux::ScoreKind::Confidence, {0.9, 0.5, 0.8}, 0.7, aux::Direction::Below),
                                      scores_of(aux::ScoreKind::Dsa, {2.0, 0.0, 10.0}, 5.0, aux::Direction::Above));
  o.check("combined 0.9/0.2", p.values[0], 0.72);
  o.check("combined Pd=0", p.values[1], 0.5);
  o.check("combined Pd=1", p.values[2], 0.0);
  // Mixture selection probability: weights toward b..e = {2,1,0,1} (beliefs proportional), a active.
  const auto d5 = plain_population(5);
  const aux::WeightRule rule(scores_of(aux::ScoreKind::Confidence, {0.5, 0.0, 0.5, 1.0, 0.5}, 0.7, aux::Direction::Below));
  const std::vector<std::string> sel{"e0"};
  o.check("q r=0.8", sampling::step_probability(d5, sel, rule, 0.8, "e1"), 0.45);
  o.check("q r=0", sampling::step_probability(d5, sel, rule, 0.0, "e1"), 0.25);
  const aux::WeightRule single(scores_of(aux::ScoreKind::Confidence, {0.5, 1.0, 0.3, 1.0, 1.0}, 0.7, aux::Direction::Below));
  o.check("q r=1 single active", sampling::step_probability(d5, sel, single, 1.0, "e2"), 1.0);
  // Hansen-Hurwitz step.
  o.check("z 0.25", estimate::hh_step(std::vector<int>{1, 0}, 1, 0.25, 10), 0.5);
  o.check("z no failures", estimate::hh_step(std::vector<int>{0, 0}, 0, 0.4, 10), 0.0);
  o.check("z q=1", estimate::hh_step(std::vector<int>{1, 1, 0}, 1, 1.0, 10), 0.3);
  // Adaptive estimate.
  o.check("theta 0.9", estimate::deepest_estimate(deepest_suite(10, {0, 1, 1}, {0.1, 1.0, 1.0})).theta_hat, 0.9);
  o.check("theta all pass", estimate::deepest_estimate(deepest_suite(10, {0, 0, 0}, {0.1, 0.2, 0.3})).theta_hat, 1.0);
  o.check("theta n=1 fail", estimate::deepest_estimate(deepest_suite(10, {1}, {0.1})).theta_hat, 0.0);
  return o.outcome();
}

harness::SynthConfig a3_config() {
  harness::SynthConfig cfg;
  cfg.N = 10000;
  cfg.theta_true = 0.95;
  cfg.aux_auc = 0.9;
  cfg.cluster_count = 5;
  cfg.seed = 2024;
  return cfg;
}

const harness::SyntheticPopulation& a3_population() {
  static const auto pop = harness::generate_synthetic(a3_config());
  return pop;
}

Outcome a2_normalization() {
  harness::SynthConfig cfg;
  cfg.N = 1000;
  cfg.seed = 77;
  const auto pop = harness::generate_synthetic(cfg);
  double worst = 0.0;
  double worst_q = 0.0;
  std::size_t steps = 0;
  for (auto variant : {aux::WeightVariant::GateSelected, aux::WeightVariant::GateCandidate}) {
    const auto weights = aux::WeightRule(aux::confidence_scores(pop.dataset), variant).bind(pop.dataset);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      sampling::SamplerConfig sc;
      sc.technique = Technique::Deepest;
      sc.n = 50;
      sc.seed = seed;
      const auto suite = sampling::deepest_select(pop.dataset, weights, sc);
      std::vector<std::size_t> selected;
      for (const auto& rec : suite.records) {
        const auto q = sampling::step_distribution(weights, selected, sc.r);
        worst = std::max(worst, std::abs(std::accumulate(q.begin(), q.end(), 0.0) - 1.0));
        const std::size_t i = pop.dataset.index_of(rec.example_id);
        worst_q = std::max(worst_q, std::abs(q[i] - rec.q));
        selected.push_back(i);
        ++steps;
      }
    }
  }
  return {worst <= 1e-9 && worst_q <= 1e-12,
          fmt("%zu steps, max |sum q - 1| = %.3g, max |recorded q - q| = %.3g", steps, worst, worst_q)};
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // sample variance
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(v.size() - 1);
  return m;
}

constexpr std::size_t kBigR = 10000;
constexpr std::size_t kSuite = 200;

harness::ExperimentReport run_technique(Technique t, std::size_t R, std::uint64_t base_seed,
                                        const aux::BoundWeights* weights = nullptr) {
  sampling::SamplerConfig sc;
  sc.technique = t;
  harness::TechniqueSpec spec{std::string(to_string(t)), sc, weights, nullptr};
  return harness::run_experiment(a3_population().dataset, spec, kSuite, R, base_seed);
}

const harness::ExperimentReport& big_run(Technique t) {
  static std::map<Technique, harness::ExperimentReport> cache;
  auto it = cache.find(t);
  if (it != cache.end()) return it->second;
  static const auto weights = aux::WeightRule(aux::confidence_scores(a3_population().dataset)).bind(a3_population().dataset);
  return cache.emplace(t, run_technique(t, kBigR, 1'000'000, t == Technique::Deepest ? &weights : nullptr)).first->second;
}

Outcome a3_unbiasedness() {
  const double theta = a3_population().dataset.accuracy();
  bool pass = true;
  std::string detail = fmt("theta=%.4f", theta);
  for (auto t : {Technique::Deepest, Technique::Srswr, Technique::Srswor}) {
    const auto m = moments(big_run(t).theta_hats);
    const double bound = 4.0 * std::sqrt(m.var) / std::sqrt(static_cast<double>(kBigR));
    const bool ok = std::abs(m.mean - theta) <= bound;
    pass = pass && ok;
    detail += fmt("; %s |bias|=%.2e bound=%.2e", std::string(to_string(t)).c_str(), std::abs(m.mean - theta), bound);
  }
  return {pass, detail};
}

Outcome a4_variance() {
  const double theta = a3_population().dataset.accuracy();
  const std::size_t N = a3_population().dataset.size();
  const double wr = moments(big_run(Technique::Srswr).theta_hats).var;
  const double wor = moments(big_run(Technique::Srswor).theta_hats).var;
  const double wr_expected = estimate::var_srswr(theta, kSuite);
  const double wor_expected = estimate::var_srswor(theta, kSuite, N);
  const double e1 = std::abs(wr - wr_expected) / wr_expected;
  const double e2 = std::abs(wor - wor_expected) / wor_expected;
  return {e1 <= 0.10 && e2 <= 0.10, fmt("srswr %.4e vs %.4e (%.1f%%); srswor %.4e vs %.4e (%.1f%%)", wr, wr_expected,
                                        100 * e1, wor, wor_expected, 100 * e2)};
}

Outcome a5_detection_gain() {
  const auto weights = aux::WeightRule(aux::confidence_scores(a3_population().dataset)).bind(a3_population().dataset);
  const auto deep = run_technique(Technique::Deepest, 100, 5000, &weights);
  const auto srs = run_technique(Technique::Srswor, 100, 5000);
  const double gain = deep.mean_phi / srs.mean_phi;
  return {gain >= 3.0, fmt("mean phi deepest-confidence %.2f, srswor %.2f, gain %.2fx", deep.mean_phi, srs.mean_phi, gain)};
}

Outcome a6_published_ratios() {
  auto with_phi = [](std::string name, double phi) {
    harness::ExperimentReport r;
    r.technique = std::move(name);
    r.mean_phi = phi;
    r.mse = 1.0;
    return r;
  };
  const auto cs_srs = harness::compare(with_phi("CS", 44.57), with_phi("SRS", 1.90));
  const auto ces_c = harness::compare(with_phi("CES", 2.23), with_phi("C", 11.93));
  const bool ok = cs_srs.rho && ces_c.rho && std::abs(*cs_srs.rho - 23.4561) <= 0.01 && std::abs(*ces_c.rho - 0.1872) <= 0.001;
  return {ok, fmt("rho(CS,SRS)=%.4f vs 23.4561; rho(CES,C)=%.5f vs 0.1872", cs_srs.rho.value_or(NAN), ces_c.rho.value_or(NAN))};
}

// Two-sample Kolmogorov-Smirnov at alpha = 0.01.
bool ks_same(std::vector<double> a, std::vector<double> b, double* d_out, double* crit_out) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    const double x = j == b.size() || (i < a.size() && a[i] <= b[j]) ? a[i] : b[j];
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double crit = 1.628 * std::sqrt((na + nb) / (na * nb));
  *d_out = d;
  *crit_out = crit;
  return d <= crit;
}

Outcome a7_degenerate_limits() {
  harness::SynthConfig cfg;
  cfg.N = 1000;
  cfg.seed = 13;
  const auto pop = harness::generate_synthetic(cfg);
  const auto& d = pop.dataset;
  const auto informative = aux::WeightRule(aux::confidence_scores(d)).bind(d);
  auto inactive = informative;
  std::fill(inactive.active.begin(), inactive.active.end(), 0);

  const std::size_t seeds = 10000;
  std::vector<double> srs1, srs2;
  for (std::size_t s = 0; s < seeds; ++s) {
    const auto suite = sampling::srswor_select(d, 2, 1'000'000 + s);
    srs1.push_back(static_cast<double>(d.index_of(suite.records[0].example_id)));
    srs2.push_back(static_cast<double>(d.index_of(suite.records[1].example_id)));
  }
  bool pass = true;
  std::string detail;
  auto variant = [&](const char* name, const aux::BoundWeights& w, double r) {
    std::vector<double> first, second;
    for (std::size_t s = 0; s < seeds; ++s) {
      sampling::SamplerConfig sc;
      sc.technique = Technique::Deepest;
      sc.n = 2;
      sc.seed = s;
      sc.r = r;
      const auto suite = sampling::deepest_select(d, w, sc);
      first.push_back(static_cast<double>(d.index_of(suite.records[0].example_id)));
      second.push_back(static_cast<double>(d.index_of(suite.records[1].example_id)));
    }
    double d1, c1, d2, c2;
    const bool ok1 = ks_same(first, srs1, &d1, &c1);
    const bool ok2 = ks_same(second, srs2, &d2, &c2);
    pass = pass && ok1 && ok2;
    detail += fmt("%s%s: D1=%.4f D2=%.4f crit=%.4f", detail.empty() ? "" : "; ", name, d1, d2, c1);
  };
  variant("r=0", informative, 0.0);
  variant("all-inactive", inactive, 0.8);
  return {pass, detail};
}

Outcome a8_score_oracles() {
  // Two-point DSA.
  const OperationalDataset one({{"q0", 0, 0.5, std::nullopt, std::nullopt}});
  const TrainingReference two_point(ActivationTraceSet(2, {"t0", "t1"}, {0.0, 0.0, 1.0, 0.0}), {0, 1});
  const double dsa = aux::compute_dsa(ActivationTraceSet(2, {"q0"}, {0.2, 0.0}), one, two_point).values[0];
  // Forced-bandwidth 1-D LSA: reference {0} for the predicted class, h = 1, query 0.
  const TrainingReference line(ActivationTraceSet(1, {"t0", "t1"}, {0.0, 50.0}), {0, 1});
  aux::LsaOptions lo;
  lo.bandwidth = 1.0;
  lo.variance_filter = 0.0;
  const double lsa = aux::compute_lsa(ActivationTraceSet(1, {"q0"}, {0.0}), one, line, lo).values[0];
  // Thresholds against the two-pass population formulas.
  bool thresholds = true;
  for (const std::vector<double>& v : {std::vector<double>{1, 2, 3}, std::vector<double>{1, 1, 1},
                                       std::vector<double>{0, 2, 4, 6}, std::vector<double>{0.5, 0.25, 4.0, 8.0}}) {
    double mean = 0.0, var = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    thresholds = thresholds && aux::dsa_threshold(v) == mean + 2.0 * std::sqrt(var) && aux::lsa_threshold(v) == mean + var;
  }
  const bool known = std::abs(aux::dsa_threshold(std::vector<double>{1, 2, 3}) - 3.63299) < 5e-6 &&
                     aux::lsa_threshold(std::vector<double>{1, 1, 1}) == 1.0;
  const bool ok = dsa == 0.2 && std::abs(lsa - 0.91894) <= 1e-5 && thresholds && known;
  return {ok, fmt("DSA=%.17g, LSA=%.6f, thresholds %s", dsa, lsa, thresholds && known ? "exact" : "MISMATCH")};
}

Outcome a9_ces_representativeness() {
  const std::size_t N = 1000;
  std::vector<Example> ex;
  std::vector<std::string> ids;
  std::vector<double> act;
  for (std::size_t i = 0; i < N; ++i) {
    ids.push_back("e" + std::to_string(i));
    ex.push_back({ids.back(), 0, 0.9, 0, std::nullopt});
    act.push_back(i % 2 == 0 ? 0.0 : 1.0);
  }
  const OperationalDataset d(std::move(ex));
  const ActivationTraceSet traces(1, ids, act);
  const auto prepared = sampling::CesPopulation::prepare(d, traces, 20);
  auto imbalance = [&](const TestSuite& s) {
    double ones = 0.0;
    for (const auto& r : s.records) ones += act[d.index_of(r.example_id)];
    return std::abs(ones / static_cast<double>(s.records.size()) - 0.5);
  };
  double ces = 0.0, srs = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    sampling::SamplerConfig sc;
    sc.technique = Technique::Ces;
    sc.n = 40;
    sc.seed = seed;
    ces += imbalance(sampling::ces_select(d, prepared, sc));
    srs += imbalance(sampling::srswor_select(d, 40, seed + 500));
  }
  ces /= 100.0;
  srs /= 100.0;
  return {ces < srs, fmt("mean |fraction at 1 - 0.5|: ces %.4f, srswor %.4f", ces, srs)};
}

Outcome a10_logistic() {
  Rng rng(99);
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < 100000; ++i) {
    const double xi = rng.normal();
    x.push_back(xi);
    y.push_back(rng.uniform() < 1.0 / (1.0 + std::exp(1.0 - 2.0 * xi)));
  }
  const auto fit = harness::fit_logistic(x, y);
  const auto sep = harness::fit_logistic(std::vector<double>{0.1, 0.2, 0.3, 0.7, 0.8, 0.9}, std::vector<int>{0, 0, 0, 1, 1, 1});
  const bool ok = fit.converged && std::abs(fit.intercept + 1.0) <= 0.05 && std::abs(fit.slope - 2.0) <= 0.05 &&
                  sep.separated && !sep.converged;
  return {ok, fmt("(%.4f, %.4f) in %zu iterations; separation flagged: %s", fit.intercept, fit.slope, fit.iterations,
                  sep.separated ? "yes" : "no")};
}

int shell(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome a11_determinism() {
  const auto dir = fs::temp_directory_path() / "deepest-acceptance-a11";
  fs::remove_all(dir);
  fs::create_directories(dir);
  harness::SynthConfig cfg;
  cfg.N = 3000;
  cfg.cluster_count = 3;
  cfg.seed = 11;
  const auto pop = harness::generate_synthetic(cfg);
  io::save_dataset(pop.dataset, dir / "dataset.csv");
  io::save_labels(pop.dataset, dir / "labels.csv");
  io::save_traces(pop.traces, dir / "traces.csv");
  aux::save_scores(aux::compute_dsa(pop.traces, pop.dataset, pop.training), dir / "dsa.csv");

  const std::string base = std::string(DEEPEST_CLI) + " evaluate --dataset " + (dir / "dataset.csv").string() +
                           " --labels " + (dir / "labels.csv").string() + " --traces " + (dir / "traces.csv").string() +
                           " --aux " + (dir / "dsa.csv").string() +
                           " --techniques srswr,srswor,ces,deepest-confidence,deepest-dsa --n 100 --reps 10 --seed 7";
  const int rc1 = shell(base + " --out " + (dir / "run1").string());
  const int rc2 = shell(base + " --out " + (dir / "run2").string());
  if (rc1 != 0 || rc2 != 0) return {false, fmt("evaluate exit codes %d, %d", rc1, rc2)};
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir / "run1")) names.push_back(e.path().filename().string());
  std::size_t others = 0;
  for (const auto& e : fs::directory_iterator(dir / "run2")) (void)e, ++others;
  if (names.size() != others) return {false, "directories list different files"};
  std::sort(names.begin(), names.end());
  for (const auto& n : names) {
    if (!fs::exists(dir / "run2" / n) || io::read_file(dir / "run1" / n) != io::read_file(dir / "run2" / n)) {
      return {false, "file differs: " + n};
    }
  }
  return {true, fmt("%zu files byte-identical", names.size())};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"A1", "Estimator arithmetic oracles", 1.0, a1_estimator_oracles},
      {"A2", "Probability normalization", 10.0, a2_normalization},
      {"A3", "Unbiasedness", 600.0, a3_unbiasedness},
      {"A4", "Variance oracles", 300.0, a4_variance},
      {"A5", "Failure-detection gain", 120.0, a5_detection_gain},
      {"A6", "Published-ratio cross-check", 1.0, a6_published_ratios},
      {"A7", "Degenerate-limit equivalence", 60.0, a7_degenerate_limits},
      {"A8", "DSA/LSA oracles", 1.0, a8_score_oracles},
      {"A9", "CES representativeness", 60.0, a9_ces_representativeness},
      {"A10", "Logistic fit", 30.0, a10_logistic},
      {"A11", "Determinism", 600.0, a11_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) {
      out.pass = false;
      out.detail += fmt(" (over the %.0f s budget)", c.budget_seconds);
    }
    failures += !out.pass;
    std::printf("[%s] %s %s: %s [%.2f s]\n", out.pass ? "PASS" : "FAIL", c.id.c_str(), c.title.c_str(),
                out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
