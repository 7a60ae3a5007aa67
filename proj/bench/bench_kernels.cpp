// Serial vs OpenMP timings for the hot kernels and for repeated experiments.
// Usage: deepest_bench [N]   (operational population size, default 10000)

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include "deepest/auxiliary.hpp"
#include "deepest/harness.hpp"
#include "deepest/kernels.hpp"
#include "deepest/rng.hpp"

using namespace deepest;

namespace {

double seconds(const std::function<void()>& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void row(const char* name, double serial, double parallel) {
  std::printf("%-22s serial %8.3f s   parallel %8.3f s   speedup %5.2fx\n", name, serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t N = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 10000;
  std::printf("N=%zu, threads=%d\n", N, omp_get_max_threads());

  harness::SynthConfig cfg;
  cfg.N = N;
  cfg.cluster_count = 5;
  cfg.trace_dim = 32;
  cfg.training_per_class = 300;
  const auto pop = harness::generate_synthetic(cfg);

  const kernels::MatrixView queries{pop.traces.values(), pop.traces.dim()};
  const kernels::MatrixView reference{pop.training.traces.values(), pop.training.traces.dim()};
  const auto partition = kernels::ClassPartition::build(pop.training.class_of);
  std::vector<ClassLabel> predicted;
  for (const auto& e : pop.dataset.examples()) predicted.push_back(e.predicted_label);
  row("dsa_distances",
      seconds([&] { kernels::serial::dsa_distances(queries, predicted, reference, partition); }),
      seconds([&] { kernels::parallel::dsa_distances(queries, predicted, reference, partition); }));

  std::vector<kernels::KdeModel> models;
  std::vector<std::size_t> model_of(N);
  for (std::size_t c = 0; c < partition.labels.size(); ++c) {
    std::vector<double> pts;
    for (std::size_t r : partition.rows[c]) {
      const auto v = pop.training.traces.row(r);
      pts.insert(pts.end(), v.begin(), v.end());
    }
    models.push_back(aux::fit_kde({pts, pop.training.traces.dim()}, aux::LsaOptions{}));
  }
  for (std::size_t i = 0; i < N; ++i) model_of[i] = static_cast<std::size_t>(partition.find(predicted[i]));
  row("kde_log_density",
      seconds([&] { kernels::serial::kde_log_density(queries, model_of, models); }),
      seconds([&] { kernels::parallel::kde_log_density(queries, model_of, models); }));

  const auto binned = kernels::BinnedTraces::build(queries, 20);
  std::vector<std::uint32_t> counts(binned.neurons * binned.bins, 0);
  for (std::size_t r = 0; r < 30; ++r) {
    for (std::size_t k = 0; k < binned.neurons; ++k) ++counts[k * binned.bins + binned.bin_of[r * binned.neurons + k]];
  }
  Rng rng(1);
  std::vector<std::size_t> candidates(300 * 5);
  for (auto& c : candidates) c = rng.index(N);
  const int reps = 200;
  row("ces_cross_entropy x200",
      seconds([&] {
        for (int i = 0; i < reps; ++i) kernels::serial::ces_cross_entropy(binned, counts, 30, candidates, 5, 1e-6);
      }),
      seconds([&] {
        for (int i = 0; i < reps; ++i) kernels::parallel::ces_cross_entropy(binned, counts, 30, candidates, 5, 1e-6);
      }));

  const auto weights = aux::WeightRule(aux::confidence_scores(pop.dataset)).bind(pop.dataset);
  sampling::SamplerConfig sc;
  sc.technique = Technique::Deepest;
  const harness::TechniqueSpec spec{"deepest-confidence", sc, &weights, nullptr};
  const int threads = omp_get_max_threads();
  omp_set_num_threads(1);
  const double one = seconds([&] { harness::run_experiment(pop.dataset, spec, 200, 200, 0); });
  omp_set_num_threads(threads);
  const double many = seconds([&] { harness::run_experiment(pop.dataset, spec, 200, 200, 0); });
  row("run_experiment R=200", one, many);
  return 0;
}
