#include "deepest/evaluate.hpp"

#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "json.hpp"

#include "deepest/error.hpp"
#include "deepest/io.hpp"

namespace deepest::harness {
namespace {

using json = nlohmann::json;

constexpr std::string_view kDeepestPrefix = "deepest-";

std::string optional_number(const std::optional<double>& v) {
  return v ? io::format_double(*v) : std::string("Undefined");
}

}  // namespace

std::string report_json(const ExperimentReport& report) {
  json j = json::object();
  j["technique"] = report.technique;
  j["n"] = report.n;
  j["repetitions"] = report.repetitions;
  j["base_seed"] = report.base_seed;
  j["theta_true"] = report.theta_true;
  j["mse"] = report.mse;
  j["mse_estimates"] = report.clamped_estimates ? "clamped" : "raw";
  j["mean_phi"] = report.mean_phi;
  j["std_phi"] = report.std_phi;
  j["theta_hats"] = report.theta_hats;
  j["phis"] = report.phis;
  return j.dump(2) + "\n";
}

std::string comparison_csv(const std::vector<ExperimentReport>& reports) {
  std::ostringstream out;
  out << "A,B,rho,pi\n";
  for (const auto& a : reports) {
    for (const auto& b : reports) {
      if (&a == &b) continue;
      const auto c = compare(a, b);
      out << c.a << ',' << c.b << ',' << optional_number(c.rho) << ',' << optional_number(c.pi) << '\n';
    }
  }
  return out.str();
}

std::vector<ExperimentReport> evaluate(const EvaluateOptions& options) {
  if (options.techniques.empty()) throw Error(ErrorCode::InvalidConfig, "no techniques requested");
  auto population = io::load_dataset(options.dataset);
  if (!options.labels.empty()) population = population.with_labels(io::load_labels(options.labels));

  std::map<aux::ScoreKind, aux::AuxiliaryScores> scores;
  for (const auto& path : options.aux) {
    auto s = aux::load_scores(path);
    const auto kind = s.kind;
    if (!scores.emplace(kind, std::move(s)).second) {
      throw Error(ErrorCode::InvalidConfig, "two score files of kind " + std::string(aux::to_string(kind)));
    }
  }

  std::optional<sampling::CesPopulation> ces;
  std::vector<std::unique_ptr<aux::BoundWeights>> bound;
  std::vector<TechniqueSpec> specs;
  for (const auto& name : options.techniques) {
    TechniqueSpec spec;
    spec.label = name;
    spec.cfg = options.sampler;
    if (name.rfind(kDeepestPrefix, 0) == 0) {
      const auto kind = aux::score_kind_from_string(name.substr(kDeepestPrefix.size()));
      spec.cfg.technique = Technique::Deepest;
      auto it = scores.find(kind);
      if (it == scores.end()) {
        if (kind != aux::ScoreKind::Confidence) {
          throw Error(ErrorCode::InvalidConfig, "technique " + name + " needs an --aux score file of that kind");
        }
        it = scores.emplace(kind, aux::confidence_scores(population)).first;
      }
      bound.push_back(std::make_unique<aux::BoundWeights>(aux::WeightRule(it->second, options.weight_variant).bind(population)));
      spec.weights = bound.back().get();
    } else {
      spec.cfg.technique = technique_from_string(name);
      if (spec.cfg.technique == Technique::Ces) {
        if (options.traces.empty()) throw Error(ErrorCode::InvalidConfig, "ces needs --traces");
        if (!ces) {
          const auto traces = io::load_traces(options.traces);
          ces = sampling::CesPopulation::prepare(population, traces, options.sampler.ces_bins);
        }
        spec.ces = &*ces;
      }
    }
    specs.push_back(std::move(spec));
  }

  std::vector<ExperimentReport> reports;
  for (const auto& spec : specs) {
    reports.push_back(run_experiment(population, spec, options.n, options.repetitions, options.seed, options.use_clamped));
  }

  std::filesystem::create_directories(options.out);
  for (const auto& r : reports) io::write_file(options.out / (r.technique + ".json"), report_json(r));
  io::write_file(options.out / "comparison.csv", comparison_csv(reports));
  return reports;
}

}  // namespace deepest::harness
