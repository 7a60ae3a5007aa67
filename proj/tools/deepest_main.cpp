// deepest: command-line front end for test selection and accuracy estimation.
//
//   deepest aux compute   --kind dsa|lsa|confidence|combined ...
//   deepest select        --technique srswr|srswor|ces|deepest ...
//   deepest estimate      --suite F --labels F
//   deepest evaluate      --dataset F --techniques LIST ...
//   deepest synth         --config F --out DIR
//   deepest analyze logistic --aux F --labels F
//
// Exit codes: 0 success, 1 I/O failure, 2 validation error, 3 numeric non-convergence.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "deepest/auxiliary.hpp"
#include "deepest/error.hpp"
#include "deepest/estimators.hpp"
#include "deepest/evaluate.hpp"
#include "deepest/harness.hpp"
#include "deepest/io.hpp"
#include "deepest/samplers.hpp"

namespace {

using json = nlohmann::json;
using namespace deepest;

constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNonConvergence = 3;

/// Labelled population from `labels`, which is either an `id,true_label` CSV
/// (then `dataset` supplies predicted labels) or a labelled dataset CSV.
OperationalDataset labelled_population(const std::string& labels, const std::string& dataset) {
  std::string header;
  {
    std::ifstream in(labels);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + labels + "'");
    std::getline(in, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
  }
  if (header == "id,true_label") {
    if (dataset.empty()) throw Error(ErrorCode::InvalidConfig, "an id,true_label file needs --dataset for predicted labels");
    return io::load_dataset(dataset).with_labels(io::load_labels(labels));
  }
  auto population = io::load_dataset(labels);
  if (!dataset.empty()) population = io::load_dataset(dataset).with_labels([&] {
    std::unordered_map<std::string, ClassLabel> m;
    for (const auto& e : population.examples())
      if (e.true_label) m.emplace(e.id, *e.true_label);
    return m;
  }());
  return population;
}

std::optional<double> parse_bandwidth(const std::string& text) {
  if (text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double h = std::stod(text, &used);
    if (used == text.size()) return h;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::InvalidConfig, "--lsa-bandwidth must be 'auto' or a number");
}

struct AuxArgs {
  std::string kind;
  std::string dataset, traces, training, out;
  std::string dsa_form = "ratio";
  std::string bandwidth = "auto";
  double variance_filter = aux::kVarianceFilter;
};

int run_aux(const AuxArgs& a) {
  const auto dataset = io::load_dataset(a.dataset);
  const auto kind = aux::score_kind_from_string(a.kind);
  auto dsa = [&] {
    const auto traces = io::load_traces(a.traces);
    const auto training = io::load_training(a.training);
    return aux::compute_dsa(traces, dataset, training, {aux::dsa_form_from_string(a.dsa_form)});
  };
  auto require_traces = [&] {
    if (a.traces.empty() || a.training.empty()) {
      throw Error(ErrorCode::InvalidConfig, "--traces and --training are required for " + a.kind);
    }
  };
  aux::AuxiliaryScores scores;
  switch (kind) {
    case aux::ScoreKind::Confidence: scores = aux::confidence_scores(dataset); break;
    case aux::ScoreKind::Dsa: require_traces(); scores = dsa(); break;
    case aux::ScoreKind::Lsa: {
      require_traces();
      const auto traces = io::load_traces(a.traces);
      const auto training = io::load_training(a.training);
      aux::LsaOptions opts;
      opts.bandwidth = parse_bandwidth(a.bandwidth);
      opts.variance_filter = a.variance_filter;
      scores = aux::compute_lsa(traces, dataset, training, opts);
      break;
    }
    case aux::ScoreKind::Combined:
      require_traces();
      scores = aux::combined_scores(aux::confidence_scores(dataset), dsa());
      break;
  }
  for (const auto& w : scores.warnings) std::cerr << "warning: " << w << '\n';
  aux::save_scores(scores, a.out);
  return 0;
}

struct SelectArgs {
  std::string technique;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string dataset, traces, aux_path, out;
  std::string weight_rule = "a";
  sampling::SamplerConfig cfg;
};

int run_select(SelectArgs a) {
  const auto dataset = io::load_dataset(a.dataset);
  a.cfg.technique = technique_from_string(a.technique);
  a.cfg.n = a.n;
  a.cfg.seed = a.seed;
  std::optional<aux::BoundWeights> weights;
  std::optional<sampling::CesPopulation> ces;
  if (a.cfg.technique == Technique::Deepest) {
    if (a.aux_path.empty()) throw Error(ErrorCode::InvalidConfig, "deepest needs --aux");
    weights = aux::WeightRule(aux::load_scores(a.aux_path), aux::weight_variant_from_string(a.weight_rule)).bind(dataset);
  }
  if (a.cfg.technique == Technique::Ces) {
    if (a.traces.empty()) throw Error(ErrorCode::InvalidConfig, "ces needs --traces");
    ces = sampling::CesPopulation::prepare(dataset, io::load_traces(a.traces), a.cfg.ces_bins);
  }
  const auto suite = sampling::select(dataset, a.cfg, {weights ? &*weights : nullptr, ces ? &*ces : nullptr});
  io::save_suite(suite, a.out);
  return 0;
}

int run_estimate(const std::string& suite_path, const std::string& labels, const std::string& dataset,
                 const std::string& out) {
  auto suite = io::load_suite(suite_path);
  if (!labels.empty()) {
    suite = suite.labelled_from(labelled_population(labels, dataset));
  } else if (!suite.labelled()) {
    throw Error(ErrorCode::Unlabelled, "suite records carry no outcomes; pass --labels");
  }
  const auto report = estimate::estimate(suite);
  json j = json::object();
  j["theta_hat"] = report.theta_hat;
  j["theta_hat_raw"] = report.theta_hat_raw;
  j["clamped"] = report.clamped;
  j["phi"] = report.phi;
  j["n"] = report.n;
  j["z_series"] = report.z_series;
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    io::write_file(out, text);
  }
  return 0;
}

int run_synth(const std::string& config_path, const std::string& out) {
  harness::SynthConfig cfg;
  try {
    const json j = json::parse(io::read_file(config_path));
    cfg.N = j.value("N", cfg.N);
    cfg.theta_true = j.value("theta_true", cfg.theta_true);
    cfg.cluster_count = j.value("cluster_count", cfg.cluster_count);
    cfg.aux_auc = j.value("aux_auc", cfg.aux_auc);
    cfg.trace_dim = j.value("trace_dim", cfg.trace_dim);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.classes = j.value("classes", cfg.classes);
    cfg.training_per_class = j.value("training_per_class", cfg.training_per_class);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad synth config: ") + e.what());
  }
  const auto pop = harness::generate_synthetic(cfg);
  const std::filesystem::path dir(out);
  std::filesystem::create_directories(dir);
  std::vector<Example> unlabelled = pop.dataset.examples();
  for (auto& e : unlabelled) e.true_label.reset();
  io::save_dataset(OperationalDataset(std::move(unlabelled)), dir / "dataset.csv");
  io::save_labels(pop.dataset, dir / "labels.csv");
  io::save_traces(pop.traces, dir / "traces.csv");
  io::save_training(pop.training, dir / "training.csv");
  return 0;
}

int run_logistic(const std::string& aux_path, const std::string& labels, const std::string& dataset) {
  const auto scores = aux::load_scores(aux_path);
  const auto population = labelled_population(labels, dataset);
  std::vector<double> x;
  std::vector<int> y;
  for (std::size_t i = 0; i < scores.ids.size(); ++i) {
    x.push_back(scores.values[i]);
    y.push_back(population[population.index_of(scores.ids[i])].outcome());
  }
  const auto fit = harness::fit_logistic(x, y);
  json j = json::object();
  j["intercept"] = fit.intercept;
  j["slope"] = fit.slope;
  j["converged"] = fit.converged;
  j["n_iter"] = fit.iterations;
  j["perfect_separation"] = fit.separated;
  std::cout << j.dump(2) << '\n';
  return fit.converged ? 0 : kExitNonConvergence;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void add_sampler_flags(CLI::App* cmd, sampling::SamplerConfig& cfg) {
  cmd->add_option("--r", cfg.r, "Probability of weight-based sampling")->capture_default_str();
  cmd->add_option("--ces-p", cfg.ces_p, "CES initial sample size")->capture_default_str();
  cmd->add_option("--ces-q", cfg.ces_q, "CES group size")->capture_default_str();
  cmd->add_option("--ces-L", cfg.ces_L, "CES candidate groups per step")->capture_default_str();
  cmd->add_option("--ces-bins", cfg.ces_bins, "CES histogram bins per neuron")->capture_default_str();
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Io: return kExitIo;
    case ErrorCode::NonConvergence: return kExitNonConvergence;
    default: return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operational accuracy estimation by adaptive test selection"};
  app.require_subcommand(1);

  auto* aux_cmd = app.add_subcommand("aux", "Auxiliary misprediction scores");
  aux_cmd->require_subcommand(1);
  auto* aux_compute = aux_cmd->add_subcommand("compute", "Compute scores and threshold");
  AuxArgs aux_args;
  aux_compute->add_option("--kind", aux_args.kind, "dsa|lsa|confidence|combined")->required()
      ->check(CLI::IsMember({"dsa", "lsa", "confidence", "combined"}));
  aux_compute->add_option("--dataset", aux_args.dataset, "Dataset CSV")->required();
  aux_compute->add_option("--traces", aux_args.traces, "Operational traces CSV");
  aux_compute->add_option("--training", aux_args.training, "Training-reference CSV");
  aux_compute->add_option("--out", aux_args.out, "Scores CSV (sidecar written to <out>.json)")->required();
  aux_compute->add_option("--dsa-form", aux_args.dsa_form, "ratio|plain")->capture_default_str()
      ->check(CLI::IsMember({"ratio", "plain"}));
  aux_compute->add_option("--lsa-bandwidth", aux_args.bandwidth, "auto or a fixed bandwidth")->capture_default_str();
  aux_compute->add_option("--variance-filter", aux_args.variance_filter, "Drop neurons with lower training variance")
      ->capture_default_str();

  auto* select_cmd = app.add_subcommand("select", "Select a test suite");
  SelectArgs sel;
  select_cmd->add_option("--technique", sel.technique, "srswr|srswor|ces|deepest")->required()
      ->check(CLI::IsMember({"srswr", "srswor", "ces", "deepest"}));
  select_cmd->add_option("--n", sel.n, "Suite size")->required();
  select_cmd->add_option("--seed", sel.seed, "Generator seed")->required();
  select_cmd->add_option("--dataset", sel.dataset, "Dataset CSV")->required();
  select_cmd->add_option("--traces", sel.traces, "Operational traces CSV (ces)");
  select_cmd->add_option("--aux", sel.aux_path, "Scores CSV (deepest)");
  select_cmd->add_option("--weight-rule", sel.weight_rule, "a: gate on selected, b: gate on candidate")
      ->capture_default_str()->check(CLI::IsMember({"a", "b"}));
  select_cmd->add_option("--out", sel.out, "Suite file (JSON Lines)")->required();
  add_sampler_flags(select_cmd, sel.cfg);

  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate accuracy from a labelled suite");
  std::string est_suite, est_labels, est_dataset, est_out;
  estimate_cmd->add_option("--suite", est_suite, "Suite file")->required();
  estimate_cmd->add_option("--labels", est_labels, "id,true_label CSV or labelled dataset CSV");
  estimate_cmd->add_option("--dataset", est_dataset, "Dataset CSV with predicted labels");
  estimate_cmd->add_option("--out", est_out, "Write the report here instead of stdout");

  auto* eval_cmd = app.add_subcommand("evaluate", "Repeated-run comparison of techniques");
  harness::EvaluateOptions ev;
  std::string ev_dataset, ev_labels, ev_traces, ev_out, ev_techniques, ev_rule = "a";
  std::vector<std::string> ev_aux;
  eval_cmd->add_option("--dataset", ev_dataset, "Dataset CSV")->required();
  eval_cmd->add_option("--labels", ev_labels, "id,true_label CSV");
  eval_cmd->add_option("--techniques", ev_techniques, "Comma-separated list")->required();
  eval_cmd->add_option("--n", ev.n, "Suite size")->capture_default_str();
  eval_cmd->add_option("--reps", ev.repetitions, "Repetitions")->capture_default_str();
  eval_cmd->add_option("--seed", ev.seed, "Base seed; repetition i uses seed + i")->capture_default_str();
  eval_cmd->add_option("--traces", ev_traces, "Operational traces CSV (ces)");
  eval_cmd->add_option("--aux", ev_aux, "Scores CSV for deepest-<kind> (repeatable)");
  eval_cmd->add_option("--weight-rule", ev_rule, "a|b")->capture_default_str()->check(CLI::IsMember({"a", "b"}));
  eval_cmd->add_flag("--clamped", ev.use_clamped, "MSE over clamped estimates");
  eval_cmd->add_option("--out", ev_out, "Output directory")->required();
  add_sampler_flags(eval_cmd, ev.sampler);

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labelled population");
  std::string synth_config, synth_out;
  synth_cmd->add_option("--config", synth_config, "JSON config")->required();
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();

  auto* analyze_cmd = app.add_subcommand("analyze", "Auxiliary-variable analyses");
  analyze_cmd->require_subcommand(1);
  auto* logistic_cmd = analyze_cmd->add_subcommand("logistic", "Logistic fit of misprediction on a score");
  std::string lg_aux, lg_labels, lg_dataset;
  logistic_cmd->add_option("--aux", lg_aux, "Scores CSV")->required();
  logistic_cmd->add_option("--labels", lg_labels, "Labelled dataset CSV or id,true_label CSV")->required();
  logistic_cmd->add_option("--dataset", lg_dataset, "Dataset CSV (with an id,true_label labels file)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (aux_compute->parsed()) return run_aux(aux_args);
    if (select_cmd->parsed()) return run_select(sel);
    if (estimate_cmd->parsed()) return run_estimate(est_suite, est_labels, est_dataset, est_out);
    if (eval_cmd->parsed()) {
      ev.dataset = ev_dataset;
      ev.labels = ev_labels;
      ev.traces = ev_traces;
      ev.out = ev_out;
      for (const auto& p : ev_aux) ev.aux.emplace_back(p);
      ev.techniques = split_list(ev_techniques);
      ev.weight_variant = aux::weight_variant_from_string(ev_rule);
      harness::evaluate(ev);
      return 0;
    }
    if (synth_cmd->parsed()) return run_synth(synth_config, synth_out);
    if (logistic_cmd->parsed()) return run_logistic(lg_aux, lg_labels, lg_dataset);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
