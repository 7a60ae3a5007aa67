#include "deepest/auxiliary.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "deepest/error.hpp"
#include "deepest/io.hpp"

namespace deepest::aux {
namespace {

using json = nlohmann::json;

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // population
};

Moments population_moments(std::span<const double> values) {
  Moments m;
  if (values.empty()) return m;
  for (double v : values) m.mean += v;
  m.mean /= static_cast<double>(values.size());
  for (double v : values) m.variance += (v - m.mean) * (v - m.mean);
  m.variance /= static_cast<double>(values.size());
  return m;
}

// Traces of the dataset examples, in dataset order.
std::vector<double> gather_rows(const ActivationTraceSet& traces, const OperationalDataset& dataset) {
  std::vector<double> rows;
  rows.reserve(dataset.size() * traces.dim());
  for (const auto& e : dataset.examples()) {
    const auto r = traces.find(e.id);
    if (!r) throw Error(ErrorCode::MissingTrace, "no trace for '" + e.id + "'");
    const auto row = traces.row(*r);
    rows.insert(rows.end(), row.begin(), row.end());
  }
  return rows;
}

std::vector<std::string> dataset_ids(const OperationalDataset& dataset) {
  std::vector<std::string> ids;
  ids.reserve(dataset.size());
  for (const auto& e : dataset.examples()) ids.push_back(e.id);
  return ids;
}

std::vector<ClassLabel> predicted_labels(const OperationalDataset& dataset) {
  std::vector<ClassLabel> labels;
  labels.reserve(dataset.size());
  for (const auto& e : dataset.examples()) labels.push_back(e.predicted_label);
  return labels;
}

void check_references(const OperationalDataset& dataset, const ActivationTraceSet& op_traces,
                      const TrainingReference& training, const kernels::ClassPartition& partition) {
  if (op_traces.dim() != training.traces.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "operational traces have m=" + std::to_string(op_traces.dim()) +
                                                  ", training traces m=" + std::to_string(training.traces.dim()));
  }
  for (const auto& e : dataset.examples()) {
    if (partition.find(e.predicted_label) < 0) {
      throw Error(ErrorCode::MissingClassReference,
                  "no training traces for class " + std::to_string(e.predicted_label) + " (example '" + e.id + "')");
    }
  }
}

std::string format_param(double v) { return io::format_double(v); }

}  // namespace

std::string_view to_string(ScoreKind k) {
  switch (k) {
    case ScoreKind::Confidence: return "confidence";
    case ScoreKind::Dsa: return "dsa";
    case ScoreKind::Lsa: return "lsa";
    case ScoreKind::Combined: return "combined";
  }
  return "confidence";
}

ScoreKind score_kind_from_string(std::string_view s) {
  if (s == "confidence") return ScoreKind::Confidence;
  if (s == "dsa") return ScoreKind::Dsa;
  if (s == "lsa") return ScoreKind::Lsa;
  if (s == "combined") return ScoreKind::Combined;
  throw Error(ErrorCode::InvalidConfig, "unknown score kind '" + std::string(s) + "'");
}

std::string_view to_string(Direction d) { return d == Direction::Above ? "ABOVE" : "BELOW"; }

Direction direction_from_string(std::string_view s) {
  if (s == "ABOVE") return Direction::Above;
  if (s == "BELOW") return Direction::Below;
  throw Error(ErrorCode::InvalidConfig, "unknown direction '" + std::string(s) + "'");
}

std::string_view to_string(DsaForm f) { return f == DsaForm::Ratio ? "ratio" : "plain"; }

DsaForm dsa_form_from_string(std::string_view s) {
  if (s == "ratio") return DsaForm::Ratio;
  if (s == "plain") return DsaForm::Plain;
  throw Error(ErrorCode::InvalidConfig, "unknown DSA form '" + std::string(s) + "'");
}

std::string_view to_string(WeightVariant v) { return v == WeightVariant::GateSelected ? "a" : "b"; }

WeightVariant weight_variant_from_string(std::string_view s) {
  if (s == "a") return WeightVariant::GateSelected;
  if (s == "b") return WeightVariant::GateCandidate;
  throw Error(ErrorCode::InvalidConfig, "weight rule must be 'a' or 'b'");
}

void AuxiliaryScores::validate() const {
  if (ids.size() != values.size()) throw Error(ErrorCode::InvalidConfig, "scores: ids and values differ in length");
  if (!std::isfinite(tau)) throw Error(ErrorCode::InvalidConfig, "scores: non-finite threshold");
  const bool unit = kind == ScoreKind::Confidence || kind == ScoreKind::Combined;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw Error(ErrorCode::InvalidConfig, "scores: non-finite value for '" + ids[i] + "'");
    if (unit && (values[i] < 0.0 || values[i] > 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "scores: value of '" + ids[i] + "' outside [0,1]");
    }
  }
}

double dsa_threshold(std::span<const double> values) {
  const auto m = population_moments(values);
  return m.mean + 2.0 * std::sqrt(m.variance);
}

double lsa_threshold(std::span<const double> values) {
  const auto m = population_moments(values);
  return m.mean + m.variance;
}

std::vector<double> min_max_normalize(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
  return out;
}

AuxiliaryScores confidence_scores(const OperationalDataset& dataset) {
  AuxiliaryScores s;
  s.kind = ScoreKind::Confidence;
  s.tau = kConfidenceThreshold;
  s.direction = Direction::Below;
  s.ids = dataset_ids(dataset);
  s.values.reserve(dataset.size());
  for (const auto& e : dataset.examples()) {
    if (!e.confidence) throw Error(ErrorCode::MissingConfidence, "example '" + e.id + "' has no confidence");
    s.values.push_back(*e.confidence);
  }
  return s;
}

AuxiliaryScores compute_dsa(const ActivationTraceSet& op_traces, const OperationalDataset& dataset,
                            const TrainingReference& training, const DsaOptions& options) {
  const auto partition = kernels::ClassPartition::build(training.class_of);
  check_references(dataset, op_traces, training, partition);
  if (partition.labels.size() < 2) {
    throw Error(ErrorCode::MissingClassReference, "DSA needs training traces of at least two classes");
  }
  const auto rows = gather_rows(op_traces, dataset);
  const auto classes = predicted_labels(dataset);
  const kernels::MatrixView queries{rows, op_traces.dim()};
  const kernels::MatrixView reference{training.traces.values(), training.traces.dim()};
  const auto distances = options.parallel ? kernels::parallel::dsa_distances(queries, classes, reference, partition)
                                          : kernels::serial::dsa_distances(queries, classes, reference, partition);

  AuxiliaryScores s;
  s.kind = ScoreKind::Dsa;
  s.direction = Direction::Above;
  s.ids = dataset_ids(dataset);
  s.params["form"] = std::string(to_string(options.form));
  s.values.resize(distances.size());
  std::vector<std::size_t> degenerate;
  double max_finite = -1.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (options.form == DsaForm::Plain) {
      s.values[i] = distances[i].dist_a;
    } else if (distances[i].dist_b > 0.0) {
      s.values[i] = distances[i].dist_a / distances[i].dist_b;
    } else {
      degenerate.push_back(i);
      continue;
    }
    max_finite = std::max(max_finite, s.values[i]);
  }
  if (!degenerate.empty() && max_finite < 0.0) {
    throw Error(ErrorCode::DegenerateReference, "every example has coinciding same-class and other-class references");
  }
  for (std::size_t i : degenerate) {
    s.values[i] = max_finite;
    s.warnings.push_back("DegenerateReference(" + s.ids[i] + ")");
  }
  s.tau = dsa_threshold(s.values);
  return s;
}

kernels::KdeModel fit_kde(kernels::MatrixView points, const LsaOptions& options) {
  const std::size_t n = points.rows();
  if (n == 0) throw Error(ErrorCode::InsufficientReference, "no reference traces");
  if (options.bandwidth && !(*options.bandwidth > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "forced bandwidth must be positive");
  }
  if (!options.bandwidth && n < 2) {
    throw Error(ErrorCode::InsufficientReference, "automatic bandwidth needs at least 2 reference traces");
  }
  kernels::KdeModel model;
  std::vector<double> sample_std;
  for (std::size_t d = 0; d < points.cols; ++d) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += points.row(r)[d];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) ss += (points.row(r)[d] - mean) * (points.row(r)[d] - mean);
    if (ss / static_cast<double>(n) < options.variance_filter) continue;
    model.dims.push_back(d);
    sample_std.push_back(n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0);
  }
  if (model.dims.empty()) throw Error(ErrorCode::AllNeuronsFiltered, "every neuron fell below the variance filter");

  const auto dims = static_cast<double>(model.dims.size());
  const double scott = std::pow(static_cast<double>(n), -1.0 / (dims + 4.0));
  double log_h = 0.0;
  for (std::size_t k = 0; k < model.dims.size(); ++k) {
    const double h = options.bandwidth ? *options.bandwidth : sample_std[k] * scott;
    if (!(h > 0.0)) throw Error(ErrorCode::DegenerateBandwidth, "zero bandwidth on neuron " + std::to_string(model.dims[k]));
    model.bandwidth.push_back(h);
    log_h += std::log(h);
  }
  model.points.reserve(n * model.dims.size());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t d : model.dims) model.points.push_back(points.row(r)[d]);
  }
  model.log_norm = -std::log(static_cast<double>(n)) - log_h - 0.5 * dims * std::log(2.0 * std::numbers::pi);
  return model;
}

AuxiliaryScores compute_lsa(const ActivationTraceSet& op_traces, const OperationalDataset& dataset,
                            const TrainingReference& training, const LsaOptions& options) {
  const auto partition = kernels::ClassPartition::build(training.class_of);
  check_references(dataset, op_traces, training, partition);

  const std::size_t m = training.traces.dim();
  std::unordered_set<ClassLabel> used;
  for (const auto& e : dataset.examples()) used.insert(e.predicted_label);

  // One model per partition class; unused classes keep an empty model.
  std::vector<kernels::KdeModel> models(partition.labels.size());
  for (std::size_t c = 0; c < partition.labels.size(); ++c) {
    if (!used.count(partition.labels[c])) continue;
    std::vector<double> points;
    points.reserve(partition.rows[c].size() * m);
    for (std::size_t r : partition.rows[c]) {
      const auto row = training.traces.row(r);
      points.insert(points.end(), row.begin(), row.end());
    }
    try {
      models[c] = fit_kde({points, m}, options);
    } catch (const Error& e) {
      throw Error(e.code(), "class " + std::to_string(partition.labels[c]) + ": " + e.what());
    }
  }

  const auto rows = gather_rows(op_traces, dataset);
  std::vector<std::size_t> model_of;
  model_of.reserve(dataset.size());
  for (const auto& e : dataset.examples()) model_of.push_back(static_cast<std::size_t>(partition.find(e.predicted_label)));
  const kernels::MatrixView queries{rows, m};
  auto log_density = options.parallel ? kernels::parallel::kde_log_density(queries, model_of, models)
                                      : kernels::serial::kde_log_density(queries, model_of, models);

  AuxiliaryScores s;
  s.kind = ScoreKind::Lsa;
  s.direction = Direction::Above;
  s.ids = dataset_ids(dataset);
  s.values.resize(log_density.size());
  for (std::size_t i = 0; i < log_density.size(); ++i) s.values[i] = -log_density[i];
  s.params["bandwidth"] = options.bandwidth ? format_param(*options.bandwidth) : "auto";
  s.params["variance_filter"] = format_param(options.variance_filter);
  s.tau = lsa_threshold(s.values);
  return s;
}

AuxiliaryScores combined_scores(const AuxiliaryScores& confidence, const AuxiliaryScores& dsa) {
  if (confidence.kind != ScoreKind::Confidence) throw Error(ErrorCode::InvalidConfig, "first score set must be confidence");
  if (dsa.kind != ScoreKind::Dsa) throw Error(ErrorCode::InvalidConfig, "second score set must be DSA");
  if (confidence.ids.size() != dsa.ids.size()) throw Error(ErrorCode::IdMismatch, "score sets cover different ids");
  std::unordered_map<std::string, std::size_t> dsa_pos;
  for (std::size_t i = 0; i < dsa.ids.size(); ++i) dsa_pos.emplace(dsa.ids[i], i);

  AuxiliaryScores s;
  s.kind = ScoreKind::Combined;
  s.tau = kConfidenceThreshold;
  s.direction = Direction::Below;
  s.ids = confidence.ids;
  const auto normalized = min_max_normalize(dsa.values);
  if (!dsa.values.empty() &&
      std::all_of(dsa.values.begin(), dsa.values.end(), [&](double v) { return v == dsa.values.front(); })) {
    s.warnings.push_back("all DSA values equal; normalized distance set to 0");
  }
  s.values.reserve(s.ids.size());
  for (std::size_t i = 0; i < s.ids.size(); ++i) {
    auto it = dsa_pos.find(s.ids[i]);
    if (it == dsa_pos.end()) throw Error(ErrorCode::IdMismatch, "no DSA value for '" + s.ids[i] + "'");
    s.values.push_back(confidence.values[i] * (1.0 - normalized[it->second]));
  }
  return s;
}

WeightRule::WeightRule(AuxiliaryScores scores, WeightVariant variant)
    : scores_(std::move(scores)), variant_(variant) {
  scores_.validate();
  switch (scores_.kind) {
    case ScoreKind::Dsa:
    case ScoreKind::Lsa:
      belief_ = min_max_normalize(scores_.values);
      break;
    case ScoreKind::Confidence:
    case ScoreKind::Combined:
      belief_.reserve(scores_.values.size());
      for (double v : scores_.values) belief_.push_back(1.0 - v);
      break;
  }
  index_.reserve(scores_.ids.size());
  for (std::size_t i = 0; i < scores_.ids.size(); ++i) {
    if (!index_.emplace(scores_.ids[i], i).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate scored id '" + scores_.ids[i] + "'");
    }
  }
}

std::size_t WeightRule::position(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw Error(ErrorCode::UnscoredId, "no score for '" + std::string(id) + "'");
  return it->second;
}

double WeightRule::belief(std::string_view id) const { return belief_[position(id)]; }

bool WeightRule::active(std::string_view id) const { return scores_.active(scores_.values[position(id)]); }

double WeightRule::weight_of(std::string_view selected, std::string_view candidate) const {
  const std::size_t j = position(selected);
  const std::size_t i = position(candidate);
  if (variant_ == WeightVariant::GateSelected) return scores_.active(scores_.values[j]) ? belief_[i] : 0.0;
  return scores_.active(scores_.values[i]) ? belief_[j] : 0.0;
}

BoundWeights WeightRule::bind(const OperationalDataset& dataset) const {
  BoundWeights bound;
  bound.variant = variant_;
  bound.belief.reserve(dataset.size());
  bound.active.reserve(dataset.size());
  for (const auto& e : dataset.examples()) {
    const std::size_t p = position(e.id);
    bound.belief.push_back(belief_[p]);
    bound.active.push_back(scores_.active(scores_.values[p]) ? 1 : 0);
  }
  return bound;
}

std::filesystem::path sidecar_path(const std::filesystem::path& scores_csv) {
  auto p = scores_csv;
  p += ".json";
  return p;
}

void save_scores(const AuxiliaryScores& scores, const std::filesystem::path& path) {
  scores.validate();
  std::ostringstream csv;
  csv << "id,value\n";
  for (std::size_t i = 0; i < scores.ids.size(); ++i) csv << scores.ids[i] << ',' << io::format_double(scores.values[i]) << '\n';
  io::write_file(path, csv.str());

  json meta = json::object();
  meta["kind"] = std::string(to_string(scores.kind));
  meta["tau"] = scores.tau;
  meta["direction"] = std::string(to_string(scores.direction));
  meta["params"] = json(scores.params);
  meta["warnings"] = json(scores.warnings);
  io::write_file(sidecar_path(path), meta.dump(2) + "\n");
}

AuxiliaryScores load_scores(const std::filesystem::path& path) {
  AuxiliaryScores s;
  try {
    const json meta = json::parse(io::read_file(sidecar_path(path)));
    s.kind = score_kind_from_string(meta.at("kind").get<std::string>());
    s.tau = meta.at("tau").get<double>();
    s.direction = direction_from_string(meta.at("direction").get<std::string>());
    if (meta.contains("params")) s.params = meta["params"].get<std::map<std::string, std::string>>();
    if (meta.contains("warnings")) s.warnings = meta["warnings"].get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRow, std::string("bad scores sidecar: ") + e.what());
  }
  std::istringstream in(io::read_file(path));
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,value") throw Error(ErrorCode::MalformedRow, "scores header must be id,value", 1);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = io::split_csv(line);
    if (cells.size() != 2) throw Error(ErrorCode::MalformedRow, "expected 2 columns", lineno);
    try {
      std::size_t used = 0;
      const double v = std::stod(cells[1], &used);
      if (used != cells[1].size()) throw std::invalid_argument("trailing characters");
      s.ids.push_back(cells[0]);
      s.values.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedRow, "cannot parse score '" + cells[1] + "'", lineno);
    }
  }
  s.validate();
  return s;
}

}  // namespace deepest::aux
