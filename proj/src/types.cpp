#include "deepest/types.hpp"

#include <cmath>
#include <unordered_set>

#include "deepest/error.hpp"

namespace deepest {

int Example::outcome() const {
  if (!true_label) throw Error(ErrorCode::Unlabelled, "example '" + id + "' has no true label");
  return *true_label == predicted_label ? 0 : 1;
}

OperationalDataset::OperationalDataset(std::vector<Example> examples)
    : examples_(std::move(examples)) {
  if (examples_.empty()) throw Error(ErrorCode::EmptyPopulation, "dataset has no examples");
  index_.reserve(examples_.size());
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    const Example& e = examples_[i];
    if (e.confidence && !(*e.confidence >= 0.0 && *e.confidence <= 1.0)) {
      throw Error(ErrorCode::ConfidenceOutOfRange, "confidence of '" + e.id + "' outside [0,1]");
    }
    if (!index_.emplace(e.id, i).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate id '" + e.id + "'");
    }
  }
}

std::optional<std::size_t> OperationalDataset::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t OperationalDataset::index_of(std::string_view id) const {
  if (auto i = find(id)) return *i;
  throw Error(ErrorCode::IdMismatch, "id '" + std::string(id) + "' not in dataset");
}

bool OperationalDataset::fully_labelled() const {
  for (const auto& e : examples_)
    if (!e.labelled()) return false;
  return true;
}

std::size_t OperationalDataset::failure_count() const {
  std::size_t failures = 0;
  for (const auto& e : examples_) failures += static_cast<std::size_t>(e.outcome());
  return failures;
}

double OperationalDataset::accuracy() const {
  const std::size_t failures = failure_count();
  return static_cast<double>(examples_.size() - failures) / static_cast<double>(examples_.size());
}

OperationalDataset OperationalDataset::with_labels(
    const std::unordered_map<std::string, ClassLabel>& labels) const {
  std::vector<Example> copy = examples_;
  for (const auto& [id, label] : labels) {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorCode::IdMismatch, "label for unknown id '" + id + "'");
    copy[it->second].true_label = label;
  }
  return OperationalDataset(std::move(copy));
}

ActivationTraceSet::ActivationTraceSet(std::size_t m, std::vector<std::string> ids,
                                       std::vector<double> values)
    : m_(m), ids_(std::move(ids)), values_(std::move(values)) {
  if (m_ == 0) throw Error(ErrorCode::RaggedTrace, "trace dimensionality must be positive");
  if (values_.size() != ids_.size() * m_) {
    throw Error(ErrorCode::RaggedTrace, "trace matrix is not rows x m");
  }
  index_.reserve(ids_.size());
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    for (double v : row(r)) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteTrace, "non-finite trace for '" + ids_[r] + "'");
    }
    if (!index_.emplace(ids_[r], r).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate trace id '" + ids_[r] + "'");
    }
  }
}

std::optional<std::size_t> ActivationTraceSet::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void ActivationTraceSet::require(const std::vector<std::string>& ids) const {
  for (const auto& id : ids) {
    if (!find(id)) throw Error(ErrorCode::MissingTrace, "no trace for '" + id + "'");
  }
}

TrainingReference::TrainingReference(ActivationTraceSet t, std::vector<ClassLabel> classes)
    : traces(std::move(t)), class_of(std::move(classes)) {
  if (class_of.size() != traces.rows()) {
    throw Error(ErrorCode::MalformedRow, "every training trace needs a class label");
  }
}

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::FirstSrs: return "FIRST_SRS";
    case Scheme::Wbs: return "WBS";
    case Scheme::Srs: return "SRS";
  }
  return "SRS";
}

Scheme scheme_from_string(std::string_view s) {
  if (s == "FIRST_SRS") return Scheme::FirstSrs;
  if (s == "WBS") return Scheme::Wbs;
  if (s == "SRS") return Scheme::Srs;
  throw Error(ErrorCode::InvalidSuite, "unknown scheme '" + std::string(s) + "'");
}

std::string_view to_string(Technique t) {
  switch (t) {
    case Technique::Srswr: return "srswr";
    case Technique::Srswor: return "srswor";
    case Technique::Ces: return "ces";
    case Technique::Deepest: return "deepest";
  }
  return "srswor";
}

Technique technique_from_string(std::string_view s) {
  if (s == "srswr") return Technique::Srswr;
  if (s == "srswor") return Technique::Srswor;
  if (s == "ces") return Technique::Ces;
  if (s == "deepest") return Technique::Deepest;
  throw Error(ErrorCode::InvalidConfig, "unknown technique '" + std::string(s) + "'");
}

bool TestSuite::labelled() const {
  for (const auto& r : records)
    if (!r.outcome) return false;
  return true;
}

void TestSuite::validate() const {
  if (records.size() != n) throw Error(ErrorCode::InvalidSuite, "record count differs from n");
  if (!with_replacement() && n > population) {
    throw Error(ErrorCode::InvalidSuite, "n exceeds population size");
  }
  std::unordered_set<std::string> seen;
  std::size_t prev_step = 0;
  for (const auto& r : records) {
    if (r.step <= prev_step) throw Error(ErrorCode::OutOfOrder, "steps not strictly increasing");
    prev_step = r.step;
    if (!(r.q > 0.0 && r.q <= 1.0)) {
      throw Error(ErrorCode::InvalidProbability, "q outside (0,1] at step " + std::to_string(r.step));
    }
    if (r.outcome && *r.outcome != 0 && *r.outcome != 1) {
      throw Error(ErrorCode::InvalidSuite, "outcome must be 0 or 1");
    }
    if (!with_replacement() && !seen.insert(r.example_id).second) {
      throw Error(ErrorCode::ReplacementViolation, "example '" + r.example_id + "' selected twice");
    }
  }
}

TestSuite TestSuite::labelled_from(const OperationalDataset& dataset) const {
  TestSuite out = *this;
  for (auto& r : out.records) r.outcome = dataset[dataset.index_of(r.example_id)].outcome();
  return out;
}

}  // namespace deepest
