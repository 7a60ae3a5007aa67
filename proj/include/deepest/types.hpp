#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace deepest {

using ClassLabel = int;

/// One element of the operational dataset.
struct Example {
  std::string id;
  ClassLabel predicted_label = 0;
  std::optional<double> confidence;
  std::optional<ClassLabel> true_label;
  std::optional<std::size_t> trace_ref;

  bool labelled() const { return true_label.has_value(); }
  /// Outcome y: 1 for a misprediction, 0 for a correct prediction.
  /// Requires a true label.
  int outcome() const;

  friend bool operator==(const Example&, const Example&) = default;
};

/// The population being sampled. Examples keep file order; ids are unique.
class OperationalDataset {
 public:
  /// Throws EmptyPopulation, DuplicateId or ConfidenceOutOfRange.
  explicit OperationalDataset(std::vector<Example> examples);

  std::size_t size() const { return examples_.size(); }
  const Example& operator[](std::size_t i) const { return examples_[i]; }
  const std::vector<Example>& examples() const { return examples_; }

  std::optional<std::size_t> find(std::string_view id) const;
  /// Throws IdMismatch when `id` is absent.
  std::size_t index_of(std::string_view id) const;

  bool fully_labelled() const;
  /// Exact population accuracy: share of examples predicted correctly.
  double accuracy() const;
  std::size_t failure_count() const;

  /// Copy with true labels replaced from `labels` (id -> label); ids missing
  /// from the map keep their current label. Throws IdMismatch for unknown ids.
  OperationalDataset with_labels(const std::unordered_map<std::string, ClassLabel>& labels) const;

  friend bool operator==(const OperationalDataset& a, const OperationalDataset& b) {
    return a.examples_ == b.examples_;
  }

 private:
  std::vector<Example> examples_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Activation traces: one row of `m` finite reals per example id.
class ActivationTraceSet {
 public:
  ActivationTraceSet() = default;
  /// `values` is row-major, ids.size() x m. Throws RaggedTrace, NonFiniteTrace,
  /// DuplicateId.
  ActivationTraceSet(std::size_t m, std::vector<std::string> ids, std::vector<double> values);

  std::size_t dim() const { return m_; }
  std::size_t rows() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<double>& values() const { return values_; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * m_, m_}; }
  std::optional<std::size_t> find(std::string_view id) const;

  /// Throws MissingTrace for the first id not present.
  void require(const std::vector<std::string>& ids) const;

  friend bool operator==(const ActivationTraceSet& a, const ActivationTraceSet& b) {
    return a.m_ == b.m_ && a.ids_ == b.ids_ && a.values_ == b.values_;
  }

 private:
  std::size_t m_ = 0;
  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Training activation traces with the class of each row.
struct TrainingReference {
  ActivationTraceSet traces;
  std::vector<ClassLabel> class_of;  // aligned with traces rows

  TrainingReference() = default;
  TrainingReference(ActivationTraceSet t, std::vector<ClassLabel> classes);

  friend bool operator==(const TrainingReference&, const TrainingReference&) = default;
};

enum class Scheme { FirstSrs, Wbs, Srs };
std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view s);

enum class Technique { Srswr, Srswor, Ces, Deepest };
std::string_view to_string(Technique t);
Technique technique_from_string(std::string_view s);

struct SelectionRecord {
  std::size_t step = 0;  // 1-based
  std::string example_id;
  Scheme scheme = Scheme::Srs;
  double q = 0.0;
  std::optional<int> outcome;  // 1 = misprediction

  friend bool operator==(const SelectionRecord&, const SelectionRecord&) = default;
};

/// An ordered test selection. Records hold distinct ids unless the technique
/// samples with replacement.
struct TestSuite {
  Technique technique = Technique::Srswor;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t population = 0;  // N at selection time
  std::vector<SelectionRecord> records;

  bool with_replacement() const { return technique == Technique::Srswr; }
  bool labelled() const;
  /// Throws InvalidSuite, InvalidProbability or ReplacementViolation.
  void validate() const;
  /// Copy with every record's outcome set from `dataset` true labels.
  TestSuite labelled_from(const OperationalDataset& dataset) const;

  friend bool operator==(const TestSuite&, const TestSuite&) = default;
};

}  // namespace deepest
