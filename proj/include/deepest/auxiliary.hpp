#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "deepest/kernels.hpp"
#include "deepest/types.hpp"

namespace deepest::aux {

enum class ScoreKind { Confidence, Dsa, Lsa, Combined };
/// Side of the threshold on which an example turns its weights on.
enum class Direction { Above, Below };
enum class DsaForm { Ratio, Plain };

std::string_view to_string(ScoreKind k);
ScoreKind score_kind_from_string(std::string_view s);
std::string_view to_string(Direction d);
Direction direction_from_string(std::string_view s);
std::string_view to_string(DsaForm f);
DsaForm dsa_form_from_string(std::string_view s);

inline constexpr double kConfidenceThreshold = 0.7;
inline constexpr double kVarianceFilter = 1e-5;

/// Per-example misprediction-belief values of one kind, aligned with `ids`.
struct AuxiliaryScores {
  ScoreKind kind = ScoreKind::Confidence;
  std::vector<std::string> ids;
  std::vector<double> values;
  double tau = 0.0;
  Direction direction = Direction::Below;
  std::map<std::string, std::string> params;
  std::vector<std::string> warnings;

  bool active(double value) const { return direction == Direction::Above ? value > tau : value < tau; }
  /// Throws InvalidConfig if values are non-finite or out of range for the kind.
  void validate() const;

  friend bool operator==(const AuxiliaryScores& a, const AuxiliaryScores& b) {
    return a.kind == b.kind && a.ids == b.ids && a.values == b.values && a.tau == b.tau &&
           a.direction == b.direction && a.params == b.params;
  }
};

// Thresholds over the operational set. Population moments (divide by N).
double dsa_threshold(std::span<const double> values);  // mean + 2 std
double lsa_threshold(std::span<const double> values);  // mean + var

/// Maps min to 0 and max to 1; all-equal input maps to 0.
std::vector<double> min_max_normalize(std::span<const double> values);

AuxiliaryScores confidence_scores(const OperationalDataset& dataset);

struct DsaOptions {
  DsaForm form = DsaForm::Ratio;
  bool parallel = true;
};

/// Distance-based surprise of each dataset example's trace against the
/// training traces of its predicted class.
AuxiliaryScores compute_dsa(const ActivationTraceSet& op_traces, const OperationalDataset& dataset,
                            const TrainingReference& training, const DsaOptions& options = {});

struct LsaOptions {
  std::optional<double> bandwidth;  // forced bandwidth for every kept dimension
  double variance_filter = kVarianceFilter;
  bool parallel = true;
};

/// Fits the class-conditional density used by LSA. Dimensions whose variance
/// over `points` is below the filter are dropped; bandwidth defaults to
/// Scott's rule per dimension, sigma * n^(-1/(d+4)).
kernels::KdeModel fit_kde(kernels::MatrixView points, const LsaOptions& options);

/// Negative log density of each example's trace under its predicted class KDE.
AuxiliaryScores compute_lsa(const ActivationTraceSet& op_traces, const OperationalDataset& dataset,
                            const TrainingReference& training, const LsaOptions& options = {});

/// P = P_c * (1 - P_d), with P_d the min-max normalized DSA.
AuxiliaryScores combined_scores(const AuxiliaryScores& confidence, const AuxiliaryScores& dsa);

/// Which example gates a weight and which supplies its magnitude.
enum class WeightVariant {
  GateSelected,   // w(i,j) = b(i) when selected j is active
  GateCandidate,  // w(i,j) = b(j) when candidate i is active
};
std::string_view to_string(WeightVariant v);
WeightVariant weight_variant_from_string(std::string_view s);

/// Weights aligned with a dataset's example order. Every weight factorizes as
/// w(i,j) = candidate_factor(i) * selected_factor(j).
struct BoundWeights {
  WeightVariant variant = WeightVariant::GateSelected;
  std::vector<double> belief;
  std::vector<std::uint8_t> active;

  std::size_t size() const { return belief.size(); }
  double weight(std::size_t selected, std::size_t candidate) const {
    return candidate_factor(candidate) * selected_factor(selected);
  }
  double candidate_factor(std::size_t i) const {
    return variant == WeightVariant::GateSelected ? belief[i] : (active[i] ? 1.0 : 0.0);
  }
  double selected_factor(std::size_t j) const {
    return variant == WeightVariant::GateSelected ? (active[j] ? 1.0 : 0.0) : belief[j];
  }
};

/// Pairwise weight rule derived from one score set.
class WeightRule {
 public:
  explicit WeightRule(AuxiliaryScores scores, WeightVariant variant = WeightVariant::GateSelected);

  const AuxiliaryScores& scores() const { return scores_; }
  WeightVariant variant() const { return variant_; }

  /// Belief b(i) in [0,1]: normalized score for DSA/LSA, 1 - value for
  /// confidence and combined.
  double belief(std::string_view id) const;
  bool active(std::string_view id) const;
  /// w(i,j) for already-selected j and candidate i. Throws UnscoredId.
  double weight_of(std::string_view selected, std::string_view candidate) const;

  /// Throws UnscoredId if some dataset example has no score.
  BoundWeights bind(const OperationalDataset& dataset) const;

 private:
  std::size_t position(std::string_view id) const;

  AuxiliaryScores scores_;
  WeightVariant variant_;
  std::vector<double> belief_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Scores CSV `id,value` plus a sidecar `<path>.json` with {kind,tau,direction,params}.
std::filesystem::path sidecar_path(const std::filesystem::path& scores_csv);
void save_scores(const AuxiliaryScores& scores, const std::filesystem::path& path);
AuxiliaryScores load_scores(const std::filesystem::path& path);

}  // namespace deepest::aux
