#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an OpenMP
// version; per-element arithmetic is identical in both, so results agree
// bit-for-bit regardless of thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "deepest/types.hpp"

namespace deepest::kernels {

/// Row-major matrix view.
struct MatrixView {
  std::span<const double> data;
  std::size_t cols = 0;

  std::size_t rows() const { return cols == 0 ? 0 : data.size() / cols; }
  std::span<const double> row(std::size_t r) const { return data.subspan(r * cols, cols); }
};

double squared_distance(std::span<const double> a, std::span<const double> b);

/// Training rows grouped by class, for nearest-neighbour queries.
struct ClassPartition {
  std::vector<ClassLabel> labels;               // sorted distinct classes
  std::vector<std::vector<std::size_t>> rows;   // training rows per class, same order

  static ClassPartition build(std::span<const ClassLabel> class_of);
  /// Position of `label` in `labels`, or -1.
  long find(ClassLabel label) const;
};

struct DsaDistances {
  double dist_a = 0.0;  // query to nearest same-class reference
  double dist_b = 0.0;  // that reference to nearest other-class reference
};

/// For each query row, distances against the reference. `query_class[i]` must
/// be a class present in `partition` and at least one other class must exist.
namespace serial {
std::vector<DsaDistances> dsa_distances(MatrixView queries, std::span<const ClassLabel> query_class,
                                        MatrixView reference, const ClassPartition& partition);
}
namespace parallel {
std::vector<DsaDistances> dsa_distances(MatrixView queries, std::span<const ClassLabel> query_class,
                                        MatrixView reference, const ClassPartition& partition);
}

/// Gaussian product-kernel density with a diagonal bandwidth, evaluated on a
/// subset of the input dimensions.
struct KdeModel {
  std::vector<std::size_t> dims;   // input dimensions kept
  std::vector<double> bandwidth;   // one per kept dimension
  std::vector<double> points;      // reference points, row-major, dims.size() columns
  double log_norm = 0.0;           // -log(n) - sum log h - d/2 log(2 pi)

  std::size_t size() const { return dims.empty() ? 0 : points.size() / dims.size(); }
  double log_density(std::span<const double> x) const;
};

namespace serial {
/// log f(x) for each query row, using model `models[model_of[i]]`.
std::vector<double> kde_log_density(MatrixView queries, std::span<const std::size_t> model_of,
                                    std::span<const KdeModel> models);
}
namespace parallel {
std::vector<double> kde_log_density(MatrixView queries, std::span<const std::size_t> model_of,
                                    std::span<const KdeModel> models);
}

/// Per-neuron histogram state for cross-entropy subset scoring.
struct BinnedTraces {
  std::size_t rows = 0;
  std::size_t neurons = 0;
  std::size_t bins = 0;
  std::vector<std::uint16_t> bin_of;   // rows x neurons
  std::vector<double> target;          // neurons x bins, operational distribution

  /// Equal-width bins over each neuron's min-max range. Constant neurons map to bin 0.
  static BinnedTraces build(MatrixView traces, std::size_t bins);
};

/// Mean over neurons of -sum_b target(b) * log(p(b) + epsilon), where p is the
/// histogram of the base selection enlarged by each candidate group.
/// `base_counts` is neurons x bins; `candidates` is groups x group_size row indices.
namespace serial {
std::vector<double> ces_cross_entropy(const BinnedTraces& binned, std::span<const std::uint32_t> base_counts,
                                      std::size_t base_size, std::span<const std::size_t> candidates,
                                      std::size_t group_size, double epsilon);
}
namespace parallel {
std::vector<double> ces_cross_entropy(const BinnedTraces& binned, std::span<const std::uint32_t> base_counts,
                                      std::size_t base_size, std::span<const std::size_t> candidates,
                                      std::size_t group_size, double epsilon);
}

}  // namespace deepest::kernels
