#include "deepest/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace deepest::kernels {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double t = a[d] - b[d];
    s += t * t;
  }
  return s;
}

ClassPartition ClassPartition::build(std::span<const ClassLabel> class_of) {
  std::map<ClassLabel, std::vector<std::size_t>> grouped;
  for (std::size_t r = 0; r < class_of.size(); ++r) grouped[class_of[r]].push_back(r);
  ClassPartition p;
  for (auto& [label, rows] : grouped) {
    p.labels.push_back(label);
    p.rows.push_back(std::move(rows));
  }
  return p;
}

long ClassPartition::find(ClassLabel label) const {
  auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it == labels.end() || *it != label) return -1;
  return static_cast<long>(it - labels.begin());
}

namespace {

DsaDistances dsa_one(std::span<const double> query, ClassLabel cls, MatrixView reference,
                     const ClassPartition& partition) {
  const auto& same = partition.rows[static_cast<std::size_t>(partition.find(cls))];
  double best = std::numeric_limits<double>::infinity();
  std::size_t nearest = same.front();
  for (std::size_t r : same) {
    const double d = squared_distance(query, reference.row(r));
    if (d < best) {
      best = d;
      nearest = r;
    }
  }
  double other = std::numeric_limits<double>::infinity();
  const auto anchor = reference.row(nearest);
  for (std::size_t c = 0; c < partition.labels.size(); ++c) {
    if (partition.labels[c] == cls) continue;
    for (std::size_t r : partition.rows[c]) other = std::min(other, squared_distance(anchor, reference.row(r)));
  }
  return {std::sqrt(best), std::sqrt(other)};
}

// Log-sum-exp over reference points of -0.5 * ||(x - t) / h||^2.
double kde_log_density_one(const KdeModel& model, std::span<const double> x) {
  const std::size_t d = model.dims.size();
  const std::size_t n = model.size();
  std::vector<double> exponents(n);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double* t = model.points.data() + i * d;
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double u = (x[model.dims[k]] - t[k]) / model.bandwidth[k];
      s += u * u;
    }
    exponents[i] = -0.5 * s;
    peak = std::max(peak, exponents[i]);
  }
  double acc = 0.0;
  for (double e : exponents) acc += std::exp(e - peak);
  return peak + std::log(acc) + model.log_norm;
}

double ces_one(const BinnedTraces& binned, std::span<const std::uint32_t> base_counts,
               std::size_t base_size, std::span<const std::size_t> group, double epsilon,
               std::vector<std::uint32_t>& scratch) {
  const std::size_t bins = binned.bins;
  const double total = static_cast<double>(base_size + group.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < binned.neurons; ++j) {
    std::copy_n(base_counts.begin() + static_cast<std::ptrdiff_t>(j * bins), bins, scratch.begin());
    for (std::size_t row : group) ++scratch[binned.bin_of[row * binned.neurons + j]];
    double ce = 0.0;
    const double* target = binned.target.data() + j * bins;
    for (std::size_t b = 0; b < bins; ++b) {
      if (target[b] == 0.0) continue;
      ce -= target[b] * std::log(static_cast<double>(scratch[b]) / total + epsilon);
    }
    sum += ce;
  }
  return sum / static_cast<double>(binned.neurons);
}

}  // namespace

double KdeModel::log_density(std::span<const double> x) const { return kde_log_density_one(*this, x); }

BinnedTraces BinnedTraces::build(MatrixView traces, std::size_t bins) {
  BinnedTraces out;
  out.rows = traces.rows();
  out.neurons = traces.cols;
  out.bins = bins;
  out.bin_of.assign(out.rows * out.neurons, 0);
  out.target.assign(out.neurons * bins, 0.0);
  for (std::size_t j = 0; j < out.neurons; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t r = 0; r < out.rows; ++r) {
      lo = std::min(lo, traces.row(r)[j]);
      hi = std::max(hi, traces.row(r)[j]);
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t r = 0; r < out.rows; ++r) {
      std::size_t b = 0;
      if (width > 0.0) {
        b = static_cast<std::size_t>((traces.row(r)[j] - lo) / width);
        b = std::min(b, bins - 1);
      }
      out.bin_of[r * out.neurons + j] = static_cast<std::uint16_t>(b);
      out.target[j * bins + b] += 1.0;
    }
    for (std::size_t b = 0; b < bins; ++b) out.target[j * bins + b] /= static_cast<double>(out.rows);
  }
  return out;
}

namespace serial {

std::vector<DsaDistances> dsa_distances(MatrixView queries, std::span<const ClassLabel> query_class,
                                        MatrixView reference, const ClassPartition& partition) {
  std::vector<DsaDistances> out(queries.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dsa_one(queries.row(i), query_class[i], reference, partition);
  return out;
}

std::vector<double> kde_log_density(MatrixView queries, std::span<const std::size_t> model_of,
                                    std::span<const KdeModel> models) {
  std::vector<double> out(queries.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = kde_log_density_one(models[model_of[i]], queries.row(i));
  return out;
}

std::vector<double> ces_cross_entropy(const BinnedTraces& binned, std::span<const std::uint32_t> base_counts,
                                      std::size_t base_size, std::span<const std::size_t> candidates,
                                      std::size_t group_size, double epsilon) {
  const std::size_t groups = candidates.size() / group_size;
  std::vector<double> out(groups);
  std::vector<std::uint32_t> scratch(binned.bins);
  for (std::size_t g = 0; g < groups; ++g) {
    out[g] = ces_one(binned, base_counts, base_size, candidates.subspan(g * group_size, group_size), epsilon,
                     scratch);
  }
  return out;
}

}  // namespace serial

namespace parallel {

std::vector<DsaDistances> dsa_distances(MatrixView queries, std::span<const ClassLabel> query_class,
                                        MatrixView reference, const ClassPartition& partition) {
  const auto n = static_cast<std::ptrdiff_t>(queries.rows());
  std::vector<DsaDistances> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = dsa_one(queries.row(k), query_class[k], reference, partition);
  }
  return out;
}

std::vector<double> kde_log_density(MatrixView queries, std::span<const std::size_t> model_of,
                                    std::span<const KdeModel> models) {
  const auto n = static_cast<std::ptrdiff_t>(queries.rows());
  std::vector<double> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = kde_log_density_one(models[model_of[k]], queries.row(k));
  }
  return out;
}

std::vector<double> ces_cross_entropy(const BinnedTraces& binned, std::span<const std::uint32_t> base_counts,
                                      std::size_t base_size, std::span<const std::size_t> candidates,
                                      std::size_t group_size, double epsilon) {
  const auto groups = static_cast<std::ptrdiff_t>(candidates.size() / group_size);
  std::vector<double> out(static_cast<std::size_t>(groups));
#pragma omp parallel
  {
    std::vector<std::uint32_t> scratch(binned.bins);
#pragma omp for schedule(static)
    for (std::ptrdiff_t g = 0; g < groups; ++g) {
      const auto k = static_cast<std::size_t>(g);
      out[k] = ces_one(binned, base_counts, base_size, candidates.subspan(k * group_size, group_size), epsilon,
                       scratch);
    }
  }
  return out;
}

}  // namespace parallel
}  // namespace deepest::kernels
