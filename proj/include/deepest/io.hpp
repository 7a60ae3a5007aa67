#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "deepest/types.hpp"

namespace deepest::io {

inline constexpr int kSuiteSchema = 1;

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

// Dataset CSV: id,predicted_label,confidence,true_label (last two may be empty).
OperationalDataset read_dataset(std::istream& in);
OperationalDataset load_dataset(const std::filesystem::path& path);
void write_dataset(std::ostream& out, const OperationalDataset& dataset);
void save_dataset(const OperationalDataset& dataset, const std::filesystem::path& path);

// Traces CSV: id,a0,...,a{m-1}. When `expected_ids` is given every id in it
// must have a row.
ActivationTraceSet read_traces(std::istream& in,
                               const std::vector<std::string>* expected_ids = nullptr);
ActivationTraceSet load_traces(const std::filesystem::path& path,
                               const std::vector<std::string>* expected_ids = nullptr);
void write_traces(std::ostream& out, const ActivationTraceSet& traces);
void save_traces(const ActivationTraceSet& traces, const std::filesystem::path& path);

// Training-reference CSV: id,class,a0,...,a{m-1}.
TrainingReference read_training(std::istream& in);
TrainingReference load_training(const std::filesystem::path& path);
void write_training(std::ostream& out, const TrainingReference& training);
void save_training(const TrainingReference& training, const std::filesystem::path& path);

// Labels CSV: id,true_label.
std::unordered_map<std::string, ClassLabel> read_labels(std::istream& in);
std::unordered_map<std::string, ClassLabel> load_labels(const std::filesystem::path& path);
void save_labels(const OperationalDataset& dataset, const std::filesystem::path& path);

// Suite: JSON Lines. First line is the header
// {"technique","n","seed","N","schema","with_replacement"}, then one record per line.
TestSuite read_suite(std::istream& in);
TestSuite load_suite(const std::filesystem::path& path);
void write_suite(std::ostream& out, const TestSuite& suite);
void save_suite(const TestSuite& suite, const std::filesystem::path& path);

/// Splits a CSV line on commas (no quoting; ids may not contain commas).
std::vector<std::string> split_csv(const std::string& line);

/// Reads the whole file, throwing Io on failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace deepest::io
