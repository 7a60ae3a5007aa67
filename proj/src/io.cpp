#include "deepest/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "deepest/error.hpp"

namespace deepest::io {
namespace {

using json = nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, std::size_t line, const char* what) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    // from_chars rejects "nan"/"inf" spellings on some libstdc++ builds; accept them
    // here so that the non-finite check downstream reports the right error.
    if (text == "nan" || text == "NaN" || text == "NAN") return std::nan("");
    if (text == "inf" || text == "Inf") return INFINITY;
    if (text == "-inf" || text == "-Inf") return -INFINITY;
    throw Error(ErrorCode::MalformedRow, std::string("cannot parse ") + what + " '" + text + "'", line);
  }
  return v;
}

long long parse_int(const std::string& text, std::size_t line, const char* what) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::MalformedRow, std::string("cannot parse ") + what + " '" + text + "'", line);
  }
  return v;
}

ClassLabel parse_label(const std::string& text, std::size_t line, const char* what) {
  const long long v = parse_int(text, line, what);
  if (v < 0 || v > std::numeric_limits<ClassLabel>::max()) {
    throw Error(ErrorCode::MalformedRow, std::string(what) + " must be a non-negative class index", line);
  }
  return static_cast<ClassLabel>(v);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  return in;
}

template <class Writer, class Value>
void save_with(const std::filesystem::path& path, Writer writer, const Value& value) {
  std::ostringstream out;
  writer(out, value);
  write_file(path, out.str());
}

// Rows shared by the traces and training formats. `header_prefix` names the
// columns before a0; the second prefix column, when present, lands in `leading`.
struct TraceTable {
  std::size_t m = 0;
  std::vector<std::string> ids;
  std::vector<std::string> leading;
  std::vector<double> values;
  std::vector<std::size_t> lines;
};

TraceTable read_trace_table(std::istream& in, const std::vector<std::string>& header_prefix) {
  TraceTable table;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedRow, "missing header", 1);
  const auto header = split_csv(trim(line));
  if (header.size() <= header_prefix.size()) {
    throw Error(ErrorCode::MalformedRow, "header has no activation columns", 1);
  }
  for (std::size_t c = 0; c < header_prefix.size(); ++c) {
    if (header[c] != header_prefix[c]) {
      throw Error(ErrorCode::MalformedRow, "expected column '" + header_prefix[c] + "'", 1);
    }
  }
  table.m = header.size() - header_prefix.size();
  for (std::size_t a = 0; a < table.m; ++a) {
    if (header[header_prefix.size() + a] != "a" + std::to_string(a)) {
      throw Error(ErrorCode::MalformedRow, "expected column 'a" + std::to_string(a) + "'", 1);
    }
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::RaggedTrace,
                  "row has " + std::to_string(cells.size()) + " columns, expected " +
                      std::to_string(header.size()),
                  lineno);
    }
    table.ids.push_back(cells[0]);
    if (header_prefix.size() == 2) table.leading.push_back(cells[1]);
    for (std::size_t a = 0; a < table.m; ++a) {
      const double v = parse_double(cells[header_prefix.size() + a], lineno, "activation");
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::NonFiniteTrace, "non-finite trace for '" + cells[0] + "'", lineno);
      }
      table.values.push_back(v);
    }
    table.lines.push_back(lineno);
  }
  return table;
}

void write_trace_header(std::ostream& out, const char* prefix, std::size_t m) {
  out << prefix;
  for (std::size_t a = 0; a < m; ++a) out << ",a" << a;
  out << '\n';
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error(ErrorCode::Io, "cannot format double");
  return std::string(buf, ptr);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

std::string read_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
    out << contents;
    if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot rename into '" + path.string() + "': " + ec.message());
}

// ---------------------------------------------------------------- dataset

OperationalDataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::EmptyPopulation, "empty dataset file", 1);
  const auto header = split_csv(trim(line));
  const std::vector<std::string> expected{"id", "predicted_label", "confidence", "true_label"};
  if (header != expected) {
    throw Error(ErrorCode::MalformedRow, "header must be id,predicted_label,confidence,true_label", 1);
  }
  std::vector<Example> examples;
  std::unordered_set<std::string> seen;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 4) throw Error(ErrorCode::MalformedRow, "expected 4 columns", lineno);
    Example e;
    e.id = cells[0];
    if (e.id.empty()) throw Error(ErrorCode::MalformedRow, "empty id", lineno);
    if (!seen.insert(e.id).second) throw Error(ErrorCode::DuplicateId, "duplicate id '" + e.id + "'", lineno);
    e.predicted_label = parse_label(cells[1], lineno, "predicted_label");
    if (!cells[2].empty()) {
      const double c = parse_double(cells[2], lineno, "confidence");
      if (!(c >= 0.0 && c <= 1.0)) {
        throw Error(ErrorCode::ConfidenceOutOfRange, "confidence of '" + e.id + "' outside [0,1]", lineno);
      }
      e.confidence = c;
    }
    if (!cells[3].empty()) e.true_label = parse_label(cells[3], lineno, "true_label");
    examples.push_back(std::move(e));
  }
  if (examples.empty()) throw Error(ErrorCode::EmptyPopulation, "dataset has no examples");
  return OperationalDataset(std::move(examples));
}

OperationalDataset load_dataset(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_dataset(in);
}

void write_dataset(std::ostream& out, const OperationalDataset& dataset) {
  out << "id,predicted_label,confidence,true_label\n";
  for (const auto& e : dataset.examples()) {
    out << e.id << ',' << e.predicted_label << ',';
    if (e.confidence) out << format_double(*e.confidence);
    out << ',';
    if (e.true_label) out << *e.true_label;
    out << '\n';
  }
}

void save_dataset(const OperationalDataset& dataset, const std::filesystem::path& path) {
  save_with(path, write_dataset, dataset);
}

// ---------------------------------------------------------------- traces

ActivationTraceSet read_traces(std::istream& in, const std::vector<std::string>* expected_ids) {
  auto table = read_trace_table(in, {"id"});
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < table.ids.size(); ++r) {
    if (!seen.insert(table.ids[r]).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate trace id '" + table.ids[r] + "'", table.lines[r]);
    }
  }
  ActivationTraceSet set(table.m, std::move(table.ids), std::move(table.values));
  if (expected_ids) set.require(*expected_ids);
  return set;
}

ActivationTraceSet load_traces(const std::filesystem::path& path,
                               const std::vector<std::string>* expected_ids) {
  auto in = open_in(path);
  return read_traces(in, expected_ids);
}

void write_traces(std::ostream& out, const ActivationTraceSet& traces) {
  write_trace_header(out, "id", traces.dim());
  for (std::size_t r = 0; r < traces.rows(); ++r) {
    out << traces.ids()[r];
    for (double v : traces.row(r)) out << ',' << format_double(v);
    out << '\n';
  }
}

void save_traces(const ActivationTraceSet& traces, const std::filesystem::path& path) {
  save_with(path, write_traces, traces);
}

// ---------------------------------------------------------------- training reference

TrainingReference read_training(std::istream& in) {
  auto table = read_trace_table(in, {"id", "class"});
  std::vector<ClassLabel> classes;
  classes.reserve(table.ids.size());
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < table.ids.size(); ++r) {
    if (table.leading[r].empty()) {
      throw Error(ErrorCode::MalformedRow, "training trace without class", table.lines[r]);
    }
    if (!seen.insert(table.ids[r]).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate training id '" + table.ids[r] + "'", table.lines[r]);
    }
    classes.push_back(parse_label(table.leading[r], table.lines[r], "class"));
  }
  ActivationTraceSet set(table.m, std::move(table.ids), std::move(table.values));
  return TrainingReference(std::move(set), std::move(classes));
}

TrainingReference load_training(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_training(in);
}

void write_training(std::ostream& out, const TrainingReference& training) {
  write_trace_header(out, "id,class", training.traces.dim());
  for (std::size_t r = 0; r < training.traces.rows(); ++r) {
    out << training.traces.ids()[r] << ',' << training.class_of[r];
    for (double v : training.traces.row(r)) out << ',' << format_double(v);
    out << '\n';
  }
}

void save_training(const TrainingReference& training, const std::filesystem::path& path) {
  save_with(path, write_training, training);
}

// ---------------------------------------------------------------- labels

std::unordered_map<std::string, ClassLabel> read_labels(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedRow, "missing header", 1);
  const auto header = split_csv(trim(line));
  if (header != std::vector<std::string>{"id", "true_label"}) {
    throw Error(ErrorCode::MalformedRow, "header must be id,true_label", 1);
  }
  std::unordered_map<std::string, ClassLabel> labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 2) throw Error(ErrorCode::MalformedRow, "expected 2 columns", lineno);
    if (!labels.emplace(cells[0], parse_label(cells[1], lineno, "true_label")).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate id '" + cells[0] + "'", lineno);
    }
  }
  return labels;
}

std::unordered_map<std::string, ClassLabel> load_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_labels(in);
}

void save_labels(const OperationalDataset& dataset, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "id,true_label\n";
  for (const auto& e : dataset.examples()) {
    if (!e.true_label) throw Error(ErrorCode::Unlabelled, "example '" + e.id + "' has no true label");
    out << e.id << ',' << *e.true_label << '\n';
  }
  write_file(path, out.str());
}

// ---------------------------------------------------------------- suite

TestSuite read_suite(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidSuite, "empty suite file", 1);
  TestSuite suite;
  bool with_replacement = false;
  try {
    const json header = json::parse(line);
    const int schema = header.at("schema").get<int>();
    if (schema != kSuiteSchema) {
      throw Error(ErrorCode::SchemaMismatch,
                  "suite schema " + std::to_string(schema) + ", expected " + std::to_string(kSuiteSchema), 1);
    }
    suite.technique = technique_from_string(header.at("technique").get<std::string>());
    suite.n = header.at("n").get<std::size_t>();
    suite.seed = header.at("seed").get<std::uint64_t>();
    suite.population = header.at("N").get<std::size_t>();
    with_replacement = header.value("with_replacement", false);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidSuite, std::string("bad suite header: ") + e.what(), 1);
  }
  if (with_replacement != suite.with_replacement()) {
    throw Error(ErrorCode::InvalidSuite, "with_replacement flag inconsistent with technique", 1);
  }

  std::unordered_set<std::string> seen;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    SelectionRecord r;
    try {
      const json rec = json::parse(line);
      r.step = rec.at("step").get<std::size_t>();
      r.example_id = rec.at("example_id").get<std::string>();
      r.scheme = scheme_from_string(rec.at("scheme").get<std::string>());
      if (!rec.contains("q") || rec["q"].is_null()) {
        throw Error(ErrorCode::MissingProbability, "record without q", lineno);
      }
      r.q = rec.at("q").get<double>();
      if (rec.contains("outcome") && !rec["outcome"].is_null()) r.outcome = rec["outcome"].get<int>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidSuite, std::string("bad record: ") + e.what(), lineno);
    }
    if (!suite.with_replacement() && !seen.insert(r.example_id).second) {
      throw Error(ErrorCode::ReplacementViolation, "example '" + r.example_id + "' selected twice", lineno);
    }
    suite.records.push_back(std::move(r));
  }
  suite.validate();
  return suite;
}

TestSuite load_suite(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_suite(in);
}

void write_suite(std::ostream& out, const TestSuite& suite) {
  suite.validate();
  json header = json::object();
  header["technique"] = std::string(to_string(suite.technique));
  header["n"] = suite.n;
  header["seed"] = suite.seed;
  header["N"] = suite.population;
  header["schema"] = kSuiteSchema;
  header["with_replacement"] = suite.with_replacement();
  out << header.dump() << '\n';
  for (const auto& r : suite.records) {
    json rec = json::object();
    rec["step"] = r.step;
    rec["example_id"] = r.example_id;
    rec["scheme"] = std::string(to_string(r.scheme));
    rec["q"] = r.q;
    rec["outcome"] = r.outcome ? json(*r.outcome) : json(nullptr);
    out << rec.dump() << '\n';
  }
}

void save_suite(const TestSuite& suite, const std::filesystem::path& path) {
  save_with(path, write_suite, suite);
}

}  // namespace deepest::io
