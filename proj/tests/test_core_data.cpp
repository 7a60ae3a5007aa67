#include <gtest/gtest.h>

#include <sstream>

#include "deepest/io.hpp"
#include "deepest/rng.hpp"
#include "test_util.hpp"

using namespace deepest;
using test::error_code_of;
using test::make_example;

namespace {

OperationalDataset parse_dataset(const std::string& text) {
  std::istringstream in(text);
  return io::read_dataset(in);
}

ActivationTraceSet parse_traces(const std::string& text, const std::vector<std::string>* ids = nullptr) {
  std::istringstream in(text);
  return io::read_traces(in, ids);
}

TestSuite parse_suite(const std::string& text) {
  std::istringstream in(text);
  return io::read_suite(in);
}

TestSuite sample_suite() {
  TestSuite s;
  s.technique = Technique::Deepest;
  s.n = 3;
  s.seed = 42;
  s.population = 10;
  s.records = {{1, "a", Scheme::FirstSrs, 0.1, 0}, {2, "b", Scheme::Wbs, 1.0 / 3.0, 1}, {3, "c", Scheme::Srs, 0.125, std::nullopt}};
  return s;
}

}  // namespace

TEST(Dataset, ParsesRowsInOrder) {
  const auto d = parse_dataset("id,predicted_label,confidence,true_label\na,1,0.5,1\nb,2,,\nc,0,1,3\n");
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[0].id, "a");
  EXPECT_EQ(d[2].id, "c");
  EXPECT_FALSE(d[1].confidence.has_value());
  EXPECT_FALSE(d[1].labelled());
  EXPECT_EQ(d[0].outcome(), 0);
  EXPECT_EQ(d[2].outcome(), 1);
  EXPECT_EQ(d.index_of("b"), 1u);
}

TEST(Dataset, DuplicateIdReportsLine) {
  try {
    parse_dataset("id,predicted_label,confidence,true_label\na,1,0.5,\nb,1,0.5,\na,1,0.5,\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateId);
    ASSERT_TRUE(e.line().has_value());
    EXPECT_EQ(*e.line(), 4u);
  }
}

TEST(Dataset, HeaderOnlyIsEmptyPopulation) {
  EXPECT_EQ(error_code_of([] { parse_dataset("id,predicted_label,confidence,true_label\n"); }), ErrorCode::EmptyPopulation);
}

TEST(Dataset, RejectsBadRows) {
  EXPECT_EQ(error_code_of([] { parse_dataset("id,predicted_label,confidence,true_label\na,1,1.5,\n"); }),
            ErrorCode::ConfidenceOutOfRange);
  EXPECT_EQ(error_code_of([] { parse_dataset("id,predicted_label,confidence,true_label\na,x,0.5,\n"); }),
            ErrorCode::MalformedRow);
  EXPECT_EQ(error_code_of([] { parse_dataset("id,predicted_label,confidence,true_label\na,1,0.5\n"); }),
            ErrorCode::MalformedRow);
  EXPECT_EQ(error_code_of([] { parse_dataset("id,label\na,1\n"); }), ErrorCode::MalformedRow);
}

TEST(Dataset, OutcomeOfUnlabelledThrows) {
  const auto e = make_example("a", 1);
  EXPECT_EQ(error_code_of([&] { (void)e.outcome(); }), ErrorCode::Unlabelled);
}

TEST(Dataset, AccuracyAndFailures) {
  const auto d = test::labelled_population(10, {1, 4});
  EXPECT_DOUBLE_EQ(d.accuracy(), 0.8);
  EXPECT_EQ(d.failure_count(), 2u);
}

TEST(Dataset, WithLabelsMerges) {
  const auto d = parse_dataset("id,predicted_label,confidence,true_label\na,1,0.5,\nb,2,0.5,\n");
  const auto l = d.with_labels({{"a", 1}, {"b", 3}});
  EXPECT_TRUE(l.fully_labelled());
  EXPECT_EQ(l[1].outcome(), 1);
  EXPECT_EQ(error_code_of([&] { d.with_labels({{"zz", 1}}); }), ErrorCode::IdMismatch);
}

TEST(Dataset, RoundTripProperty) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Example> v;
    const std::size_t n = 1 + rng.index(30);
    for (std::size_t i = 0; i < n; ++i) {
      auto e = make_example("id" + std::to_string(i), static_cast<int>(rng.index(5)));
      if (rng.uniform() < 0.8) e.confidence = rng.uniform();
      if (rng.uniform() < 0.5) e.true_label = static_cast<int>(rng.index(5));
      v.push_back(e);
    }
    const OperationalDataset d(v);
    std::ostringstream out;
    io::write_dataset(out, d);
    EXPECT_EQ(parse_dataset(out.str()), d);
  }
}

TEST(Traces, ParsesDimension) {
  const auto t = parse_traces("id,a0,a1,a2,a3\nx,1,2,3,4\ny,5,6,7,8.5\n");
  EXPECT_EQ(t.dim(), 4u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_DOUBLE_EQ(t.row(1)[3], 8.5);
}

TEST(Traces, NonFiniteAndMissing) {
  EXPECT_EQ(error_code_of([] { parse_traces("id,a0,a1\nx,1,nan\n"); }), ErrorCode::NonFiniteTrace);
  const std::vector<std::string> ids{"x", "z"};
  EXPECT_EQ(error_code_of([&] { parse_traces("id,a0\nx,1\n", &ids); }), ErrorCode::MissingTrace);
  EXPECT_EQ(error_code_of([] { parse_traces("id,a0,a1\nx,1\n"); }), ErrorCode::RaggedTrace);
}

TEST(Traces, TrainingRoundTrip) {
  TrainingReference t(ActivationTraceSet(2, {"t0", "t1"}, {0.1, -2.0, 1e-300, 3.25}), {0, 4});
  std::ostringstream out;
  io::write_training(out, t);
  std::istringstream in(out.str());
  EXPECT_EQ(io::read_training(in), t);
}

TEST(Suite, RoundTrip) {
  const auto s = sample_suite();
  std::ostringstream out;
  io::write_suite(out, s);
  EXPECT_EQ(parse_suite(out.str()), s);
}

TEST(Suite, RoundTripProperty) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    TestSuite s;
    s.technique = static_cast<Technique>(rng.index(4));
    s.population = 100;
    s.n = 1 + rng.index(20);
    s.seed = rng.index(1u << 30);
    for (std::size_t k = 1; k <= s.n; ++k) {
      const std::string id = s.with_replacement() ? "e" + std::to_string(rng.index(3)) : "e" + std::to_string(k);
      std::optional<int> y;
      if (rng.uniform() < 0.5) y = static_cast<int>(rng.index(2));
      s.records.push_back({k, id, static_cast<Scheme>(rng.index(3)), 1.0 / (1.0 + rng.uniform() * 99.0), y});
    }
    std::ostringstream out;
    io::write_suite(out, s);
    EXPECT_EQ(parse_suite(out.str()), s);
  }
}

TEST(Suite, DuplicateIdIsReplacementViolation) {
  const std::string text =
      R"({"N":10,"n":2,"schema":1,"seed":1,"technique":"srswor","with_replacement":false})"
      "\n"
      R"({"example_id":"a","outcome":null,"q":0.1,"scheme":"SRS","step":1})"
      "\n"
      R"({"example_id":"a","outcome":null,"q":0.1,"scheme":"SRS","step":2})"
      "\n";
  EXPECT_EQ(error_code_of([&] { parse_suite(text); }), ErrorCode::ReplacementViolation);
}

TEST(Suite, MissingQ) {
  const std::string text =
      R"({"N":10,"n":1,"schema":1,"seed":1,"technique":"srswor","with_replacement":false})"
      "\n"
      R"({"example_id":"a","outcome":null,"scheme":"SRS","step":1})"
      "\n";
  EXPECT_EQ(error_code_of([&] { parse_suite(text); }), ErrorCode::MissingProbability);
}

TEST(Suite, SchemaMismatch) {
  const std::string text =
      R"({"N":10,"n":0,"schema":99,"seed":1,"technique":"srswor","with_replacement":false})"
      "\n";
  EXPECT_EQ(error_code_of([&] { parse_suite(text); }), ErrorCode::SchemaMismatch);
}

TEST(Suite, LabelledFromDataset) {
  const auto d = test::labelled_population(5, {2});
  TestSuite s;
  s.technique = Technique::Srswor;
  s.n = 2;
  s.population = 5;
  s.records = {{1, "e2", Scheme::Srs, 0.2, std::nullopt}, {2, "e0", Scheme::Srs, 0.25, std::nullopt}};
  const auto l = s.labelled_from(d);
  EXPECT_TRUE(l.labelled());
  EXPECT_EQ(*l.records[0].outcome, 1);
  EXPECT_EQ(*l.records[1].outcome, 0);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(11), b(11);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.index(1000), b.index(1000));
  Rng c(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  EXPECT_EQ(repetition_seed(100, 7), 107u);
}
