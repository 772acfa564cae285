#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "orion/evaluation.hpp"
#include "orion/text.hpp"
#include "support.hpp"

namespace orion {
namespace {

using Ids = std::vector<std::string>;
using Gold = std::set<std::string>;

// Independent LCS by memoized recursion, F1 as 2PR/(P+R).
double OracleRougeL(const std::string& cand, const std::string& ref) {
  auto a = text::SplitWhitespace(text::ToLower(cand));
  auto b = text::SplitWhitespace(text::ToLower(ref));
  if (a.empty() || b.empty()) return 0.0;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> lcs = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size() || j == b.size()) return 0;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t v = a[i] == b[j] ? 1 + lcs(i + 1, j + 1) : std::max(lcs(i + 1, j), lcs(i, j + 1));
    return memo[key] = v;
  };
  double l = static_cast<double>(lcs(0, 0));
  if (l == 0) return 0.0;
  double p = l / a.size(), r = l / b.size();
  return 2 * p * r / (p + r);
}

struct MetricCase {
  Ids retrieved;
  Gold gold;
  std::size_t k;
  double hit;
  double precision;
};

TEST(Metrics, HitRateAndPrecisionFixtures) {
  const std::vector<MetricCase> cases = {
      {{"a", "b", "c", "d", "e"}, {"c"}, 5, 1.0, 0.2},
      {{"a", "b", "c"}, {"x"}, 3, 0.0, 0.0},
      {{"a", "b", "c"}, {"a", "b", "c"}, 3, 1.0, 1.0},
      {{"a", "b"}, {"a", "b"}, 5, 1.0, 0.4},
      {{}, {"a"}, 3, 0.0, 0.0},
      {{"x", "y", "z", "a"}, {"a"}, 3, 0.0, 0.0},
      {{"x", "y", "z", "a"}, {"a"}, 4, 1.0, 0.25},
      {{"a", "x", "b", "y", "c", "z"}, {"a", "b", "c"}, 5, 1.0, 0.6},
      {{"a", "a", "b"}, {"a"}, 3, 1.0, 1.0 / 3.0},
      {{"q", "r", "s", "t", "u", "v", "w", "x", "y", "a"}, {"a", "b"}, 10, 1.0, 0.1},
  };
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    EXPECT_NEAR(HitRateAtK(c.retrieved, c.gold, c.k), c.hit, 1e-9) << i;
    EXPECT_NEAR(PrecisionAtK(c.retrieved, c.gold, c.k), c.precision, 1e-9) << i;
  }
}

TEST(Metrics, RougeLFixtures) {
  const std::vector<std::tuple<std::string, std::string, double>> cases = {
      {"the cat sat", "the cat sat on the mat", 2.0 / 3.0},
      {"1.2 billion SGD", "1.2 billion SGD", 1.0},
      {"", "anything", 0.0},
      {"anything", "", 0.0},
      {"alpha beta", "gamma delta", 0.0},
      {"BDO Unibank", "bdo unibank", 1.0},
      {"a b c d", "a c", 2.0 * 1.0 * 0.5 / 1.5},
      {"x a y b z c", "a b c", 2.0 * 0.5 * 1.0 / 1.5},
      {"c b a", "a b c", 1.0 / 3.0},
      {"the SM Group owns BDO Unibank", "BDO Unibank is owned by the SM Group", 3.0 / 7.0},
  };
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& [cand, ref, hand] = cases[i];
    const double oracle = OracleRougeL(cand, ref);
    EXPECT_NEAR(oracle, hand, 1e-9) << i;
    EXPECT_NEAR(RougeL(cand, ref), oracle, 1e-9) << i;
  }
  EXPECT_NEAR(RougeL("the cat sat", "the cat sat on the mat"), 0.6667, 1e-4);
}

// Property: the DP implementation agrees with the recursive oracle on random
// token strings.
TEST(MetricsProperty, RougeLMatchesOracle) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> len(0, 9);
  for (int trial = 0; trial < 300; ++trial) {
    auto a = testing::RandomWords(rng, len(rng), 6);
    auto b = testing::RandomWords(rng, len(rng), 6);
    EXPECT_NEAR(RougeL(a, b), OracleRougeL(a, b), 1e-12) << a << " | " << b;
  }
}

TEST(Metrics, PrecisionRejectsZeroK) {
  Ids ids{"a"};
  EXPECT_THROW(PrecisionAtK(ids, {"a"}, 0), Error);
}

TEST(BenchmarkMethod, ParseAndName) {
  for (auto m : {BenchmarkMethod::kOrion, BenchmarkMethod::kVss, BenchmarkMethod::kSparse, BenchmarkMethod::kHybrid}) {
    EXPECT_EQ(ParseBenchmarkMethod(ToString(m)), m);
  }
  EXPECT_THROW(ParseBenchmarkMethod("bm42"), Error);
}

// Three one-chunk documents, each question naming a term found only in its
// gold document: sparse puts the gold chunk first, so Hit@k = 1 and
// Prec@k = 1/k for every k.
TEST(Benchmark, SparseHandComputed) {
  std::vector<Document> docs = {{"a", "", "pangasius farming along the delta", {}},
                                {"b", "", "coal power station output", {}},
                                {"c", "", "mobile subscribers and towers", {}}};
  std::vector<QaRecord> qa = {{"Who farms pangasius?", "a", "a"},
                              {"Which coal station?", "b", "b"},
                              {"How many subscribers?", "c", "c"}};
  auto engine = testing::MakeEngine();
  BenchmarkOptions options;
  options.methods = {BenchmarkMethod::kSparse};
  auto report = RunBenchmark(*engine, docs, qa, options);
  EXPECT_EQ(report.documents, 3u);
  EXPECT_EQ(report.chunks, 3u);
  ASSERT_EQ(report.methods.size(), 1u);
  for (std::size_t k : kRetrievalKs) {
    EXPECT_NEAR(report.methods[0].hit_rate.at(k), 1.0, 1e-12);
    EXPECT_NEAR(report.methods[0].precision.at(k), 1.0 / k, 1e-12);
  }
  EXPECT_FALSE(report.methods[0].rouge_l.has_value());
}

TEST(Benchmark, AllMethodsOnToyCorpusWithScriptedGeneration) {
  // The fixture's fallback pruner judges every chunk irrelevant, so pruning is
  // off here to exercise Orion's fused ranking.
  auto config = testing::TestConfig();
  config.retrieval.pruning_enabled = false;
  auto engine = testing::MakeEngine(testing::ToyScript(), config);
  auto qa = LoadQaRecords(testing::DataDir() / "toy_qa.jsonl");
  BenchmarkOptions options;
  options.methods = {BenchmarkMethod::kOrion, BenchmarkMethod::kVss, BenchmarkMethod::kSparse, BenchmarkMethod::kHybrid};
  options.generate = true;
  options.concurrency = 2;
  auto report = RunBenchmark(*engine, testing::ToyCorpus(), qa, options);
  EXPECT_EQ(report.questions, 6u);
  ASSERT_EQ(report.methods.size(), 4u);
  for (const auto& m : report.methods) {
    for (std::size_t k : kRetrievalKs) {
      EXPECT_GE(m.hit_rate.at(k), 0.0);
      EXPECT_LE(m.hit_rate.at(k), 1.0);
      EXPECT_LE(m.precision.at(k), m.hit_rate.at(k) + 1e-12);
    }
    // Hit rate never falls as k grows.
    EXPECT_LE(m.hit_rate.at(3), m.hit_rate.at(5));
    EXPECT_LE(m.hit_rate.at(5), m.hit_rate.at(10));
    ASSERT_TRUE(m.rouge_l.has_value());
    EXPECT_EQ(m.generation_failures, 0u);
  }
  EXPECT_GT(report.methods[0].hit_rate.at(10), 0.5);

  auto j = BenchmarkReportJson(report);
  EXPECT_EQ(j["methods"].size(), 4u);
  EXPECT_EQ(j["methods"][0]["method"], "orion");
  EXPECT_EQ(j["methods"][0]["bertscore"], "not computed");
  EXPECT_TRUE(j["methods"][0]["retrieval"].contains("5"));
  EXPECT_TRUE(j.contains("config"));

  auto table = RenderBenchmarkTable(report);
  EXPECT_NE(table.find("Hit@3"), std::string::npos);
  EXPECT_NE(table.find("Prec.@10"), std::string::npos);
  EXPECT_NE(table.find("hybrid"), std::string::npos);
}

TEST(Benchmark, OrionRetrievalCapsAtK) {
  auto engine = testing::MakeEngine(testing::ToyScript());
  engine->Ingest(testing::ToyCorpus());
  auto ids = RetrieveForMethod(*engine, BenchmarkMethod::kOrion,
                               "Which bank in the Philippines offers universal banking services and which group owns it?", 3);
  EXPECT_LE(ids.size(), 3u);
  std::set<std::string> unique(ids.begin(), ids.end());
  EXPECT_EQ(unique.size(), ids.size());
}

TEST(Benchmark, EmptyIndexIsDataError) {
  auto engine = testing::MakeEngine();
  std::vector<QaRecord> qa = {{"q", "a", "x"}};
  EXPECT_THROW(RunBenchmark(*engine, {}, qa, {}), Error);
}

}  // namespace
}  // namespace orion
