#include <cstdlib>
#include <fstream>

#include <gtest/gtest.h>

#include "support.hpp"

namespace orion {
namespace {

// Set ORION_UPDATE_GOLDEN=1 to rewrite the expected traces after an
// intentional behaviour change.
const char* const kQuestions[][2] = {
    {"bank_owner", "Which bank in the Philippines offers universal banking services and which group owns it?"},
    {"sea_revenue", "What was SeaCompany Logistics revenue in 2023?"},
    {"vietnam_exports", "Which ASEAN companies export to Vietnam?"},
};

std::string TraceText(const Engine& engine, const std::string& question) {
  auto result = engine.Query({question, std::nullopt, true, true});
  return QueryTraceJson(result, engine.config().retrieval).dump(2) + "\n";
}

std::string ReadAll(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

TEST(Golden, TracesMatchCheckedInFiles) {
  auto engine = testing::MakeEngine(testing::ToyScript());
  engine->Ingest(testing::ToyCorpus());
  const auto dir = testing::DataDir() / "golden";
  const bool update = std::getenv("ORION_UPDATE_GOLDEN") != nullptr;
  for (const auto& [name, question] : kQuestions) {
    const auto path = dir / (std::string(name) + ".json");
    const auto actual = TraceText(*engine, question);
    if (update) {
      std::filesystem::create_directories(dir);
      std::ofstream(path, std::ios::binary) << actual;
      continue;
    }
    ASSERT_TRUE(std::filesystem::exists(path)) << path << " missing; run with ORION_UPDATE_GOLDEN=1";
    EXPECT_EQ(actual, ReadAll(path)) << name;
  }
}

TEST(Golden, RepeatedRunsAreByteIdentical) {
  auto config = testing::TestConfig();
  auto serial = config;
  serial.retrieval.parallel_subqueries = false;
  serial.ingest_workers = 1;
  auto a = testing::MakeEngine(testing::ToyScript(), config);
  auto b = testing::MakeEngine(testing::ToyScript(), serial);
  a->Ingest(testing::ToyCorpus());
  b->Ingest(testing::ToyCorpus());
  for (const auto& [name, question] : kQuestions) {
    const auto first = TraceText(*a, question);
    EXPECT_EQ(first, TraceText(*a, question)) << name;
    EXPECT_EQ(first, TraceText(*b, question)) << name;
  }
}

}  // namespace
}  // namespace orion
