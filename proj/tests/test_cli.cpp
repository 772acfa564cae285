#include <sys/wait.h>

#include <cstdio>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "orion/prompts.hpp"
#include "support.hpp"

namespace orion {
namespace {

using nlohmann::json;

struct RunResult {
  int code = -1;
  std::string out;
};

std::string Quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

RunResult RunCli(const std::vector<std::string>& args) {
  std::string cmd = Quote(ORION_CLI_PATH);
  for (const auto& a : args) cmd += " " + Quote(a);
  cmd += " 2>/dev/null";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  std::vector<std::string> Base() {
    return {"--index-dir", dir_.path().string(), "--llm", "scripted", "--llm-fixture",
            (testing::DataDir() / "scripted_llm.json").string()};
  }
  std::vector<std::string> With(std::vector<std::string> extra) {
    auto args = Base();
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
  }
  testing::TempDir dir_;
};

TEST_F(CliTest, IngestQueryAndTag) {
  auto ingest = RunCli(With({"ingest", (testing::DataDir() / "toy_corpus").string()}));
  ASSERT_EQ(ingest.code, 0) << ingest.out;
  EXPECT_EQ(json::parse(ingest.out)["documents"].size(), 6u);
  EXPECT_TRUE(std::filesystem::exists(dir_.path() / "header"));

  auto query = RunCli(With({"query", "What was SeaCompany Logistics revenue in 2023?", "--debug"}));
  ASSERT_EQ(query.code, 0);
  auto j = json::parse(query.out);
  EXPECT_NE(j["answer"]["text"].get<std::string>().find("1.2 billion"), std::string::npos);
  EXPECT_TRUE(j.contains("trace"));

  auto tag = RunCli(With({"tag", "inject", "java_power", "geothermal", "--probe", "geothermal"}));
  ASSERT_EQ(tag.code, 0);
  auto chunks = RunCli(With({"tag", "remove", "java_power#0", "geothermal", "--scope", "chunk"}));
  EXPECT_EQ(chunks.code, 0);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(RunCli({"frobnicate"}).code, 1);
  EXPECT_EQ(RunCli({"--k", "0", "--index-dir", dir_.path().string(), "query", "q"}).code, 1);
  EXPECT_EQ(RunCli({"query", "q"}).code, 1);  // no index dir
  EXPECT_EQ(RunCli(With({"ingest", "/nonexistent/corpus"})).code, 2);
  EXPECT_EQ(RunCli(With({"query", "anything"})).code, 2);  // empty index

  ASSERT_EQ(RunCli(With({"ingest", (testing::DataDir() / "toy_corpus").string()})).code, 0);
  std::vector<std::string> null_llm = {"--index-dir", dir_.path().string(), "query", "pangasius"};
  EXPECT_EQ(RunCli(null_llm).code, 3);
  null_llm.push_back("--no-generate");
  auto degraded = RunCli(null_llm);
  EXPECT_EQ(degraded.code, 0);
  EXPECT_TRUE(json::parse(degraded.out)["answer"].is_null());

  EXPECT_EQ(RunCli({"--index-dir", dir_.path().string(), "--dim", "64", "query", "pangasius", "--no-generate"}).code, 1);
}

TEST_F(CliTest, EvalWritesReport) {
  auto report = dir_.path() / "report.json";
  auto r = RunCli(With({"eval", (testing::DataDir() / "toy_corpus").string(), (testing::DataDir() / "toy_qa.jsonl").string(),
                     "--methods", "orion,sparse", "--report", report.string()}));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("Hit@3"), std::string::npos);
  EXPECT_EQ(json::parse(std::ifstream(report))["methods"].size(), 2u);
}

TEST_F(CliTest, PromptsDirectoryMatchesDefaults) {
  auto out = dir_.path() / "prompts";
  ASSERT_EQ(RunCli({"prompts", out.string()}).code, 0);
  auto defaults = PromptSet::Defaults();
  auto loaded = PromptSet::LoadOverrides(out);
  EXPECT_EQ(loaded.answer.system, defaults.answer.system);
  EXPECT_EQ(loaded.prune.user, defaults.prune.user);
  // The checked-in prompts/ directory holds the same text, file for file.
  const std::filesystem::path shipped = std::filesystem::path(ORION_SOURCE_DIR) / "prompts";
  const std::pair<const char*, const PromptTemplate*> templates[] = {
      {"paragraph_tags", &defaults.paragraph_tags}, {"master_tags", &defaults.master_tags},
      {"rewrite", &defaults.rewrite},               {"prune", &defaults.prune},
      {"answer", &defaults.answer}};
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    EXPECT_TRUE(in) << p;
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  for (const auto& [name, t] : templates) {
    EXPECT_EQ(slurp(shipped / (std::string(name) + ".system.txt")), t->system) << name;
    EXPECT_EQ(slurp(shipped / (std::string(name) + ".user.txt")), t->user) << name;
  }
}

}  // namespace
}  // namespace orion
