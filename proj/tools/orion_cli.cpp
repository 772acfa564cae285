// Command-line front end: ingest, query, eval, tag inject|remove, serve, prompts.
// Exit codes: 0 ok, 1 usage, 2 data error, 3 backend error.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "orion/config.hpp"
#include "orion/engine.hpp"
#include "orion/error.hpp"
#include "orion/evaluation.hpp"
#include "orion/prompts.hpp"
#include "orion/server.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitBackend = 3;

struct Overrides {
  std::optional<std::string> index_dir;
  std::optional<std::string> llm_kind;
  std::optional<std::string> llm_fixture;
  std::optional<std::string> tagger;
  std::optional<std::size_t> dim;
  std::optional<std::size_t> window;
  std::optional<std::size_t> overlap;
  std::optional<std::size_t> k;
  std::optional<double> eta;
  std::optional<double> w_tag;
  std::optional<double> w_sem;
  std::optional<double> w_sparse;
  std::optional<std::size_t> max_subqueries;
  std::optional<std::string> missing_rank;
  bool no_expansion = false;
  bool no_pruning = false;
};

orion::EngineConfig BuildConfig(const std::string& path, const Overrides& o) {
  orion::EngineConfig c = path.empty() ? orion::EngineConfig{} : orion::EngineConfig::Load(path);
  if (o.index_dir) c.index_dir = *o.index_dir;
  if (o.llm_kind) c.llm.kind = *o.llm_kind;
  if (o.llm_fixture) c.llm.fixture = *o.llm_fixture;
  if (o.tagger) c.tagger = *o.tagger;
  if (o.dim) c.embedder.dim = *o.dim;
  if (o.window) c.segment.window_chars = *o.window;
  if (o.overlap) c.segment.overlap_chars = *o.overlap;
  if (o.k) c.retrieval.k = *o.k;
  if (o.eta) c.retrieval.eta = *o.eta;
  if (o.w_tag) c.retrieval.w_tag = *o.w_tag;
  if (o.w_sem) c.retrieval.w_sem = *o.w_sem;
  if (o.w_sparse) c.retrieval.w_sparse = *o.w_sparse;
  if (o.max_subqueries) c.retrieval.max_subqueries = *o.max_subqueries;
  if (o.missing_rank) c.retrieval.missing_rank = orion::ParseMissingRankPolicy(*o.missing_rank);
  if (o.no_expansion) c.retrieval.expansion_enabled = false;
  if (o.no_pruning) c.retrieval.pruning_enabled = false;
  c.Validate();
  return c;
}

int ExitCodeFor(const orion::Error& e) {
  switch (e.kind()) {
    case orion::ErrorKind::kInvalidArgument:
      return kExitUsage;
    case orion::ErrorKind::kBackend:
      return kExitBackend;
    default:
      return kExitData;
  }
}

void RequireIndexDir(const orion::EngineConfig& c) {
  if (c.index_dir.empty()) orion::Fail(orion::ErrorKind::kInvalidArgument, "an index directory is required (--index-dir)");
}

void Print(const json& j) { std::cout << j.dump(2) << "\n"; }

int Serve(orion::Engine& engine, const orion::EngineConfig& c, const std::string& host, int port) {
  const char* token = c.server.api_token_env.empty() ? nullptr : std::getenv(c.server.api_token_env.c_str());
  orion::ApiService api(engine, token ? token : "");
  orion::HttpServer server(api, c.server.threads);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    spdlog::info("signal {} received; shutting down", sig);
    server.Stop();
  });

  int bound = server.Bind(host, port);
  spdlog::info("listening on {}:{}", host, bound);
  server.Listen();
  if (waiter.joinable()) {
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
  }
  if (!c.index_dir.empty() && engine.index().size() > 0) {
    engine.Persist(c.index_dir);
    spdlog::info("index saved to {}", c.index_dir);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical semantic-path retrieval engine"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string config_path;
  Overrides o;
  std::string log_level = "warn";
  app.add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--index-dir", o.index_dir, "Index directory (loaded if present, written after changes)");
  app.add_option("--llm", o.llm_kind, "LLM backend: null, remote or scripted");
  app.add_option("--llm-fixture", o.llm_fixture, "Scripted LLM responses file");
  app.add_option("--tagger", o.tagger, "Tagger: heuristic or llm");
  app.add_option("--dim", o.dim, "Hashed embedder dimension");
  app.add_option("--window", o.window, "Chunk window in bytes");
  app.add_option("--overlap", o.overlap, "Chunk overlap in bytes");
  app.add_option("--k", o.k, "Contexts kept per sub-query");
  app.add_option("--eta", o.eta, "RRF constant");
  app.add_option("--w-tag", o.w_tag, "RRF weight of the tag index");
  app.add_option("--w-sem", o.w_sem, "RRF weight of the text-vector ranking");
  app.add_option("--w-sparse", o.w_sparse, "RRF weight of BM25");
  app.add_option("--max-subqueries", o.max_subqueries, "Rewriter cap");
  app.add_option("--missing-rank", o.missing_rank, "zero or worst_plus_one");
  app.add_flag("--no-expansion", o.no_expansion, "Disable query rewriting");
  app.add_flag("--no-pruning", o.no_pruning, "Disable context pruning");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

  auto* ingest = app.add_subcommand("ingest", "Augment and index a corpus");
  std::string corpus, schema = "profiles";
  ingest->add_option("corpus", corpus, "Corpus file or directory")->required();
  ingest->add_option("--schema", schema, "profiles or jsonl");

  auto* query = app.add_subcommand("query", "Answer or debug a question");
  std::string question;
  bool debug = false, no_generate = false;
  query->add_option("question", question, "Question text")->required();
  query->add_flag("--debug", debug, "Print the full retrieval trace");
  query->add_flag("--no-generate", no_generate, "Stop after pruning");

  auto* eval = app.add_subcommand("eval", "Benchmark retrieval (and optionally generation)");
  std::string eval_corpus, qa_path, eval_schema = "profiles", report_path;
  std::vector<std::string> methods{"orion"};
  bool eval_generate = false;
  eval->add_option("corpus", eval_corpus, "Corpus file or directory")->required();
  eval->add_option("qa", qa_path, "QA records (JSONL: question, answer, doc_id)")->required();
  eval->add_option("--schema", eval_schema, "profiles or jsonl");
  eval->add_option("--methods", methods, "orion, vss, sparse, hybrid")->delimiter(',');
  eval->add_flag("--generate", eval_generate, "Also generate answers and score ROUGE-L");
  eval->add_option("--report", report_path, "Write the JSON report here");

  auto* tag = app.add_subcommand("tag", "Edit semantic-path tags");
  tag->require_subcommand(1);
  std::string target, tag_text, scope = "document";
  std::optional<std::string> probe;
  auto add_tag_opts = [&](CLI::App* sub) {
    sub->add_option("target", target, "doc_id (document scope) or chunk_id (chunk scope)")->required();
    sub->add_option("tag", tag_text, "Tag text")->required();
    sub->add_option("--scope", scope, "document or chunk");
    sub->add_option("--probe", probe, "Report distance and rank for this query before and after");
  };
  auto* inject = tag->add_subcommand("inject", "Add a tag");
  auto* remove = tag->add_subcommand("remove", "Remove a tag");
  add_tag_opts(inject);
  add_tag_opts(remove);

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::string host;
  std::optional<int> port;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks one)");

  auto* prompts = app.add_subcommand("prompts", "Write the default prompt templates for editing");
  std::string prompts_dir;
  prompts->add_option("dir", prompts_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  spdlog::set_default_logger(spdlog::default_logger());
  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::set_pattern("%^%l%$: %v");

  try {
    auto config = BuildConfig(config_path, o);

    if (*ingest) {
      RequireIndexDir(config);
      auto engine = orion::Engine::FromConfig(config);
      auto docs = orion::LoadCorpus(corpus, orion::ParseCorpusSchema(schema));
      if (docs.empty()) orion::Fail(orion::ErrorKind::kData, "corpus is empty", corpus);
      auto report = engine->Ingest(docs, "cli");
      engine->Persist(config.index_dir);
      Print(orion::IngestReportJson(report));
      return kExitOk;
    }
    if (*query) {
      RequireIndexDir(config);
      auto engine = orion::Engine::FromConfig(config);
      orion::QueryRequest req{question, std::nullopt, debug, !no_generate};
      auto result = engine->Query(req);
      json out = orion::QueryResultJson(result);
      if (debug) out["trace"] = orion::QueryTraceJson(result, config.retrieval);
      Print(out);
      return kExitOk;
    }
    if (*eval) {
      auto fresh = config;
      fresh.index_dir.clear();  // benchmarks always build their own index
      auto engine = orion::Engine::FromConfig(fresh);
      auto docs = orion::LoadCorpus(eval_corpus, orion::ParseCorpusSchema(eval_schema));
      auto qa = orion::LoadQaRecords(qa_path);
      orion::BenchmarkOptions opts;
      opts.methods.clear();
      for (const auto& m : methods) opts.methods.push_back(orion::ParseBenchmarkMethod(m));
      opts.generate = eval_generate;
      opts.concurrency = config.eval_concurrency;
      auto report = orion::RunBenchmark(*engine, docs, qa, opts);
      std::cout << orion::RenderBenchmarkTable(report);
      if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) orion::Fail(orion::ErrorKind::kInvalidArgument, "cannot write report", report_path);
        out << orion::BenchmarkReportJson(report).dump(2) << "\n";
      }
      return kExitOk;
    }
    if (*tag) {
      RequireIndexDir(config);
      auto engine = orion::Engine::FromConfig(config);
      const bool is_inject = inject->parsed();
      auto result = engine->EditTag(target, tag_text, orion::ParseTagScope(scope), is_inject, probe, "cli");
      engine->Persist(config.index_dir);
      Print(orion::TagEditJson(result));
      return kExitOk;
    }
    if (*prompts) {
      auto set = orion::PromptSet::Defaults();
      set.WriteTo(prompts_dir);
      std::cout << prompts_dir << "\n";
      return kExitOk;
    }
    if (*serve) {
      auto engine = orion::Engine::FromConfig(config);
      return Serve(*engine, config, host.empty() ? config.server.host : host, port.value_or(config.server.port));
    }
  } catch (const orion::Error& e) {
    std::cerr << "error: " << e.what();
    if (!e.detail().empty()) std::cerr << " (" << e.detail() << ")";
    std::cerr << "\n";
    return ExitCodeFor(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
