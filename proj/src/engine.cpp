#include "orion/engine.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "orion/error.hpp"
#include "orion/text.hpp"

using nlohmann::json;

namespace orion {

Engine::Engine(EngineConfig config, std::shared_ptr<Embedder> embedder, std::shared_ptr<CompletionClient> llm,
               std::shared_ptr<Tagger> tagger, PromptSet prompts, std::unique_ptr<HybridIndex> index)
    : config_(std::move(config)),
      embedder_(std::move(embedder)),
      llm_(std::move(llm)),
      tagger_(std::move(tagger)),
      prompts_(std::move(prompts)),
      index_(std::move(index)) {
  if (!embedder_) Fail(ErrorKind::kInvalidArgument, "engine needs an embedder");
  if (!tagger_) Fail(ErrorKind::kInvalidArgument, "engine needs a tagger");
  config_.index.dim = embedder_->dim();
  config_.index.embedder_fingerprint = embedder_->fingerprint();
  if (!index_) index_ = std::make_unique<HybridIndex>(config_.index);
  if (index_->options().dim != embedder_->dim()) {
    Fail(ErrorKind::kInvalidArgument, "index dimension " + std::to_string(index_->options().dim) +
                                          " does not match embedder dimension " + std::to_string(embedder_->dim()));
  }
}

namespace {

std::string EnvOrEmpty(const std::string& name) {
  if (name.empty()) return {};
  const char* v = std::getenv(name.c_str());
  return v ? v : "";
}

}  // namespace

std::unique_ptr<Engine> Engine::FromConfig(const EngineConfig& config) {
  config.Validate();

  std::shared_ptr<Embedder> embedder;
  if (config.embedder.kind == "hashed") {
    embedder = std::make_shared<HashedEmbedder>(config.embedder.dim, config.embedder.seed);
  } else {
    RemoteEmbedderOptions opts;
    opts.endpoint = config.embedder.endpoint;
    opts.model = config.embedder.model;
    opts.api_key = EnvOrEmpty(config.embedder.api_key_env);
    opts.dim = config.embedder.dim;
    opts.batch_size = config.embedder.batch_size;
    opts.timeout_seconds = config.embedder.timeout_seconds;
    embedder = std::make_shared<RemoteEmbedder>(opts);
  }

  std::shared_ptr<CompletionClient> llm;
  if (config.llm.kind == "remote") {
    RemoteChatOptions opts;
    opts.endpoint = config.llm.endpoint;
    opts.model = config.llm.model;
    opts.api_key = EnvOrEmpty(config.llm.api_key_env);
    opts.timeout_seconds = config.llm.timeout_seconds;
    llm = std::make_shared<RemoteChatClient>(opts);
  } else if (config.llm.kind == "scripted") {
    llm = std::shared_ptr<CompletionClient>(ScriptedCompletionClient::FromFile(config.llm.fixture));
  }
  if (llm) {
    auto limiter = std::make_shared<InFlightLimiter>(static_cast<std::ptrdiff_t>(config.llm.max_in_flight));
    llm = std::make_shared<LimitedCompletionClient>(llm, limiter);
  }

  PromptSet prompts = config.prompts_dir.empty() ? PromptSet::Defaults() : PromptSet::LoadOverrides(config.prompts_dir);
  prompts.domain = config.domain;
  prompts.region_group = config.region_group;

  std::shared_ptr<Tagger> tagger;
  if (config.tagger == "llm" && llm) {
    tagger = std::make_shared<LlmTagger>(llm, prompts);
  } else {
    if (config.tagger == "llm") spdlog::warn("llm tagger requested without an llm backend; using the heuristic tagger");
    tagger = std::make_shared<HeuristicTagger>();
  }

  std::unique_ptr<HybridIndex> index;
  if (!config.index_dir.empty() && std::filesystem::exists(std::filesystem::path(config.index_dir) / "header")) {
    IndexOptions opts = config.index;
    opts.dim = embedder->dim();
    opts.embedder_fingerprint = embedder->fingerprint();
    index = HybridIndex::Load(config.index_dir, embedder->fingerprint(), opts);
  }
  return std::make_unique<Engine>(config, embedder, llm, tagger, prompts, std::move(index));
}

Engine::Augmented Engine::Augment(const Document& doc, const TermStatistics& master_background,
                                  const SegmentOptions& segment) {
  Augmented out;
  auto master = GenerateMasterTags(doc, config_.max_master_tags, *tagger_, &master_background, &master_cache_);
  auto chunks = SegmentDocument(doc, segment);
  if (chunks.empty()) Fail(ErrorKind::kData, "document has no text", "doc_id=" + doc.doc_id);

  TermStatistics siblings;
  for (const auto& c : chunks) siblings.AddDocument(c.text);

  std::vector<SemanticPath> paths;
  std::vector<std::string> texts;
  for (const auto& chunk : chunks) {
    ParagraphTags para;
    try {
      para = GenerateParagraphTags(chunk, *tagger_, &siblings, master);
    } catch (const BackendError& e) {
      spdlog::warn("paragraph tagging failed for {}; using fallback tags: {}", chunk.chunk_id, e.what());
      para = FallbackParagraphTags(chunk, master);
      out.needs_review.push_back(chunk.chunk_id);
    }
    if (para.needs_review && (out.needs_review.empty() || out.needs_review.back() != chunk.chunk_id)) {
      out.needs_review.push_back(chunk.chunk_id);
    }
    paths.push_back(BuildPath(master, para.tags));
    texts.push_back(chunk.text);
  }

  auto v_text = EmbedText(texts, *embedder_, embedder_->dim());
  auto v_path = EmbedPaths(paths, *embedder_, config_.index.path_embedding);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    out.items.push_back({std::move(chunks[i]), std::move(paths[i]), std::move(v_text[i]), std::move(v_path[i])});
  }
  return out;
}

IngestReport Engine::Ingest(const std::vector<Document>& docs, const std::string& actor,
                            const std::optional<SegmentOptions>& segment) {
  const SegmentOptions seg = segment.value_or(config_.segment);
  if (seg.window_chars == 0 || seg.overlap_chars >= seg.window_chars) {
    Fail(ErrorKind::kInvalidArgument, "segment window must be positive and larger than the overlap");
  }
  const auto started = std::chrono::steady_clock::now();
  std::unordered_set<std::string> ids;
  for (const auto& d : docs) {
    if (d.doc_id.empty()) Fail(ErrorKind::kInvalidArgument, "document without doc_id");
    if (d.doc_id.find('#') != std::string::npos) {
      Fail(ErrorKind::kInvalidArgument, "doc_id must not contain '#'", "doc_id=" + d.doc_id);
    }
    if (text::Trim(d.text).empty()) Fail(ErrorKind::kInvalidArgument, "document text is empty", "doc_id=" + d.doc_id);
    if (!ids.insert(d.doc_id).second) Fail(ErrorKind::kInvalidArgument, "duplicate doc_id in batch: " + d.doc_id);
  }

  TermStatistics master_background;
  for (const auto& d : docs) master_background.AddDocument(d.text);
  for (const auto& d : docs) master_cache_.Erase(d.doc_id);

  std::vector<Augmented> augmented(docs.size());
  std::vector<std::exception_ptr> errors(docs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < docs.size(); i = next++) {
      try {
        augmented[i] = Augment(docs[i], master_background, seg);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(std::max<std::size_t>(config_.ingest_workers, 1), docs.size());
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  IngestReport report;
  EditRecord record;
  record.actor = actor;
  record.action = "ingest";
  record.scope = "document";
  record.outcome = "applied";
  for (std::size_t i = 0; i < docs.size(); ++i) {
    IngestedDocument d;
    d.doc_id = docs[i].doc_id;
    d.replaced = index_->ReplaceDocument(d.doc_id, augmented[i].items);
    for (const auto& item : augmented[i].items) d.chunk_ids.push_back(item.chunk.chunk_id);
    d.needs_review = augmented[i].needs_review;
    record.affected.insert(record.affected.end(), d.chunk_ids.begin(), d.chunk_ids.end());
    record.target += (i ? "," : "") + d.doc_id;
    report.documents.push_back(std::move(d));
  }
  {
    std::lock_guard lock(review_mu_);
    for (const auto& d : report.documents) {
      std::erase_if(review_queue_, [&](const std::string& id) { return DocIdOfChunk(id) == d.doc_id; });
      review_queue_.insert(d.needs_review.begin(), d.needs_review.end());
    }
  }
  report.edit_seq = index_->AppendEditRecord(record);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

std::vector<std::string> Engine::ReviewQueue() const {
  std::lock_guard lock(review_mu_);
  return {review_queue_.begin(), review_queue_.end()};
}

QueryResult Engine::Query(const QueryRequest& request) const {
  if (text::Trim(request.question).empty()) Fail(ErrorKind::kInvalidArgument, "question must be non-empty");
  if (index_->size() == 0) Fail(ErrorKind::kConflict, "index is empty; ingest documents first");
  RetrievalConfig cfg = config_.retrieval;
  if (request.k) cfg.k = *request.k;
  cfg.Validate();

  QueryResult result;
  result.question = request.question;
  result.contexts = Retrieve(request.question, *index_, *embedder_, llm_.get(), prompts_, cfg);
  if (request.generate) {
    NullCompletionClient null_client;
    CompletionClient& client = llm_ ? *llm_ : static_cast<CompletionClient&>(null_client);
    result.answer = GenerateAnswer(request.question, result.contexts, client, prompts_, config_.generation);
  }
  return result;
}

TagEditResult Engine::EditTag(const std::string& target, std::string_view tag, TagScope scope, bool inject,
                              const std::optional<std::string>& probe_query, const std::string& actor) {
  TagEditResult result;
  std::vector<std::string> probed;
  Vector query;
  if (probe_query) {
    const std::string texts[] = {*probe_query};
    query = EmbedText(texts, *embedder_, embedder_->dim()).front();
    probed = scope == TagScope::kDocument ? index_->DocumentChunks(target) : std::vector<std::string>{target};
    for (const auto& id : probed) {
      auto p = index_->ProbeTag(id, query);
      result.probes.push_back({id, {p.distance, p.rank}, {}});
    }
  }
  result.report = inject ? index_->InjectTag(target, tag, scope, *embedder_, actor)
                         : index_->RemoveTag(target, tag, scope, *embedder_, actor);
  for (auto& probe : result.probes) {
    auto p = index_->ProbeTag(probe.chunk_id, query);
    probe.after = {p.distance, p.rank};
  }
  return result;
}

double TraceRound(double x) {
  if (!std::isfinite(x)) return x;
  double r = std::round(x * 1e9) / 1e9;
  return r == 0.0 ? 0.0 : r;
}

namespace {

json RanksJson(const SourceRanks& r) {
  auto opt = [](const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); };
  return {{"tag", opt(r.tag)}, {"sem", opt(r.sem)}, {"sparse", opt(r.sparse)}};
}

json AnswerJson(const Answer& a) {
  json used = json::array();
  for (const auto& [sub, ids] : a.contexts_used) used.push_back({{"sub_query", sub}, {"chunk_ids", ids}});
  return {{"text", a.text}, {"prompt_fingerprint", a.prompt_fingerprint}, {"contexts_used", used}};
}

}  // namespace

json PathJson(const SemanticPath& path) {
  std::vector<std::string> master, paragraph;
  for (const auto& t : path.master) master.push_back(t.text());
  for (const auto& t : path.paragraph) paragraph.push_back(t.text());
  return {{"master", master}, {"paragraph", paragraph}, {"display", path.Display()}};
}

json QueryTraceJson(const QueryResult& result, const RetrievalConfig& config) {
  json trace;
  trace["question"] = result.question;
  json subs = json::array();
  for (const auto& ctx : result.contexts) subs.push_back(ctx.sub_query);
  trace["sub_queries"] = subs;
  trace["config"] = {{"k", config.k},
                     {"tag_fanout", config.TagFanout()},
                     {"sparse_fanout", config.SparseFanout()},
                     {"weights", {{"tag", config.w_tag}, {"sem", config.w_sem}, {"sparse", config.w_sparse}}},
                     {"eta", config.eta},
                     {"missing_rank", ToString(config.missing_rank)},
                     {"expansion_enabled", config.expansion_enabled},
                     {"pruning_enabled", config.pruning_enabled}};
  json contexts = json::array();
  for (const auto& ctx : result.contexts) {
    json candidates = json::array();
    for (const auto& c : ctx.candidates) {
      candidates.push_back({{"chunk_id", c.chunk.chunk.chunk_id},
                            {"doc_id", c.chunk.chunk.doc_id},
                            {"path", c.chunk.path.Display()},
                            {"ranks", RanksJson(c.ranks)},
                            {"tag_distance", c.tag_distance ? json(TraceRound(*c.tag_distance)) : json(nullptr)},
                            {"dense_similarity", TraceRound(c.dense_similarity)},
                            {"sparse_score", c.sparse_score ? json(TraceRound(*c.sparse_score)) : json(nullptr)}});
    }
    json fused = json::array();
    for (const auto& f : ctx.fused) {
      fused.push_back({{"chunk_id", f.chunk_id}, {"score", TraceRound(f.score)}, {"ranks", RanksJson(f.ranks)}});
    }
    json pruned = json::array();
    for (const auto& e : ctx.pruned) {
      pruned.push_back({{"chunk_id", e.chunk_id}, {"path", e.path.Display()}, {"text", e.text}});
    }
    contexts.push_back(
        {{"sub_query", ctx.sub_query}, {"candidates", candidates}, {"fused", fused}, {"pruned", pruned}});
  }
  trace["contexts"] = contexts;
  trace["answer"] = result.answer ? AnswerJson(*result.answer) : json(nullptr);
  return trace;
}

json QueryResultJson(const QueryResult& result) {
  json out;
  out["question"] = result.question;
  json contexts = json::array();
  for (const auto& ctx : result.contexts) {
    json evidence = json::array();
    for (const auto& e : ctx.pruned) {
      evidence.push_back({{"chunk_id", e.chunk_id}, {"path", e.path.Display()}, {"text", e.text}});
    }
    contexts.push_back({{"sub_query", ctx.sub_query}, {"evidence", evidence}});
  }
  out["contexts"] = contexts;
  out["answer"] = result.answer ? AnswerJson(*result.answer) : json(nullptr);
  return out;
}

json TagEditJson(const TagEditResult& result) {
  const auto& r = result.report;
  json changes = json::array();
  for (const auto& c : r.changes) changes.push_back({{"chunk_id", c.chunk_id}, {"path", PathJson(c.new_path)}});
  json out = {{"target", r.target}, {"scope", ToString(r.scope)}, {"tag", r.tag},
              {"noop", r.noop},     {"changes", changes},         {"edit_seq", r.edit_seq}};
  if (!result.probes.empty()) {
    json probes = json::array();
    for (const auto& p : result.probes) {
      probes.push_back({{"chunk_id", p.chunk_id},
                        {"before", {{"distance", TraceRound(p.before.distance)}, {"rank", p.before.rank}}},
                        {"after", {{"distance", TraceRound(p.after.distance)}, {"rank", p.after.rank}}},
                        {"delta", TraceRound(p.after.distance - p.before.distance)}});
    }
    out["probes"] = probes;
  }
  return out;
}

json EditRecordJson(const EditRecord& r) {
  return {{"seq", r.seq},       {"timestamp", r.timestamp}, {"actor", r.actor},     {"action", r.action},
          {"target", r.target}, {"scope", r.scope},         {"tag", r.tag},         {"outcome", r.outcome},
          {"affected", r.affected}};
}

json IngestReportJson(const IngestReport& report) {
  json docs = json::array();
  for (const auto& d : report.documents) {
    docs.push_back({{"doc_id", d.doc_id},
                    {"chunk_ids", d.chunk_ids},
                    {"chunk_count", d.chunk_ids.size()},
                    {"replaced", d.replaced},
                    {"needs_review", d.needs_review}});
  }
  return {{"documents", docs}, {"seconds", report.seconds}, {"edit_seq", report.edit_seq}};
}

}  // namespace orion
