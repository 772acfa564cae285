#include "orion/config.hpp"

#include <fstream>
#include <set>

#include "orion/error.hpp"

using nlohmann::json;

namespace orion {

namespace {

/// Reads typed fields out of one JSON object and remembers which keys were
/// consumed so leftovers can be reported.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) Fail(ErrorKind::kInvalidArgument, "config section '" + name_ + "' must be an object");
  }

  template <typename T>
  void Read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      Fail(ErrorKind::kInvalidArgument, "config key '" + Path(key) + "' has the wrong type");
    }
  }

  template <typename T>
  void ReadOptional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (it->is_null()) {
      out.reset();
      return;
    }
    T value{};
    Read(key, value);
    out = value;
  }

  std::optional<Section> Child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return std::nullopt;
    return Section(*it, Path(key));
  }

  void Finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) Fail(ErrorKind::kInvalidArgument, "unknown config key '" + Path(key) + "'");
    }
  }

 private:
  std::string Path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace

EngineConfig EngineConfig::FromJson(const json& j) {
  EngineConfig c;
  Section root(j, "");
  if (auto s = root.Child("embedder")) {
    s->Read("kind", c.embedder.kind);
    s->Read("dim", c.embedder.dim);
    s->Read("seed", c.embedder.seed);
    s->Read("endpoint", c.embedder.endpoint);
    s->Read("model", c.embedder.model);
    s->Read("api_key_env", c.embedder.api_key_env);
    s->Read("batch_size", c.embedder.batch_size);
    s->Read("timeout_seconds", c.embedder.timeout_seconds);
    s->Finish();
  }
  if (auto s = root.Child("llm")) {
    s->Read("kind", c.llm.kind);
    s->Read("endpoint", c.llm.endpoint);
    s->Read("model", c.llm.model);
    s->Read("api_key_env", c.llm.api_key_env);
    s->Read("timeout_seconds", c.llm.timeout_seconds);
    s->Read("fixture", c.llm.fixture);
    s->Read("max_in_flight", c.llm.max_in_flight);
    s->Finish();
  }
  if (auto s = root.Child("tagging")) {
    s->Read("tagger", c.tagger);
    s->Read("max_master_tags", c.max_master_tags);
    s->Finish();
  }
  if (auto s = root.Child("ingest")) {
    s->Read("workers", c.ingest_workers);
    s->Finish();
  }
  if (auto s = root.Child("segment")) {
    s->Read("window_chars", c.segment.window_chars);
    s->Read("overlap_chars", c.segment.overlap_chars);
    s->Finish();
  }
  if (auto s = root.Child("index")) {
    std::string tag_metric = ToString(c.index.tag_metric);
    std::string dense_metric = ToString(c.index.dense_metric);
    std::string path_embedding = "mean_tags";
    s->Read("dir", c.index_dir);
    s->Read("tag_metric", tag_metric);
    s->Read("dense_metric", dense_metric);
    s->Read("ann_threshold", c.index.ann_threshold);
    s->Read("path_embedding", path_embedding);
    if (auto h = s->Child("hnsw")) {
      h->Read("m", c.index.hnsw.m);
      h->Read("ef_construction", c.index.hnsw.ef_construction);
      h->Read("ef_search", c.index.hnsw.ef_search);
      h->Read("seed", c.index.hnsw.seed);
      h->Finish();
    }
    if (auto b = s->Child("bm25")) {
      b->Read("k1", c.index.bm25.k1);
      b->Read("b", c.index.bm25.b);
      b->Finish();
    }
    s->Finish();
    c.index.tag_metric = ParseMetric(tag_metric);
    c.index.dense_metric = ParseMetric(dense_metric);
    c.index.path_embedding = ParsePathEmbedding(path_embedding);
  }
  if (auto s = root.Child("retrieval")) {
    auto& r = c.retrieval;
    std::string missing = ToString(r.missing_rank);
    s->Read("k", r.k);
    s->Read("tag_fanout_multiplier", r.tag_fanout_multiplier);
    s->ReadOptional("sparse_fanout", r.sparse_fanout);
    if (auto w = s->Child("weights")) {
      w->Read("tag", r.w_tag);
      w->Read("sem", r.w_sem);
      w->Read("sparse", r.w_sparse);
      w->Finish();
    }
    s->Read("eta", r.eta);
    s->Read("max_subqueries", r.max_subqueries);
    s->Read("expansion_enabled", r.expansion_enabled);
    s->Read("pruning_enabled", r.pruning_enabled);
    s->Read("missing_rank", missing);
    s->Read("parallel_subqueries", r.parallel_subqueries);
    s->Finish();
    r.missing_rank = ParseMissingRankPolicy(missing);
  }
  if (auto s = root.Child("generation")) {
    s->Read("char_budget", c.generation.char_budget);
    s->Read("temperature", c.generation.temperature);
    s->Finish();
  }
  if (auto s = root.Child("prompts")) {
    s->Read("dir", c.prompts_dir);
    s->Read("domain", c.domain);
    s->Read("region_group", c.region_group);
    s->Finish();
  }
  if (auto s = root.Child("server")) {
    s->Read("host", c.server.host);
    s->Read("port", c.server.port);
    s->Read("api_token_env", c.server.api_token_env);
    s->Read("threads", c.server.threads);
    s->Finish();
  }
  if (auto s = root.Child("evaluation")) {
    s->Read("concurrency", c.eval_concurrency);
    s->Finish();
  }
  root.Finish();
  c.Validate();
  return c;
}

EngineConfig EngineConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kInvalidArgument, "cannot open config file", path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kInvalidArgument, "config file is not valid JSON", path.string() + ": " + e.what());
  }
  return FromJson(j);
}

json EngineConfig::ToJson() const {
  const auto& r = retrieval;
  return {
      {"embedder",
       {{"kind", embedder.kind},
        {"dim", embedder.dim},
        {"seed", embedder.seed},
        {"endpoint", embedder.endpoint},
        {"model", embedder.model},
        {"api_key_env", embedder.api_key_env},
        {"batch_size", embedder.batch_size},
        {"timeout_seconds", embedder.timeout_seconds}}},
      {"llm",
       {{"kind", llm.kind},
        {"endpoint", llm.endpoint},
        {"model", llm.model},
        {"api_key_env", llm.api_key_env},
        {"timeout_seconds", llm.timeout_seconds},
        {"fixture", llm.fixture},
        {"max_in_flight", llm.max_in_flight}}},
      {"tagging", {{"tagger", tagger}, {"max_master_tags", max_master_tags}}},
      {"ingest", {{"workers", ingest_workers}}},
      {"segment", {{"window_chars", segment.window_chars}, {"overlap_chars", segment.overlap_chars}}},
      {"index",
       {{"dir", index_dir},
        {"tag_metric", ToString(index.tag_metric)},
        {"dense_metric", ToString(index.dense_metric)},
        {"ann_threshold", index.ann_threshold},
        {"path_embedding", index.path_embedding == PathEmbedding::kMeanTags ? "mean_tags" : "joined_string"},
        {"hnsw",
         {{"m", index.hnsw.m},
          {"ef_construction", index.hnsw.ef_construction},
          {"ef_search", index.hnsw.ef_search},
          {"seed", index.hnsw.seed}}},
        {"bm25", {{"k1", index.bm25.k1}, {"b", index.bm25.b}}}}},
      {"retrieval",
       {{"k", r.k},
        {"tag_fanout_multiplier", r.tag_fanout_multiplier},
        {"sparse_fanout", r.SparseFanout()},
        {"weights", {{"tag", r.w_tag}, {"sem", r.w_sem}, {"sparse", r.w_sparse}}},
        {"eta", r.eta},
        {"max_subqueries", r.max_subqueries},
        {"expansion_enabled", r.expansion_enabled},
        {"pruning_enabled", r.pruning_enabled},
        {"missing_rank", ToString(r.missing_rank)},
        {"parallel_subqueries", r.parallel_subqueries}}},
      {"generation", {{"char_budget", generation.char_budget}, {"temperature", generation.temperature}}},
      {"prompts", {{"dir", prompts_dir}, {"domain", domain}, {"region_group", region_group}}},
      {"server",
       {{"host", server.host},
        {"port", server.port},
        {"api_token_env", server.api_token_env},
        {"threads", server.threads}}},
      {"evaluation", {{"concurrency", eval_concurrency}}},
  };
}

void EngineConfig::Validate() const {
  auto bad = [](const std::string& what) { Fail(ErrorKind::kInvalidArgument, "invalid config: " + what); };
  if (embedder.kind != "hashed" && embedder.kind != "remote") bad("embedder.kind must be hashed or remote");
  if (embedder.dim == 0) bad("embedder.dim must be positive");
  if (embedder.kind == "remote" && embedder.endpoint.empty()) bad("embedder.endpoint is required for remote");
  if (llm.kind != "null" && llm.kind != "remote" && llm.kind != "scripted") bad("llm.kind must be null, remote or scripted");
  if (llm.kind == "remote" && llm.endpoint.empty()) bad("llm.endpoint is required for remote");
  if (llm.kind == "scripted" && llm.fixture.empty()) bad("llm.fixture is required for scripted");
  if (tagger != "heuristic" && tagger != "llm") bad("tagging.tagger must be heuristic or llm");
  if (max_master_tags == 0) bad("tagging.max_master_tags must be >= 1");
  if (segment.window_chars == 0) bad("segment.window_chars must be >= 1");
  if (segment.overlap_chars >= segment.window_chars) bad("segment.overlap_chars must be < window_chars");
  if (server.port < 0 || server.port > 65535) bad("server.port out of range");
  retrieval.Validate();
}

}  // namespace orion
