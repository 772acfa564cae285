#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "orion/completion.hpp"
#include "orion/config.hpp"
#include "orion/corpus.hpp"
#include "orion/embedding.hpp"
#include "orion/generation.hpp"
#include "orion/index.hpp"
#include "orion/prompts.hpp"
#include "orion/retrieval.hpp"
#include "orion/tagging.hpp"

namespace orion {

struct IngestedDocument {
  std::string doc_id;
  std::vector<std::string> chunk_ids;
  bool replaced = false;
  std::vector<std::string> needs_review;  // chunks tagged by fallback after a tagger fault
};

struct IngestReport {
  std::vector<IngestedDocument> documents;
  double seconds = 0.0;
  std::uint64_t edit_seq = 0;
};

struct QueryRequest {
  std::string question;
  std::optional<std::size_t> k;
  bool debug = false;
  bool generate = true;
};

struct QueryResult {
  std::string question;
  std::vector<SubQueryContext> contexts;
  std::optional<Answer> answer;
};

struct ProbeState {
  double distance = 0.0;
  std::size_t rank = 0;
};

struct TagEditResult {
  TagEditReport report;
  struct Probe {
    std::string chunk_id;
    ProbeState before;
    ProbeState after;
  };
  std::vector<Probe> probes;
};

/// Offline augmentation (tagging, segmentation, embedding, indexing) and the
/// online query path over one HybridIndex.
class Engine {
 public:
  /// `llm` may be null: rewriting and pruning are then skipped and
  /// generation fails.
  Engine(EngineConfig config, std::shared_ptr<Embedder> embedder, std::shared_ptr<CompletionClient> llm,
         std::shared_ptr<Tagger> tagger, PromptSet prompts, std::unique_ptr<HybridIndex> index = nullptr);

  /// Builds backends from the config, reading API keys from the environment
  /// and loading the index from index_dir when it holds one.
  static std::unique_ptr<Engine> FromConfig(const EngineConfig& config);

  /// Each document is augmented then swapped into the index as a unit; an
  /// existing doc_id is replaced. Appends one edit-log record per call.
  IngestReport Ingest(const std::vector<Document>& docs, const std::string& actor = "system",
                      const std::optional<SegmentOptions>& segment = std::nullopt);

  /// Throws Error(kConflict) on an empty index, GenerationError when the
  /// generator fails.
  QueryResult Query(const QueryRequest& request) const;

  TagEditResult EditTag(const std::string& target, std::string_view tag, TagScope scope, bool inject,
                        const std::optional<std::string>& probe_query, const std::string& actor = "system");

  HybridIndex& index() { return *index_; }
  const HybridIndex& index() const { return *index_; }
  const EngineConfig& config() const { return config_; }
  const PromptSet& prompts() const { return prompts_; }
  Embedder& embedder() const { return *embedder_; }
  CompletionClient* llm() const { return llm_.get(); }
  std::vector<std::string> ReviewQueue() const;

  void Persist(const std::filesystem::path& dir) const { index_->Persist(dir); }

 private:
  struct Augmented {
    std::vector<AugmentedChunk> items;
    std::vector<std::string> needs_review;
  };
  Augmented Augment(const Document& doc, const TermStatistics& master_background, const SegmentOptions& segment);

  EngineConfig config_;
  std::shared_ptr<Embedder> embedder_;
  std::shared_ptr<CompletionClient> llm_;
  std::shared_ptr<Tagger> tagger_;
  PromptSet prompts_;
  std::unique_ptr<HybridIndex> index_;
  MasterTagCache master_cache_;
  mutable std::mutex review_mu_;
  std::set<std::string> review_queue_;
};

/// Rounds to 9 decimals so traces print identically across platforms.
double TraceRound(double x);

/// Full record of a query: Q', per-source candidates with scores, fused
/// list, pruned survivors and the answer when present.
nlohmann::json QueryTraceJson(const QueryResult& result, const RetrievalConfig& config);

/// Compact form: sub-queries with their evidence chunk ids, plus the answer.
nlohmann::json QueryResultJson(const QueryResult& result);

nlohmann::json PathJson(const SemanticPath& path);
nlohmann::json TagEditJson(const TagEditResult& result);
nlohmann::json EditRecordJson(const EditRecord& record);
nlohmann::json IngestReportJson(const IngestReport& report);

}  // namespace orion
