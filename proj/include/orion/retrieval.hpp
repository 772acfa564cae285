#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "orion/completion.hpp"
#include "orion/embedding.hpp"
#include "orion/index.hpp"
#include "orion/prompts.hpp"

namespace orion {

/// How a source that did not rank a candidate contributes to its fused score.
enum class MissingRankPolicy {
  kZero,          // contributes nothing
  kWorstPlusOne,  // treated as one past the worst rank that source produced
};

MissingRankPolicy ParseMissingRankPolicy(std::string_view name);
const char* ToString(MissingRankPolicy policy);

inline constexpr std::size_t kMaxSubQueryWords = 12;

struct RetrievalConfig {
  std::size_t k = 5;
  std::size_t tag_fanout_multiplier = 3;
  std::optional<std::size_t> sparse_fanout;  // default ceil(2k/5)
  double w_tag = 0.25;
  double w_sem = 0.25;
  double w_sparse = 0.5;
  double eta = 60.0;
  std::size_t max_subqueries = 5;
  bool expansion_enabled = true;
  bool pruning_enabled = true;
  MissingRankPolicy missing_rank = MissingRankPolicy::kZero;
  bool parallel_subqueries = true;

  std::size_t TagFanout() const { return tag_fanout_multiplier * k; }
  std::size_t SparseFanout() const { return sparse_fanout.value_or((2 * k + 4) / 5); }
  /// Throws Error(kInvalidArgument) on negative weights, k == 0 or eta <= 0.
  void Validate() const;
};

/// 1-based ranks per source; absent when the source did not return the chunk.
struct SourceRanks {
  std::optional<std::size_t> tag;
  std::optional<std::size_t> sem;
  std::optional<std::size_t> sparse;

  std::size_t count() const { return (tag ? 1 : 0) + (sem ? 1 : 0) + (sparse ? 1 : 0); }
  bool operator==(const SourceRanks&) const = default;
};

struct Candidate {
  AugmentedChunk chunk;
  SourceRanks ranks;
  std::optional<double> tag_distance;  // query to path vector, tag metric
  std::optional<double> sparse_score;  // BM25
  double dense_similarity = 0.0;       // query to text vector, dense metric
};

struct RrfInput {
  std::string chunk_id;
  SourceRanks ranks;
};

struct FusedHit {
  std::string chunk_id;
  double score = 0.0;
  SourceRanks ranks;
};

struct Evidence {
  std::string chunk_id;
  std::string text;
  SemanticPath path;
};

struct SubQueryContext {
  std::string sub_query;
  std::vector<Candidate> candidates;
  std::vector<FusedHit> fused;
  std::vector<Evidence> pruned;
};

/// The original query followed by parsed sub-queries: deduplicated without
/// regard to case, each cut to 12 words, at most max_subqueries extra
/// entries. Any rewriter fault yields just {q}. A null client disables
/// expansion.
std::vector<std::string> RewriteQuery(const std::string& q, const RetrievalConfig& config, CompletionClient* llm,
                                      const PromptSet& prompts, std::string_view hints = "");

/// Union of the tag-index top-3k and the sparse top-ceil(2k/5), each
/// candidate keeping the ranks it earned. Tag-ranked candidates come first
/// in tag order, then sparse-only ones in sparse order.
std::vector<Candidate> CoarseRetrieve(std::span<const float> query_vec, const std::string& sub_query,
                                      const HybridIndex& index, const RetrievalConfig& config);

/// Assigns R_sem in 1..n by text-vector similarity, ties by chunk_id.
void RankSemantic(std::vector<Candidate>& candidates, std::span<const float> query_vec, Metric dense_metric);

/// sum_j w_j / (eta + R_j) over the sources present. `worst` holds the
/// worst rank per source, used only by kWorstPlusOne.
double RrfScore(const SourceRanks& ranks, const RetrievalConfig& config, const SourceRanks& worst = {});

/// Scores every input and returns the top k by score, then number of ranked
/// sources, then chunk_id.
std::vector<FusedHit> RrfFuse(std::span<const RrfInput> inputs, const RetrievalConfig& config);

/// Sends each fused chunk with its path as anchor to the pruner. Empty
/// output drops the chunk; a failing call keeps it unpruned. A null client or
/// disabled pruning passes every chunk through.
std::vector<Evidence> PruneContexts(std::span<const FusedHit> fused, std::span<const Candidate> candidates,
                                    const std::string& sub_query, const std::string& original_query,
                                    CompletionClient* llm, const PromptSet& prompts, const RetrievalConfig& config);

/// Rewrite, then per sub-query: coarse retrieval, semantic ranking, fusion
/// and pruning. Contexts come back in sub-query order.
std::vector<SubQueryContext> Retrieve(const std::string& q, const HybridIndex& index, Embedder& embedder,
                                      CompletionClient* llm, const PromptSet& prompts, const RetrievalConfig& config);

/// One sub-query through the pipeline, without rewriting.
SubQueryContext RetrieveSubQuery(const std::string& sub_query, const std::string& original_query,
                                 const HybridIndex& index, Embedder& embedder, CompletionClient* llm,
                                 const PromptSet& prompts, const RetrievalConfig& config);

}  // namespace orion
