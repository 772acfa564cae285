#include "orion/retrieval.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <set>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "orion/error.hpp"
#include "orion/text.hpp"

namespace orion {

MissingRankPolicy ParseMissingRankPolicy(std::string_view name) {
  if (name == "zero") return MissingRankPolicy::kZero;
  if (name == "worst_plus_one") return MissingRankPolicy::kWorstPlusOne;
  Fail(ErrorKind::kInvalidArgument, "unknown missing-rank policy: " + std::string(name));
}

const char* ToString(MissingRankPolicy policy) {
  return policy == MissingRankPolicy::kZero ? "zero" : "worst_plus_one";
}

void RetrievalConfig::Validate() const {
  if (k == 0) Fail(ErrorKind::kInvalidArgument, "k must be >= 1");
  if (tag_fanout_multiplier == 0) Fail(ErrorKind::kInvalidArgument, "tag_fanout_multiplier must be >= 1");
  if (w_tag < 0 || w_sem < 0 || w_sparse < 0) Fail(ErrorKind::kInvalidArgument, "RRF weights must be non-negative");
  if (!(eta > 0)) Fail(ErrorKind::kInvalidArgument, "eta must be positive");
}

namespace {

std::string CapWords(const std::string& s, std::size_t max_words) {
  auto words = text::SplitWhitespace(s);
  if (words.size() > max_words) words.resize(max_words);
  return text::Join(words, " ");
}

}  // namespace

std::vector<std::string> RewriteQuery(const std::string& q, const RetrievalConfig& config, CompletionClient* llm,
                                      const PromptSet& prompts, std::string_view hints) {
  if (text::Trim(q).empty()) Fail(ErrorKind::kInvalidArgument, "query must be non-empty");
  std::vector<std::string> out{q};
  if (!config.expansion_enabled || llm == nullptr || config.max_subqueries == 0) return out;

  std::map<std::string, std::string> fields{
      {"q", q}, {"max_n", std::to_string(config.max_subqueries)}, {"hist", std::string(hints)}};
  CompletionRequest call;
  call.seat = "rewriter";
  call.system = RenderTemplate(prompts.rewrite.system, prompts, fields);
  call.user = RenderTemplate(prompts.rewrite.user, prompts, fields);

  std::optional<std::vector<std::string>> parsed;
  for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
    try {
      parsed = ParseStringArray(llm->Complete(call));
    } catch (const BackendError& e) {
      spdlog::warn("query rewriter failed (attempt {}): {}", attempt + 1, e.what());
    }
    if (!parsed && attempt == 0) call.user += "\n\nReminder: return only the JSON array of strings, nothing else.";
  }
  if (!parsed) {
    spdlog::warn("query rewriter unavailable; using the original query only");
    return out;
  }

  std::set<std::string> seen{text::ToLower(q)};
  for (const auto& raw : *parsed) {
    if (out.size() >= config.max_subqueries + 1) break;
    auto sub = CapWords(raw, kMaxSubQueryWords);
    if (sub.empty()) continue;
    if (!seen.insert(text::ToLower(sub)).second) continue;
    out.push_back(std::move(sub));
  }
  return out;
}

std::vector<Candidate> CoarseRetrieve(std::span<const float> query_vec, const std::string& sub_query,
                                      const HybridIndex& index, const RetrievalConfig& config) {
  std::vector<Candidate> out;
  if (index.size() == 0) return out;
  std::unordered_map<std::string, std::size_t> pos;
  auto add = [&](const RankedHit& hit) -> Candidate* {
    if (auto it = pos.find(hit.chunk_id); it != pos.end()) return &out[it->second];
    auto chunk = index.Get(hit.chunk_id);
    if (!chunk) return nullptr;  // removed between search and fetch
    pos.emplace(hit.chunk_id, out.size());
    out.push_back(Candidate{std::move(*chunk), {}, std::nullopt, std::nullopt, 0.0});
    return &out.back();
  };
  for (const auto& hit : index.SearchTag(query_vec, config.TagFanout())) {
    if (auto* c = add(hit)) {
      c->ranks.tag = hit.rank;
      c->tag_distance = hit.score;
    }
  }
  if (config.SparseFanout() > 0) {
    for (const auto& hit : index.SearchSparse(sub_query, config.SparseFanout())) {
      if (auto* c = add(hit)) {
        c->ranks.sparse = hit.rank;
        c->sparse_score = hit.score;
      }
    }
  }
  return out;
}

void RankSemantic(std::vector<Candidate>& candidates, std::span<const float> query_vec, Metric dense_metric) {
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
    candidates[i].dense_similarity = Similarity(query_vec, candidates[i].chunk.v_text, dense_metric);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ca = candidates[a];
    const auto& cb = candidates[b];
    if (ca.dense_similarity != cb.dense_similarity) return Closer(ca.dense_similarity, cb.dense_similarity, dense_metric);
    return ca.chunk.chunk.chunk_id < cb.chunk.chunk.chunk_id;
  });
  for (std::size_t r = 0; r < order.size(); ++r) candidates[order[r]].ranks.sem = r + 1;
}

double RrfScore(const SourceRanks& ranks, const RetrievalConfig& config, const SourceRanks& worst) {
  auto term = [&](double w, const std::optional<std::size_t>& r, const std::optional<std::size_t>& worst_r) {
    if (r) return w / (config.eta + static_cast<double>(*r));
    if (config.missing_rank == MissingRankPolicy::kWorstPlusOne && worst_r) {
      return w / (config.eta + static_cast<double>(*worst_r + 1));
    }
    return 0.0;
  };
  return term(config.w_tag, ranks.tag, worst.tag) + term(config.w_sem, ranks.sem, worst.sem) +
         term(config.w_sparse, ranks.sparse, worst.sparse);
}

std::vector<FusedHit> RrfFuse(std::span<const RrfInput> inputs, const RetrievalConfig& config) {
  SourceRanks worst;
  auto widen = [](std::optional<std::size_t>& w, const std::optional<std::size_t>& r) {
    if (r && (!w || *r > *w)) w = r;
  };
  for (const auto& in : inputs) {
    widen(worst.tag, in.ranks.tag);
    widen(worst.sem, in.ranks.sem);
    widen(worst.sparse, in.ranks.sparse);
  }
  std::vector<FusedHit> fused;
  fused.reserve(inputs.size());
  for (const auto& in : inputs) fused.push_back({in.chunk_id, RrfScore(in.ranks, config, worst), in.ranks});
  auto better = [](const FusedHit& a, const FusedHit& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.ranks.count() != b.ranks.count()) return a.ranks.count() > b.ranks.count();
    return a.chunk_id < b.chunk_id;
  };
  const std::size_t n = std::min(config.k, fused.size());
  std::partial_sort(fused.begin(), fused.begin() + static_cast<std::ptrdiff_t>(n), fused.end(), better);
  fused.resize(n);
  return fused;
}

std::vector<Evidence> PruneContexts(std::span<const FusedHit> fused, std::span<const Candidate> candidates,
                                    const std::string& sub_query, const std::string& original_query,
                                    CompletionClient* llm, const PromptSet& prompts, const RetrievalConfig& config) {
  std::unordered_map<std::string, const Candidate*> by_id;
  for (const auto& c : candidates) by_id.emplace(c.chunk.chunk.chunk_id, &c);
  std::vector<Evidence> out;
  for (const auto& hit : fused) {
    auto it = by_id.find(hit.chunk_id);
    if (it == by_id.end()) Fail(ErrorKind::kInvalidArgument, "fused hit has no candidate", hit.chunk_id);
    const auto& aug = it->second->chunk;
    Evidence ev{hit.chunk_id, aug.chunk.text, aug.path};
    if (!config.pruning_enabled || llm == nullptr) {
      out.push_back(std::move(ev));
      continue;
    }
    std::map<std::string, std::string> fields{
        {"query", original_query}, {"sub_query", sub_query}, {"path", aug.path.Display()}, {"text", aug.chunk.text}};
    CompletionRequest call;
    call.seat = "pruner";
    call.system = RenderTemplate(prompts.prune.system, prompts, fields);
    call.user = RenderTemplate(prompts.prune.user, prompts, fields);
    try {
      ev.text = std::string(text::Trim(llm->Complete(call)));
    } catch (const BackendError& e) {
      spdlog::warn("pruner failed for {}; keeping the chunk unpruned: {}", hit.chunk_id, e.what());
    }
    if (!ev.text.empty()) out.push_back(std::move(ev));
  }
  return out;
}

SubQueryContext RetrieveSubQuery(const std::string& sub_query, const std::string& original_query,
                                 const HybridIndex& index, Embedder& embedder, CompletionClient* llm,
                                 const PromptSet& prompts, const RetrievalConfig& config) {
  SubQueryContext ctx;
  ctx.sub_query = sub_query;
  const std::string texts[] = {sub_query};
  auto query_vec = EmbedText(texts, embedder, index.options().dim).front();
  ctx.candidates = CoarseRetrieve(query_vec, sub_query, index, config);
  if (ctx.candidates.empty()) return ctx;
  RankSemantic(ctx.candidates, query_vec, index.options().dense_metric);
  std::vector<RrfInput> inputs;
  inputs.reserve(ctx.candidates.size());
  for (const auto& c : ctx.candidates) inputs.push_back({c.chunk.chunk.chunk_id, c.ranks});
  ctx.fused = RrfFuse(inputs, config);
  ctx.pruned = PruneContexts(ctx.fused, ctx.candidates, sub_query, original_query, llm, prompts, config);
  return ctx;
}

std::vector<SubQueryContext> Retrieve(const std::string& q, const HybridIndex& index, Embedder& embedder,
                                      CompletionClient* llm, const PromptSet& prompts, const RetrievalConfig& config) {
  config.Validate();
  auto queries = RewriteQuery(q, config, llm, prompts);
  std::vector<SubQueryContext> out;
  out.reserve(queries.size());
  if (!config.parallel_subqueries || queries.size() == 1) {
    for (const auto& sub : queries) out.push_back(RetrieveSubQuery(sub, q, index, embedder, llm, prompts, config));
    return out;
  }
  std::vector<std::future<SubQueryContext>> jobs;
  for (const auto& sub : queries) {
    jobs.push_back(std::async(std::launch::async, [&, sub] {
      return RetrieveSubQuery(sub, q, index, embedder, llm, prompts, config);
    }));
  }
  for (auto& job : jobs) out.push_back(job.get());
  return out;
}

}  // namespace orion
