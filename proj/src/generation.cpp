#include "orion/generation.hpp"

#include <map>

#include <spdlog/spdlog.h>

#include "orion/text.hpp"

namespace orion {

namespace {

struct Item {
  std::string header;
  std::string text;
  std::string chunk_id;
  bool truncated = false;
};

struct Block {
  std::string sub_query;
  std::vector<Item> items;
  bool had_evidence = false;
};

std::string RenderContext(const std::string& q, const std::vector<Block>& blocks, bool abstain) {
  std::string out = "Question: " + q;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    out += "\n\n[Sub-query " + std::to_string(i + 1) + "] " + b.sub_query;
    if (b.items.empty()) {
      out += "\n";
      out += b.had_evidence ? kOmittedMarker : kNoEvidenceMarker;
    }
    for (std::size_t j = 0; j < b.items.size(); ++j) {
      if (j > 0) out += "\n";
      out += "\nPath: " + b.items[j].header + "\n" + b.items[j].text;
    }
  }
  if (abstain) {
    out += "\n\n";
    out += kAbstainInstruction;
  }
  return out;
}

}  // namespace

AssembledPrompt AssemblePrompt(const std::string& q, std::span<const SubQueryContext> s_ctx, const PromptSet& prompts,
                               std::size_t char_budget) {
  if (s_ctx.empty()) Fail(ErrorKind::kInvalidArgument, "prompt assembly needs at least one sub-query context");
  std::vector<Block> blocks;
  bool any = false;
  for (const auto& ctx : s_ctx) {
    Block b{ctx.sub_query, {}, !ctx.pruned.empty()};
    for (const auto& ev : ctx.pruned) b.items.push_back({ev.path.Display(), ev.text, ev.chunk_id});
    any = any || b.had_evidence;
    blocks.push_back(std::move(b));
  }

  AssembledPrompt prompt;
  prompt.abstain = !any;
  prompt.system = RenderTemplate(prompts.answer.system, prompts, {{"q", q}});
  auto render_user = [&] {
    return RenderTemplate(prompts.answer.user, prompts, {{"q", q}, {"context", RenderContext(q, blocks, prompt.abstain)}});
  };
  prompt.user = render_user();

  // Cut from the tail: shorten the last surviving item, or drop it when the
  // marker alone would not fit.
  while (prompt.system.size() + prompt.user.size() > char_budget) {
    Block* last = nullptr;
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
      if (!it->items.empty()) {
        last = &*it;
        break;
      }
    }
    if (last == nullptr) break;  // only the question and scaffolding remain
    const std::size_t excess = prompt.system.size() + prompt.user.size() - char_budget;
    auto& item = last->items.back();
    if (!item.truncated && item.text.size() > excess + kTruncatedMarker.size()) {
      auto keep = text::Utf8BoundaryAtOrBefore(item.text, item.text.size() - excess - kTruncatedMarker.size());
      item.text = item.text.substr(0, keep) + std::string(kTruncatedMarker);
      item.truncated = true;
      ++prompt.evidence_truncated;
    } else {
      if (item.truncated) --prompt.evidence_truncated;
      last->items.pop_back();
      ++prompt.evidence_dropped;
    }
    prompt.user = render_user();
  }

  for (const auto& b : blocks) {
    std::vector<std::string> ids;
    for (const auto& item : b.items) ids.push_back(item.chunk_id);
    prompt.included.emplace_back(b.sub_query, std::move(ids));
  }
  prompt.fingerprint = HexDigest(Hash64(prompt.system + "\x1f" + prompt.user));
  return prompt;
}

Answer GenerateAnswer(const std::string& q, std::span<const SubQueryContext> s_ctx, CompletionClient& client,
                      const PromptSet& prompts, const GenerationOptions& options) {
  auto prompt = AssemblePrompt(q, s_ctx, prompts, options.char_budget);
  CompletionRequest call{prompt.system, prompt.user, options.temperature, "generator"};
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      Answer answer;
      answer.text = text::Trim(client.Complete(call));
      answer.contexts_used = std::move(prompt.included);
      answer.prompt_fingerprint = prompt.fingerprint;
      return answer;
    } catch (const BackendError& e) {
      last_error = e.what();
      spdlog::warn("answer generation failed (attempt {}): {}", attempt + 1, e.what());
    }
  }
  throw GenerationError("answer generation failed: " + last_error, prompt.fingerprint);
}

}  // namespace orion
