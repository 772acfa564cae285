#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "orion/completion.hpp"
#include "orion/error.hpp"
#include "orion/prompts.hpp"
#include "orion/retrieval.hpp"

namespace orion {

inline constexpr std::string_view kNoEvidenceMarker = "(no evidence found)";
inline constexpr std::string_view kTruncatedMarker = " [truncated]";
inline constexpr std::string_view kOmittedMarker = "(evidence omitted to fit the prompt budget)";
inline constexpr std::string_view kAbstainInstruction =
    "No evidence was found for any sub-query. Reply that the provided context does not contain the answer.";

struct GenerationOptions {
  std::size_t char_budget = 24000;  // system + user characters
  double temperature = 0.0;
};

struct AssembledPrompt {
  std::string system;
  std::string user;
  std::string fingerprint;  // hex hash of system and user
  bool abstain = false;
  std::size_t evidence_dropped = 0;
  std::size_t evidence_truncated = 0;
  std::vector<std::pair<std::string, std::vector<std::string>>> included;  // sub-query, chunk ids kept
};

/// Question first, then one block per sub-query holding each evidence item
/// under a "Path:" header line. Over budget, evidence is cut from the end:
/// the last item is shortened, or dropped when shortening cannot fit.
AssembledPrompt AssemblePrompt(const std::string& q, std::span<const SubQueryContext> s_ctx, const PromptSet& prompts,
                               std::size_t char_budget);

struct Answer {
  std::string text;
  std::vector<std::pair<std::string, std::vector<std::string>>> contexts_used;  // sub-query, chunk ids
  std::string prompt_fingerprint;
};

class GenerationError : public BackendError {
 public:
  GenerationError(const std::string& message, std::string fingerprint)
      : BackendError(message, false, "prompt_fingerprint=" + fingerprint), fingerprint_(std::move(fingerprint)) {}
  const std::string& fingerprint() const { return fingerprint_; }

 private:
  std::string fingerprint_;
};

/// Calls the generator seat; one retry, then GenerationError.
Answer GenerateAnswer(const std::string& q, std::span<const SubQueryContext> s_ctx, CompletionClient& client,
                      const PromptSet& prompts, const GenerationOptions& options = {});

}  // namespace orion
