#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace orion {

struct CompletionRequest {
  std::string system;
  std::string user;
  double temperature = 0.0;
  std::string seat;  // "tagger", "rewriter", "pruner", "generator"; informational
};

/// Text completion capability shared by the tagger, rewriter, pruner and
/// generator seats. Implementations throw BackendError on failure.
class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual std::string Complete(const CompletionRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Always fails immediately; forces every degradation path.
class NullCompletionClient final : public CompletionClient {
 public:
  std::string Complete(const CompletionRequest& request) override;
  std::string name() const override { return "null"; }
};

/// Fixture-driven responses. A fixture is
///   {"rules": [{"seat": "...", "contains": "...", "response": "...", "fail": false}], "default": "..."}
/// The first rule whose seat (when given) matches and whose every `contains`
/// needle occurs in system+user wins. With no match the default is returned,
/// or a BackendError is thrown when no default exists.
class ScriptedCompletionClient final : public CompletionClient {
 public:
  struct Rule {
    std::string seat;
    std::vector<std::string> contains;
    std::string response;
    bool fail = false;
  };

  explicit ScriptedCompletionClient(std::vector<Rule> rules, std::optional<std::string> fallback = std::nullopt);
  static std::unique_ptr<ScriptedCompletionClient> FromJson(const nlohmann::json& fixture);
  static std::unique_ptr<ScriptedCompletionClient> FromFile(const std::filesystem::path& path);

  std::string Complete(const CompletionRequest& request) override;
  std::string name() const override { return "scripted"; }

  std::vector<CompletionRequest> recorded() const;

 private:
  std::vector<Rule> rules_;
  std::optional<std::string> fallback_;
  mutable std::mutex mu_;
  std::vector<CompletionRequest> recorded_;
};

struct RetryPolicy {
  int max_attempts = 2;  // first try + one retry
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{5000};
};

struct RemoteChatOptions {
  std::string endpoint;  // full URL, e.g. http://localhost:8000/v1/chat/completions
  std::string model;
  std::string api_key;
  double timeout_seconds = 60.0;
  RetryPolicy retry;
};

/// JSON-over-HTTP chat protocol:
///   request  {model, messages: [{role, content}...], temperature}
///   response {choices: [{message: {content}}]}
class RemoteChatClient final : public CompletionClient {
 public:
  explicit RemoteChatClient(RemoteChatOptions options);
  std::string Complete(const CompletionRequest& request) override;
  std::string name() const override { return "remote:" + options_.model; }

  static nlohmann::json BuildRequestBody(const std::string& model, const CompletionRequest& request);
  static std::string ParseResponseBody(const std::string& body);

 private:
  RemoteChatOptions options_;
};

/// Bounds the number of concurrent backend calls across every seat that
/// shares the limiter.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(std::ptrdiff_t max_in_flight) : slots_(max_in_flight < 1 ? 1 : max_in_flight) {}
  void acquire() { slots_.acquire(); }
  void release() { slots_.release(); }

 private:
  std::counting_semaphore<1 << 16> slots_;
};

class LimitedCompletionClient final : public CompletionClient {
 public:
  LimitedCompletionClient(std::shared_ptr<CompletionClient> inner, std::shared_ptr<InFlightLimiter> limiter)
      : inner_(std::move(inner)), limiter_(std::move(limiter)) {}
  std::string Complete(const CompletionRequest& request) override;
  std::string name() const override { return inner_->name(); }

 private:
  std::shared_ptr<CompletionClient> inner_;
  std::shared_ptr<InFlightLimiter> limiter_;
};

/// Parses model output that should be a JSON array of strings. Tolerates a
/// surrounding code fence or leading prose before the first '['. Returns
/// nullopt when no array can be recovered.
std::optional<std::vector<std::string>> ParseStringArray(const std::string& raw);

}  // namespace orion
