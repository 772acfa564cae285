#include "orion/completion.hpp"

#include <fstream>

#include "http_post.hpp"
#include "orion/error.hpp"
#include "orion/text.hpp"

using nlohmann::json;

namespace orion {

std::string NullCompletionClient::Complete(const CompletionRequest& request) {
  throw BackendError("no completion backend configured", false, "seat=" + request.seat);
}

ScriptedCompletionClient::ScriptedCompletionClient(std::vector<Rule> rules, std::optional<std::string> fallback)
    : rules_(std::move(rules)), fallback_(std::move(fallback)) {}

std::unique_ptr<ScriptedCompletionClient> ScriptedCompletionClient::FromJson(const json& fixture) {
  std::vector<Rule> rules;
  if (auto it = fixture.find("rules"); it != fixture.end()) {
    if (!it->is_array()) Fail(ErrorKind::kData, "scripted fixture: rules must be an array");
    for (const auto& r : *it) {
      Rule rule;
      rule.seat = r.value("seat", "");
      if (auto c = r.find("contains"); c != r.end()) {
        if (c->is_string()) {
          rule.contains.push_back(c->get<std::string>());
        } else {
          rule.contains = c->get<std::vector<std::string>>();
        }
      }
      rule.response = r.value("response", "");
      rule.fail = r.value("fail", false);
      rules.push_back(std::move(rule));
    }
  }
  std::optional<std::string> fallback;
  if (auto d = fixture.find("default"); d != fixture.end() && d->is_string()) fallback = d->get<std::string>();
  return std::make_unique<ScriptedCompletionClient>(std::move(rules), std::move(fallback));
}

std::unique_ptr<ScriptedCompletionClient> ScriptedCompletionClient::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kData, "cannot open scripted fixture", path.string());
  try {
    return FromJson(json::parse(in));
  } catch (const json::exception& e) {
    Fail(ErrorKind::kData, "malformed scripted fixture", path.string() + ": " + e.what());
  }
}

std::string ScriptedCompletionClient::Complete(const CompletionRequest& request) {
  {
    std::lock_guard lock(mu_);
    recorded_.push_back(request);
  }
  const std::string haystack = request.system + "\n" + request.user;
  for (const auto& rule : rules_) {
    if (!rule.seat.empty() && rule.seat != request.seat) continue;
    bool match = true;
    for (const auto& needle : rule.contains) {
      if (haystack.find(needle) == std::string::npos) {
        match = false;
        break;
      }
    }
    if (!match) continue;
    if (rule.fail) throw BackendError("scripted failure", true, "seat=" + request.seat);
    return rule.response;
  }
  if (fallback_) return *fallback_;
  throw BackendError("no scripted response matches", false, "seat=" + request.seat);
}

std::vector<CompletionRequest> ScriptedCompletionClient::recorded() const {
  std::lock_guard lock(mu_);
  return recorded_;
}

RemoteChatClient::RemoteChatClient(RemoteChatOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) Fail(ErrorKind::kInvalidArgument, "remote completion backend needs an endpoint");
}

json RemoteChatClient::BuildRequestBody(const std::string& model, const CompletionRequest& request) {
  json messages = json::array();
  if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
  messages.push_back({{"role", "user"}, {"content", request.user}});
  return {{"model", model}, {"messages", messages}, {"temperature", request.temperature}};
}

std::string RemoteChatClient::ParseResponseBody(const std::string& body) {
  try {
    auto doc = json::parse(body);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError("malformed completion response", false, e.what());
  }
}

std::string RemoteChatClient::Complete(const CompletionRequest& request) {
  std::vector<std::pair<std::string, std::string>> headers;
  if (!options_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + options_.api_key);
  auto response = detail::PostJsonWithRetry(options_.endpoint, BuildRequestBody(options_.model, request).dump(),
                                            headers, options_.timeout_seconds, options_.retry);
  return ParseResponseBody(response.body);
}

std::string LimitedCompletionClient::Complete(const CompletionRequest& request) {
  limiter_->acquire();
  struct Release {
    InFlightLimiter* l;
    ~Release() { l->release(); }
  } release{limiter_.get()};
  return inner_->Complete(request);
}

std::optional<std::vector<std::string>> ParseStringArray(const std::string& raw) {
  auto open = raw.find('[');
  auto close = raw.rfind(']');
  if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
  try {
    auto doc = json::parse(raw.substr(open, close - open + 1));
    if (!doc.is_array()) return std::nullopt;
    std::vector<std::string> out;
    for (const auto& item : doc) {
      if (!item.is_string()) return std::nullopt;
      out.push_back(item.get<std::string>());
    }
    return out;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

}  // namespace orion
