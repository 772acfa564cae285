#include "http_post.hpp"

#include <algorithm>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "orion/error.hpp"

namespace orion::detail {
namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl SplitUrl(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw BackendError("endpoint must be an absolute URL", false, url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool RetryableStatus(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

HttpResponse PostJsonWithRetry(const std::string& url, const std::string& body,
                               const std::vector<std::pair<std::string, std::string>>& headers,
                               double timeout_seconds, const RetryPolicy& policy) {
  auto target = SplitUrl(url);
  httplib::Client client(target.origin);
  auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::duration<double>(timeout_seconds));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);

  auto backoff = policy.initial_backoff;
  const int attempts = std::max(1, policy.max_attempts);
  std::string last_error;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto result = client.Post(target.path, hdrs, body, "application/json");
    if (result) {
      if (result->status >= 200 && result->status < 300) return {result->status, result->body};
      last_error = "HTTP " + std::to_string(result->status) + ": " + result->body.substr(0, 512);
      if (!RetryableStatus(result->status)) throw BackendError("backend rejected request", false, last_error);
    } else {
      last_error = "transport error: " + httplib::to_string(result.error());
    }
    if (attempt < attempts) {
      spdlog::warn("POST {} failed ({}); retrying in {} ms", url, last_error, backoff.count());
      std::this_thread::sleep_for(backoff);
      backoff = std::min(policy.max_backoff,
                         std::chrono::milliseconds(static_cast<long long>(backoff.count() * policy.multiplier)));
    }
  }
  throw BackendError("backend unavailable after " + std::to_string(attempts) + " attempts", true, last_error);
}

}  // namespace orion::detail
