#pragma once

#include <string>
#include <utility>
#include <vector>

#include "orion/completion.hpp"

namespace orion::detail {

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// POSTs a JSON body to a full URL. Retries transport failures, 429 and 5xx
/// with exponential backoff per `policy`. Throws BackendError when attempts
/// are exhausted or on a non-retryable status.
HttpResponse PostJsonWithRetry(const std::string& url, const std::string& body,
                               const std::vector<std::pair<std::string, std::string>>& headers,
                               double timeout_seconds, const RetryPolicy& policy);

}  // namespace orion::detail
