#pragma once

#include <stdexcept>
#include <string>

namespace orion {

enum class ErrorKind {
  kInvalidArgument,  // caller supplied something malformed
  kData,             // corpus / dataset / file content problem
  kNotFound,
  kConflict,         // e.g. query against an empty index
  kBackend,          // embedder or completion service failure
  kCorrupt,          // persisted index failed validation
};

const char* ToString(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string detail = {})
      : std::runtime_error(message), kind_(kind), detail_(std::move(detail)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

/// Backend failure that a caller may reasonably retry.
class BackendError : public Error {
 public:
  BackendError(const std::string& message, bool retryable, std::string detail = {})
      : Error(ErrorKind::kBackend, message, std::move(detail)), retryable_(retryable) {}

  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message, std::string detail = {}) {
  throw Error(kind, message, std::move(detail));
}

}  // namespace orion
