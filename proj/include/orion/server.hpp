#pragma once

#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "orion/engine.hpp"

namespace orion {

struct ApiRequest {
  std::string method;  // GET, POST, DELETE
  std::string path;    // decoded, e.g. /v1/chunks/acme#0/tags
  std::string body;
  std::map<std::string, std::string> params;   // query string
  std::map<std::string, std::string> headers;  // lowercase names
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// The /v1 JSON API over an Engine, independent of any socket layer.
/// Errors come back as {code, message, detail}.
class ApiService {
 public:
  /// A non-empty token makes every route except /v1/health require
  /// "Authorization: Bearer <token>".
  explicit ApiService(Engine& engine, std::string api_token = "");

  ApiResponse Handle(const ApiRequest& request);

 private:
  ApiResponse Ingest(const nlohmann::json& body);
  ApiResponse Query(const nlohmann::json& body);
  ApiResponse ListDocs();
  ApiResponse DocChunks(const std::string& doc_id, const ApiRequest& request);
  ApiResponse GetChunk(const std::string& chunk_id);
  ApiResponse EditTags(const std::string& target, TagScope scope, bool inject, const ApiRequest& request);
  ApiResponse EditLog(const ApiRequest& request);
  ApiResponse Health();

  Engine& engine_;
  std::string api_token_;
};

/// Serves an ApiService over HTTP.
class HttpServer {
 public:
  HttpServer(ApiService& api, std::size_t threads = 8);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds `host:port`; port 0 picks a free port. Returns the bound port.
  int Bind(const std::string& host, int port);
  /// Blocks until Stop().
  void Listen();
  /// Blocks until a concurrent Listen() accepts connections.
  void WaitUntilReady();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace orion
