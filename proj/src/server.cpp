#include "orion/server.hpp"

#include <algorithm>
#include <cctype>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "orion/error.hpp"

using nlohmann::json;

namespace orion {

namespace {

ApiResponse ErrorResponse(int status, const std::string& code, const std::string& message,
                          const std::string& detail = {}) {
  return {status, {{"code", code}, {"message", message}, {"detail", detail}}};
}

ApiResponse FromError(const Error& e) {
  if (const auto* gen = dynamic_cast<const GenerationError*>(&e)) {
    auto r = ErrorResponse(502, "generation_failed", e.what(), e.detail());
    r.body["prompt_fingerprint"] = gen->fingerprint();
    return r;
  }
  switch (e.kind()) {
    case ErrorKind::kInvalidArgument:
      return ErrorResponse(400, "invalid_argument", e.what(), e.detail());
    case ErrorKind::kData:
      return ErrorResponse(422, "invalid_data", e.what(), e.detail());
    case ErrorKind::kNotFound:
      return ErrorResponse(404, "not_found", e.what(), e.detail());
    case ErrorKind::kConflict:
      return ErrorResponse(409, "conflict", e.what(), e.detail());
    case ErrorKind::kBackend:
      return ErrorResponse(503, "backend_unavailable", e.what(), e.detail());
    case ErrorKind::kCorrupt:
      return ErrorResponse(500, "index_corrupt", e.what(), e.detail());
  }
  return ErrorResponse(500, "internal", e.what(), e.detail());
}

/// Raised for well-formed JSON that breaks the request schema (422).
struct SchemaViolation {
  std::string message;
};

[[noreturn]] void Violation(const std::string& message) { throw SchemaViolation{message}; }

std::string RequireString(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string()) Violation(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::optional<std::string> OptionalString(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) Violation(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

bool OptionalBool(const json& body, const char* key, bool fallback) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return fallback;
  if (!it->is_boolean()) Violation(std::string("field '") + key + "' must be a boolean");
  return it->get<bool>();
}

std::optional<std::size_t> OptionalCount(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer() || it->get<long long>() < 1) {
    Violation(std::string("field '") + key + "' must be a positive integer");
  }
  return it->get<std::size_t>();
}

std::size_t ParamCount(const ApiRequest& req, const char* key, std::size_t fallback) {
  auto it = req.params.find(key);
  if (it == req.params.end()) return fallback;
  try {
    std::size_t pos = 0;
    auto v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(key);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    Fail(ErrorKind::kInvalidArgument, std::string("query parameter '") + key + "' must be a non-negative integer");
  }
}

std::vector<std::string> SplitPath(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    auto end = path.find('/', start);
    if (end == std::string::npos) end = path.size();
    if (end > start) parts.push_back(path.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

json ChunkJson(const AugmentedChunk& c, bool with_text) {
  json j = {{"chunk_id", c.chunk.chunk_id},
            {"doc_id", c.chunk.doc_id},
            {"ordinal", c.chunk.ordinal},
            {"span", {{"start", c.chunk.span.start}, {"end", c.chunk.span.end}}},
            {"path", PathJson(c.path)}};
  if (with_text) j["text"] = c.chunk.text;
  return j;
}

}  // namespace

ApiService::ApiService(Engine& engine, std::string api_token) : engine_(engine), api_token_(std::move(api_token)) {}

ApiResponse ApiService::Handle(const ApiRequest& req) {
  try {
    auto parts = SplitPath(req.path);
    if (parts.empty() || parts[0] != "v1") return ErrorResponse(404, "not_found", "unknown route", req.path);
    const bool health = parts.size() == 2 && parts[1] == "health";
    if (!api_token_.empty() && !health) {
      auto it = req.headers.find("authorization");
      if (it == req.headers.end() || it->second != "Bearer " + api_token_) {
        return ErrorResponse(401, "unauthorized", "missing or invalid API token");
      }
    }

    json body = json::object();
    if (req.method == "POST" || (req.method == "DELETE" && !req.body.empty())) {
      try {
        body = req.body.empty() ? json::object() : json::parse(req.body);
      } catch (const json::exception& e) {
        return ErrorResponse(400, "malformed_json", "request body is not valid JSON", e.what());
      }
      if (!body.is_object()) return ErrorResponse(422, "schema_violation", "request body must be a JSON object");
    }

    const auto& m = req.method;
    const std::size_t n = parts.size();
    if (n == 2 && parts[1] == "health" && m == "GET") return Health();
    if (n == 2 && parts[1] == "ingest" && m == "POST") return Ingest(body);
    if (n == 2 && parts[1] == "query" && m == "POST") return Query(body);
    if (n == 2 && parts[1] == "editlog" && m == "GET") return EditLog(req);
    if (n == 2 && parts[1] == "docs" && m == "GET") return ListDocs();
    if (n == 4 && parts[1] == "docs" && parts[3] == "chunks" && m == "GET") return DocChunks(parts[2], req);
    if (n == 3 && parts[1] == "chunks" && m == "GET") return GetChunk(parts[2]);
    if (n == 4 && parts[3] == "tags" && (parts[1] == "docs" || parts[1] == "chunks") && (m == "POST" || m == "DELETE")) {
      auto scope = parts[1] == "docs" ? TagScope::kDocument : TagScope::kChunk;
      ApiRequest with_body = req;
      with_body.body = body.dump();
      return EditTags(parts[2], scope, m == "POST", with_body);
    }
    return ErrorResponse(404, "not_found", "unknown route", m + " " + req.path);
  } catch (const SchemaViolation& v) {
    return ErrorResponse(422, "schema_violation", v.message);
  } catch (const Error& e) {
    return FromError(e);
  } catch (const std::exception& e) {
    spdlog::error("unhandled error on {} {}: {}", req.method, req.path, e.what());
    return ErrorResponse(500, "internal", e.what());
  }
}

ApiResponse ApiService::Ingest(const json& body) {
  std::vector<Document> docs;
  if (auto it = body.find("documents"); it != body.end()) {
    if (!it->is_array()) Violation("field 'documents' must be an array");
    for (const auto& d : *it) {
      if (!d.is_object()) Violation("each document must be an object");
      Document doc;
      doc.doc_id = RequireString(d, "doc_id");
      doc.text = RequireString(d, "text");
      doc.title = OptionalString(d, "title").value_or("");
      if (auto md = d.find("metadata"); md != d.end() && !md->is_null()) {
        if (!md->is_object()) Violation("field 'metadata' must be an object");
        for (const auto& [k, v] : md->items()) {
          if (!v.is_string()) Violation("metadata values must be strings");
          doc.metadata[k] = v.get<std::string>();
        }
      }
      if (doc.doc_id.empty()) Violation("doc_id must be non-empty");
      if (doc.text.empty()) Violation("text must be non-empty");
      docs.push_back(std::move(doc));
    }
  } else if (auto path = OptionalString(body, "corpus_path")) {
    auto schema = ParseCorpusSchema(OptionalString(body, "schema").value_or("profiles"));
    docs = LoadCorpus(*path, schema);
  } else {
    Violation("request needs 'documents' or 'corpus_path'");
  }
  if (docs.empty()) Violation("no documents to ingest");

  std::optional<SegmentOptions> segment;
  if (auto s = body.find("segment"); s != body.end() && !s->is_null()) {
    if (!s->is_object()) Violation("field 'segment' must be an object");
    SegmentOptions opts = engine_.config().segment;
    if (auto w = OptionalCount(*s, "window_chars")) opts.window_chars = *w;
    if (auto o = s->find("overlap_chars"); o != s->end()) {
      if (!o->is_number_integer() || o->get<long long>() < 0) Violation("overlap_chars must be a non-negative integer");
      opts.overlap_chars = o->get<std::size_t>();
    }
    segment = opts;
  }
  auto report = engine_.Ingest(docs, OptionalString(body, "actor").value_or("api"), segment);
  return {200, IngestReportJson(report)};
}

ApiResponse ApiService::Query(const json& body) {
  QueryRequest q;
  q.question = RequireString(body, "question");
  if (q.question.find_first_not_of(" \t\r\n") == std::string::npos) Violation("question must be non-empty");
  q.k = OptionalCount(body, "k");
  q.debug = OptionalBool(body, "debug", false);
  q.generate = OptionalBool(body, "generate", true);
  auto result = engine_.Query(q);
  json out = QueryResultJson(result);
  if (q.debug) {
    RetrievalConfig cfg = engine_.config().retrieval;
    if (q.k) cfg.k = *q.k;
    out["trace"] = QueryTraceJson(result, cfg);
  }
  return {200, out};
}

ApiResponse ApiService::ListDocs() {
  json docs = json::array();
  const auto& index = engine_.index();
  for (const auto& id : index.DocumentIds()) {
    std::vector<std::string> chunks;
    try {
      chunks = index.DocumentChunks(id);
    } catch (const Error&) {
      continue;  // removed concurrently
    }
    json master = json::array();
    if (!chunks.empty()) {
      if (auto first = index.Get(chunks.front())) master = PathJson(first->path)["master"];
    }
    docs.push_back({{"doc_id", id}, {"chunk_count", chunks.size()}, {"master_tags", master}});
  }
  return {200, {{"documents", docs}}};
}

ApiResponse ApiService::DocChunks(const std::string& doc_id, const ApiRequest& req) {
  auto ids = engine_.index().DocumentChunks(doc_id);
  const std::size_t offset = ParamCount(req, "offset", 0);
  const std::size_t limit = std::min<std::size_t>(ParamCount(req, "limit", 100), 1000);
  json chunks = json::array();
  for (std::size_t i = offset; i < ids.size() && i < offset + limit; ++i) {
    if (auto c = engine_.index().Get(ids[i])) chunks.push_back(ChunkJson(*c, true));
  }
  return {200, {{"doc_id", doc_id}, {"total", ids.size()}, {"offset", offset}, {"limit", limit}, {"chunks", chunks}}};
}

ApiResponse ApiService::GetChunk(const std::string& chunk_id) {
  auto c = engine_.index().Get(chunk_id);
  if (!c) return ErrorResponse(404, "not_found", "unknown chunk_id: " + chunk_id);
  return {200, ChunkJson(*c, true)};
}

ApiResponse ApiService::EditTags(const std::string& target, TagScope scope, bool inject, const ApiRequest& req) {
  json body = json::parse(req.body);
  std::optional<std::string> tag = OptionalString(body, "tag");
  if (!tag) {
    if (auto it = req.params.find("tag"); it != req.params.end()) tag = it->second;
  }
  if (!tag) Violation("field 'tag' must be a string");
  auto probe = OptionalString(body, "probe_query");
  if (!probe) {
    if (auto it = req.params.find("probe_query"); it != req.params.end()) probe = it->second;
  }
  auto actor = OptionalString(body, "actor").value_or("api");
  auto result = engine_.EditTag(target, *tag, scope, inject, probe, actor);
  json out = TagEditJson(result);
  if (!inject && result.report.noop) {
    auto r = ErrorResponse(404, "tag_not_present", "tag is not on the target path; nothing removed",
                           "tag=" + result.report.tag);
    r.body["edit"] = out;
    return r;
  }
  return {200, out};
}

ApiResponse ApiService::EditLog(const ApiRequest& req) {
  const std::size_t since = ParamCount(req, "since", 0);
  const std::size_t limit = ParamCount(req, "limit", 1000);
  json records = json::array();
  for (const auto& r : engine_.index().EditLog()) {
    if (r.seq <= since) continue;
    if (records.size() >= limit) break;
    records.push_back(EditRecordJson(r));
  }
  return {200, {{"records", records}}};
}

ApiResponse ApiService::Health() {
  const auto& index = engine_.index();
  return {200,
          {{"status", "ok"},
           {"documents", index.DocumentIds().size()},
           {"chunks", index.size()},
           {"embedder", engine_.embedder().fingerprint()},
           {"llm", engine_.llm() ? engine_.llm()->name() : "null"},
           {"ann_active", index.ann_active()},
           {"review_queue", engine_.ReviewQueue().size()}}};
}

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(ApiService& api, std::size_t threads) : impl_(std::make_unique<Impl>()) {
  auto& svr = impl_->server;
  const std::size_t n = std::max<std::size_t>(threads, 1);
  svr.new_task_queue = [n] { return new httplib::ThreadPool(n); };
  svr.set_payload_max_length(64u << 20);
  auto handler = [&api](const httplib::Request& req, httplib::Response& res) {
    ApiRequest in;
    in.method = req.method;
    in.path = req.path;
    in.body = req.body;
    for (const auto& [k, v] : req.params) in.params.emplace(k, v);
    for (const auto& [k, v] : req.headers) {
      std::string key = k;
      std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
      in.headers.emplace(key, v);
    }
    auto out = api.Handle(in);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  svr.Get(".*", handler);
  svr.Post(".*", handler);
  svr.Delete(".*", handler);
}

HttpServer::~HttpServer() { Stop(); }

int HttpServer::Bind(const std::string& host, int port) {
  if (port == 0) {
    int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) Fail(ErrorKind::kInvalidArgument, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    Fail(ErrorKind::kInvalidArgument, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::Listen() { impl_->server.listen_after_bind(); }

void HttpServer::WaitUntilReady() { impl_->server.wait_until_ready(); }

void HttpServer::Stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace orion
