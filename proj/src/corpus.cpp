#include "orion/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "orion/error.hpp"
#include "orion/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace orion {
namespace {

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kData, "cannot open file", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool IsHeaderLine(std::string_view line, std::string* key, std::string* value) {
  auto colon = line.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon > 64) return false;
  auto k = line.substr(0, colon);
  for (char c : k) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
              c == '-' || c == ' ';
    if (!ok) return false;
  }
  if (key) *key = text::ToLower(text::Trim(k));
  if (value) *value = text::Trim(line.substr(colon + 1));
  return true;
}

Document ParseJsonDocument(const json& record, std::size_t line_no, const fs::path& path) {
  auto where = path.string() + ":" + std::to_string(line_no);
  if (!record.is_object()) Fail(ErrorKind::kData, "record is not an object", where);
  auto id = record.find("doc_id");
  auto body = record.find("text");
  if (id == record.end() || !id->is_string() || id->get<std::string>().empty()) {
    Fail(ErrorKind::kData, "record missing string field doc_id", where);
  }
  if (body == record.end() || !body->is_string() || body->get<std::string>().empty()) {
    Fail(ErrorKind::kData, "record missing non-empty string field text", where);
  }
  Document doc;
  doc.doc_id = id->get<std::string>();
  doc.text = body->get<std::string>();
  if (auto t = record.find("title"); t != record.end() && t->is_string()) doc.title = t->get<std::string>();
  if (auto m = record.find("metadata"); m != record.end()) {
    if (!m->is_object()) Fail(ErrorKind::kData, "metadata must be an object", where);
    for (auto& [k, v] : m->items()) doc.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  return doc;
}

std::vector<Document> LoadProfiles(const fs::path& path) {
  std::vector<fs::path> files;
  if (fs::is_regular_file(path)) {
    files.push_back(path);
  } else {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (!entry.is_regular_file()) continue;
      auto name = entry.path().filename().string();
      if (name.empty() || name[0] == '.') continue;
      files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  }
  std::vector<Document> docs;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < files.size(); ++i) {
    auto id = files[i].stem().string();
    if (!seen.insert(id).second) Fail(ErrorKind::kData, "duplicate doc_id: " + id, files[i].string());
    auto doc = ParseProfile(id, ReadFile(files[i]));
    if (doc.text.empty()) Fail(ErrorKind::kData, "document has empty text: " + id, "record " + std::to_string(i));
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> LoadJsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kData, "cannot open file", path.string());
  std::vector<Document> docs;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::Trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      Fail(ErrorKind::kData, "malformed record", path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    auto doc = ParseJsonDocument(record, line_no, path);
    if (!seen.insert(doc.doc_id).second) {
      Fail(ErrorKind::kData, "duplicate doc_id: " + doc.doc_id, path.string() + ":" + std::to_string(line_no));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace

CorpusSchema ParseCorpusSchema(std::string_view name) {
  if (name == "profiles") return CorpusSchema::kProfiles;
  if (name == "jsonl") return CorpusSchema::kJsonl;
  Fail(ErrorKind::kInvalidArgument, "unknown corpus schema: " + std::string(name));
}

std::vector<Document> LoadCorpus(const fs::path& path, CorpusSchema schema) {
  if (!fs::exists(path)) Fail(ErrorKind::kData, "corpus path does not exist", path.string());
  switch (schema) {
    case CorpusSchema::kProfiles:
      return LoadProfiles(path);
    case CorpusSchema::kJsonl:
      if (fs::is_directory(path)) Fail(ErrorKind::kData, "jsonl corpus must be a file", path.string());
      return LoadJsonl(path);
  }
  return {};
}

Document ParseProfile(std::string doc_id, std::string_view body) {
  Document doc;
  doc.doc_id = std::move(doc_id);

  // Header block: leading run of "key: value" lines ended by a blank line.
  std::map<std::string, std::string> header;
  std::size_t pos = 0;
  bool header_ok = false;
  while (pos < body.size()) {
    auto nl = body.find('\n', pos);
    auto line = body.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::Trim(line).empty()) {
      header_ok = !header.empty();
      pos = nl == std::string_view::npos ? body.size() : nl + 1;
      break;
    }
    std::string key, value;
    if (!IsHeaderLine(line, &key, &value)) break;
    header[key] = value;
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (header_ok) {
    doc.metadata = std::move(header);
    body = body.substr(pos);
    if (auto it = doc.metadata.find("title"); it != doc.metadata.end()) doc.title = it->second;
  }
  doc.text = text::Trim(body);
  return doc;
}

std::string MakeChunkId(std::string_view doc_id, std::size_t ordinal) {
  return std::string(doc_id) + "#" + std::to_string(ordinal);
}

std::string DocIdOfChunk(std::string_view chunk_id) {
  auto hash = chunk_id.rfind('#');
  return std::string(hash == std::string_view::npos ? chunk_id : chunk_id.substr(0, hash));
}

namespace {
bool IsContinuation(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }
}  // namespace

std::vector<Chunk> SegmentDocument(const Document& doc, const SegmentOptions& options) {
  if (options.window_chars == 0) Fail(ErrorKind::kInvalidArgument, "window_chars must be >= 1");
  if (options.overlap_chars >= options.window_chars) {
    Fail(ErrorKind::kInvalidArgument, "overlap_chars must be smaller than window_chars");
  }
  const std::string_view body = doc.text;
  const std::size_t n = body.size();
  const std::size_t window = options.window_chars;
  const std::size_t overlap = options.overlap_chars;
  const std::size_t tolerance = window / 10;

  std::vector<Chunk> chunks;
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + window;
    if (end >= n) {
      end = n;
    } else {
      std::size_t snapped = 0;
      for (std::size_t i = end; i > end - tolerance; --i) {
        // Cut after the whitespace byte so the next window starts on a word.
        if (text::IsSpace(static_cast<unsigned char>(body[i - 1]))) {
          snapped = i;
          break;
        }
      }
      if (snapped > start + overlap) {
        end = snapped;
      } else {
        auto boundary = text::Utf8BoundaryAtOrBefore(body, end);
        if (boundary > start + overlap) {
          end = boundary;
        } else {
          // Window too small for this code point: extend past it instead.
          while (end < n && IsContinuation(body[end])) ++end;
        }
      }
    }
    Chunk c;
    c.doc_id = doc.doc_id;
    c.ordinal = chunks.size();
    c.chunk_id = MakeChunkId(doc.doc_id, c.ordinal);
    c.span = {start, end};
    c.text = std::string(body.substr(start, end - start));
    chunks.push_back(std::move(c));
    if (end == n) break;
    start = end - overlap;
    while (start < end && IsContinuation(body[start])) ++start;
  }
  return chunks;
}

std::vector<QaRecord> LoadQaRecords(const fs::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kData, "cannot open QA file", path.string());
  std::vector<QaRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::Trim(line).empty()) continue;
    auto where = path.string() + ":" + std::to_string(line_no);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      Fail(ErrorKind::kData, "malformed QA record", where + ": " + e.what());
    }
    QaRecord qa;
    for (auto [field, target] : {std::pair{"question", &qa.question}, std::pair{"answer", &qa.answer},
                                 std::pair{"doc_id", &qa.doc_id}}) {
      auto it = record.find(field);
      if (it == record.end() || !it->is_string()) {
        Fail(ErrorKind::kData, std::string("QA record missing string field ") + field, where);
      }
      *target = it->get<std::string>();
    }
    if (qa.question.empty() || qa.doc_id.empty()) Fail(ErrorKind::kData, "QA record has empty question or doc_id", where);
    out.push_back(std::move(qa));
  }
  return out;
}

}  // namespace orion
