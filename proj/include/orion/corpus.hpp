#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace orion {

struct Document {
  std::string doc_id;
  std::string title;
  std::string text;
  std::map<std::string, std::string> metadata;
};

struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool operator==(const CharSpan&) const = default;
};

struct Chunk {
  std::string chunk_id;
  std::string doc_id;
  std::size_t ordinal = 0;
  std::string text;
  CharSpan span;

  bool operator==(const Chunk&) const = default;
};

enum class CorpusSchema {
  // One text file per document; filename stem is the doc_id; optional
  // "key: value" header block terminated by a blank line.
  kProfiles,
  // Line-delimited JSON records {doc_id, title?, text, metadata?}.
  kJsonl,
};

CorpusSchema ParseCorpusSchema(std::string_view name);

/// Loads documents in input order (directory entries sorted by filename).
/// Throws Error(kData) on missing paths, malformed records and duplicate ids.
std::vector<Document> LoadCorpus(const std::filesystem::path& path, CorpusSchema schema);

/// Parses one profile-format file body (header block + text).
Document ParseProfile(std::string doc_id, std::string_view body);

std::string MakeChunkId(std::string_view doc_id, std::size_t ordinal);

/// Returns the doc_id prefix of a chunk id produced by MakeChunkId.
std::string DocIdOfChunk(std::string_view chunk_id);

struct SegmentOptions {
  std::size_t window_chars = 500;
  std::size_t overlap_chars = 0;
};

/// Sliding-window segmentation. Window ends snap leftward to whitespace found
/// within the trailing 10% of the window; otherwise the split is hard (moved
/// back only to a UTF-8 code point boundary). Offsets are byte offsets.
std::vector<Chunk> SegmentDocument(const Document& doc, const SegmentOptions& options);

/// Question/answer record of the QA dataset schema.
struct QaRecord {
  std::string question;
  std::string answer;
  std::string doc_id;
};

std::vector<QaRecord> LoadQaRecords(const std::filesystem::path& path);

}  // namespace orion
