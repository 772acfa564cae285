#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "orion/corpus.hpp"
#include "orion/embedding.hpp"
#include "orion/sparse_index.hpp"
#include "orion/tagging.hpp"
#include "orion/vector_store.hpp"

namespace orion {

inline constexpr std::uint32_t kIndexFormatVersion = 1;

struct AugmentedChunk {
  Chunk chunk;
  SemanticPath path;
  Vector v_text;
  Vector v_path;
};

enum class HitSource { kTag, kSemantic, kSparse };
const char* ToString(HitSource source);

struct RankedHit {
  std::string chunk_id;
  double score = 0.0;  // L2 distance (tag), similarity (dense), BM25 (sparse)
  std::size_t rank = 0;
  HitSource source = HitSource::kTag;
};

struct IndexOptions {
  std::size_t dim = 256;
  Metric tag_metric = Metric::kL2;
  Metric dense_metric = Metric::kCosine;
  std::size_t ann_threshold = 20000;  // 0: always exact
  HnswParams hnsw;
  Bm25Params bm25;
  PathEmbedding path_embedding = PathEmbedding::kMeanTags;
  std::string embedder_fingerprint;
};

enum class TagScope { kDocument, kChunk };
TagScope ParseTagScope(std::string_view name);
const char* ToString(TagScope scope);

struct EditRecord {
  std::uint64_t seq = 0;
  std::string timestamp;  // ISO-8601 UTC
  std::string actor;
  std::string action;  // inject_tag, remove_tag, ingest, ...
  std::string target;
  std::string scope;
  std::string tag;
  std::string outcome;  // applied, noop
  std::vector<std::string> affected;
};

struct TagEditReport {
  std::string target;
  TagScope scope = TagScope::kDocument;
  std::string tag;
  bool noop = false;
  struct Change {
    std::string chunk_id;
    Vector old_v_path;
    Vector new_v_path;
    SemanticPath new_path;
  };
  std::vector<Change> changes;
  std::uint64_t edit_seq = 0;
};

struct UpsertResult {
  std::vector<std::string> applied;
  std::vector<std::pair<std::string, std::string>> failed;  // chunk_id, reason
};

struct SubIndexIds {
  std::set<std::string> tag;
  std::set<std::string> dense;
  std::set<std::string> sparse;
  std::set<std::string> registry;
};

/// The tag-vector, text-vector and BM25 indices over one corpus, kept in
/// lockstep. Readers run concurrently; mutations are serialized.
class HybridIndex {
 public:
  explicit HybridIndex(IndexOptions options);
  HybridIndex(const HybridIndex&) = delete;
  HybridIndex& operator=(const HybridIndex&) = delete;

  const IndexOptions& options() const { return options_; }

  /// Applies each item independently; an invalid item is reported and leaves
  /// the index untouched for that item. Re-upserting a chunk_id replaces it.
  UpsertResult Upsert(const std::vector<AugmentedChunk>& items);

  /// Replaces every chunk of `doc_id` with `items` in one step. Throws
  /// without mutating when any item is invalid. Returns true when the
  /// document existed before.
  bool ReplaceDocument(const std::string& doc_id, const std::vector<AugmentedChunk>& items);

  /// Throws Error(kNotFound) naming the id.
  void RemoveDocument(const std::string& doc_id);

  std::vector<RankedHit> SearchTag(std::span<const float> query, std::size_t n) const;
  std::vector<RankedHit> SearchDense(std::span<const float> query, std::size_t n) const;
  std::vector<RankedHit> SearchSparse(std::string_view query, std::size_t n) const;
  /// Brute-force variants, regardless of the ANN threshold.
  std::vector<RankedHit> ExactSearchTag(std::span<const float> query, std::size_t n) const;
  std::vector<RankedHit> ExactSearchDense(std::span<const float> query, std::size_t n) const;

  /// Appends `tag` to the master segment of every chunk of a document, or to
  /// the paragraph segment of one chunk, re-embedding the affected paths.
  /// Re-injecting a present tag is a no-op. Every call is audited.
  TagEditReport InjectTag(const std::string& target, std::string_view raw_tag, TagScope scope, Embedder& embedder,
                          const std::string& actor = "system");
  /// Inverse of InjectTag. Removing an absent tag is a no-op; removing the
  /// last master tag is rejected.
  TagEditReport RemoveTag(const std::string& target, std::string_view raw_tag, TagScope scope, Embedder& embedder,
                          const std::string& actor = "system");

  std::optional<AugmentedChunk> Get(const std::string& chunk_id) const;
  std::vector<AugmentedChunk> GetMany(const std::vector<std::string>& chunk_ids) const;
  bool HasDocument(const std::string& doc_id) const;
  bool HasChunk(const std::string& chunk_id) const;
  std::vector<std::string> DocumentIds() const;
  /// Chunk ids of a document in ordinal order; throws kNotFound.
  std::vector<std::string> DocumentChunks(const std::string& doc_id) const;
  std::size_t size() const;

  /// L2 (tag metric) distance between `query` and the chunk's path vector,
  /// and its 1-based rank in SearchTag order over the whole index.
  struct Probe {
    double distance = 0.0;
    std::size_t rank = 0;
  };
  Probe ProbeTag(const std::string& chunk_id, std::span<const float> query) const;

  std::uint64_t AppendEditRecord(EditRecord record);
  std::vector<EditRecord> EditLog() const;

  SubIndexIds ChunkIdSets() const;
  SparseStats sparse_stats() const;
  SparseStats RecomputedSparseStats() const;
  bool ann_active() const;

  /// Writes header, chunks, vectors.tag, vectors.dense, postings, editlog.
  void Persist(const std::filesystem::path& dir) const;
  /// Refuses files from another format version or embedder fingerprint and
  /// files whose checksum does not match the header.
  static std::unique_ptr<HybridIndex> Load(const std::filesystem::path& dir, const std::string& expected_fingerprint,
                                           std::optional<IndexOptions> overrides = std::nullopt);

 private:
  struct Entry {
    Chunk chunk;
    SemanticPath path;
  };

  void ValidateLocked(const AugmentedChunk& item) const;
  void PutLocked(const AugmentedChunk& item);
  void EraseChunkLocked(const std::string& chunk_id);
  std::vector<RankedHit> ToHits(const std::vector<ScoredSlot>& scored, HitSource source) const;
  std::vector<std::string> TargetChunksLocked(const std::string& target, TagScope scope) const;
  TagEditReport EditTag(const std::string& target, std::string_view raw_tag, TagScope scope, Embedder& embedder,
                        const std::string& actor, bool inject);
  std::uint64_t AppendEditRecordLocked(EditRecord record);

  IndexOptions options_;
  mutable std::shared_mutex mu_;
  std::vector<std::optional<Entry>> entries_;  // by slot
  std::vector<std::string> slot_ids_;          // by slot; tie-break keys
  std::unordered_map<std::string, Slot> slot_of_;
  std::map<std::string, std::map<std::size_t, std::string>> registry_;  // doc_id -> ordinal -> chunk_id
  VectorStore tag_store_;
  VectorStore dense_store_;
  SparseIndex sparse_;
  std::vector<EditRecord> edit_log_;
  std::uint64_t next_seq_ = 1;
};

}  // namespace orion
