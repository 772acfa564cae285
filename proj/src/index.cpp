#include "orion/index.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "orion/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace orion {

const char* ToString(HitSource source) {
  switch (source) {
    case HitSource::kTag:
      return "tag";
    case HitSource::kSemantic:
      return "dense";
    case HitSource::kSparse:
      return "sparse";
  }
  return "unknown";
}

TagScope ParseTagScope(std::string_view name) {
  if (name == "document" || name == "doc") return TagScope::kDocument;
  if (name == "chunk") return TagScope::kChunk;
  Fail(ErrorKind::kInvalidArgument, "unknown tag scope: " + std::string(name));
}

const char* ToString(TagScope scope) { return scope == TagScope::kDocument ? "document" : "chunk"; }

namespace {

std::string UtcNow() {
  auto now = std::chrono::system_clock::now();
  auto t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool AllFinite(const Vector& v) {
  return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t GetU32(std::string_view in, std::size_t& pos) {
  if (pos + 4 > in.size()) Fail(ErrorKind::kCorrupt, "postings file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

void PutFloats(std::string& out, std::span<const float> values) {
  for (float f : values) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    PutU32(out, bits);
  }
}

std::uint32_t Crc32(std::string_view data) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
}

void WriteFile(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kInvalidArgument, "cannot write index file", path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kInvalidArgument, "failed writing index file", path.string());
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kCorrupt, "missing index file", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json EditRecordToJson(const EditRecord& r) {
  return {{"seq", r.seq},       {"timestamp", r.timestamp}, {"actor", r.actor},     {"action", r.action},
          {"target", r.target}, {"scope", r.scope},         {"tag", r.tag},         {"outcome", r.outcome},
          {"affected", r.affected}};
}

EditRecord EditRecordFromJson(const json& j) {
  EditRecord r;
  r.seq = j.at("seq").get<std::uint64_t>();
  r.timestamp = j.value("timestamp", "");
  r.actor = j.value("actor", "");
  r.action = j.value("action", "");
  r.target = j.value("target", "");
  r.scope = j.value("scope", "");
  r.tag = j.value("tag", "");
  r.outcome = j.value("outcome", "");
  r.affected = j.value("affected", std::vector<std::string>{});
  return r;
}

std::vector<Tag> TagsFromStrings(const std::vector<std::string>& raw) {
  std::vector<Tag> out;
  for (const auto& s : raw) {
    auto t = Tag::Normalize(s);
    if (!t || t->text() != s) Fail(ErrorKind::kCorrupt, "stored tag is not normalized: " + s);
    out.push_back(*t);
  }
  return out;
}

}  // namespace

HybridIndex::HybridIndex(IndexOptions options)
    : options_(std::move(options)),
      tag_store_(options_.dim, options_.tag_metric, options_.ann_threshold, options_.hnsw),
      dense_store_(options_.dim, options_.dense_metric, options_.ann_threshold, options_.hnsw),
      sparse_(options_.bm25) {}

void HybridIndex::ValidateLocked(const AugmentedChunk& item) const {
  const auto& id = item.chunk.chunk_id;
  if (id.empty() || item.chunk.doc_id.empty()) Fail(ErrorKind::kInvalidArgument, "chunk needs chunk_id and doc_id");
  if (item.path.master.empty()) Fail(ErrorKind::kInvalidArgument, "semantic path has no master tag", id);
  for (const auto* v : {&item.v_text, &item.v_path}) {
    if (v->size() != options_.dim) {
      Fail(ErrorKind::kInvalidArgument,
           "dimension mismatch: got " + std::to_string(v->size()) + ", index expects " + std::to_string(options_.dim),
           id);
    }
    if (!AllFinite(*v)) Fail(ErrorKind::kInvalidArgument, "vector has non-finite entries", id);
  }
  if (auto it = slot_of_.find(id); it != slot_of_.end()) {
    if (entries_[it->second]->chunk.doc_id != item.chunk.doc_id) {
      Fail(ErrorKind::kInvalidArgument, "chunk_id already belongs to another document", id);
    }
  }
}

void HybridIndex::PutLocked(const AugmentedChunk& item) {
  const auto& id = item.chunk.chunk_id;
  Slot slot;
  if (auto it = slot_of_.find(id); it != slot_of_.end()) {
    slot = it->second;
    registry_[entries_[slot]->chunk.doc_id].erase(entries_[slot]->chunk.ordinal);
  } else {
    slot = static_cast<Slot>(entries_.size());
    entries_.emplace_back();
    slot_ids_.push_back(id);
    slot_of_.emplace(id, slot);
  }
  entries_[slot] = Entry{item.chunk, item.path};
  tag_store_.Put(slot, item.v_path);
  dense_store_.Put(slot, item.v_text);
  sparse_.Put(slot, item.chunk.text);
  registry_[item.chunk.doc_id][item.chunk.ordinal] = id;
}

void HybridIndex::EraseChunkLocked(const std::string& chunk_id) {
  auto it = slot_of_.find(chunk_id);
  if (it == slot_of_.end()) return;
  Slot slot = it->second;
  const auto& entry = *entries_[slot];
  auto reg = registry_.find(entry.chunk.doc_id);
  if (reg != registry_.end()) {
    reg->second.erase(entry.chunk.ordinal);
    if (reg->second.empty()) registry_.erase(reg);
  }
  tag_store_.Remove(slot);
  dense_store_.Remove(slot);
  sparse_.Remove(slot);
  entries_[slot].reset();
  slot_of_.erase(it);
}

UpsertResult HybridIndex::Upsert(const std::vector<AugmentedChunk>& items) {
  UpsertResult result;
  std::unique_lock lock(mu_);
  for (const auto& item : items) {
    try {
      ValidateLocked(item);
    } catch (const Error& e) {
      result.failed.emplace_back(item.chunk.chunk_id, e.what());
      continue;
    }
    PutLocked(item);
    result.applied.push_back(item.chunk.chunk_id);
  }
  return result;
}

bool HybridIndex::ReplaceDocument(const std::string& doc_id, const std::vector<AugmentedChunk>& items) {
  std::unique_lock lock(mu_);
  std::set<std::string> ids;
  for (const auto& item : items) {
    if (item.chunk.doc_id != doc_id) Fail(ErrorKind::kInvalidArgument, "chunk does not belong to " + doc_id);
    if (!ids.insert(item.chunk.chunk_id).second) {
      Fail(ErrorKind::kInvalidArgument, "duplicate chunk_id in batch", item.chunk.chunk_id);
    }
    ValidateLocked(item);
  }
  bool existed = false;
  if (auto reg = registry_.find(doc_id); reg != registry_.end()) {
    existed = true;
    std::vector<std::string> stale;
    for (const auto& [ordinal, id] : reg->second) {
      if (!ids.count(id)) stale.push_back(id);
    }
    for (const auto& id : stale) EraseChunkLocked(id);
  }
  for (const auto& item : items) PutLocked(item);
  return existed;
}

void HybridIndex::RemoveDocument(const std::string& doc_id) {
  std::unique_lock lock(mu_);
  auto reg = registry_.find(doc_id);
  if (reg == registry_.end()) Fail(ErrorKind::kNotFound, "unknown doc_id: " + doc_id);
  std::vector<std::string> ids;
  for (const auto& [ordinal, id] : reg->second) ids.push_back(id);
  for (const auto& id : ids) EraseChunkLocked(id);
}

std::vector<RankedHit> HybridIndex::ToHits(const std::vector<ScoredSlot>& scored, HitSource source) const {
  std::vector<RankedHit> hits;
  hits.reserve(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) {
    hits.push_back({slot_ids_[scored[i].slot], scored[i].score, i + 1, source});
  }
  return hits;
}

std::vector<RankedHit> HybridIndex::SearchTag(std::span<const float> query, std::size_t n) const {
  if (n == 0) Fail(ErrorKind::kInvalidArgument, "n must be >= 1");
  std::shared_lock lock(mu_);
  return ToHits(tag_store_.Search(query, n, slot_ids_), HitSource::kTag);
}

std::vector<RankedHit> HybridIndex::SearchDense(std::span<const float> query, std::size_t n) const {
  if (n == 0) Fail(ErrorKind::kInvalidArgument, "n must be >= 1");
  std::shared_lock lock(mu_);
  return ToHits(dense_store_.Search(query, n, slot_ids_), HitSource::kSemantic);
}

std::vector<RankedHit> HybridIndex::ExactSearchTag(std::span<const float> query, std::size_t n) const {
  if (n == 0) Fail(ErrorKind::kInvalidArgument, "n must be >= 1");
  std::shared_lock lock(mu_);
  return ToHits(tag_store_.ExactSearch(query, n, slot_ids_), HitSource::kTag);
}

std::vector<RankedHit> HybridIndex::ExactSearchDense(std::span<const float> query, std::size_t n) const {
  if (n == 0) Fail(ErrorKind::kInvalidArgument, "n must be >= 1");
  std::shared_lock lock(mu_);
  return ToHits(dense_store_.ExactSearch(query, n, slot_ids_), HitSource::kSemantic);
}

std::vector<RankedHit> HybridIndex::SearchSparse(std::string_view query, std::size_t n) const {
  if (n == 0) Fail(ErrorKind::kInvalidArgument, "n must be >= 1");
  std::shared_lock lock(mu_);
  auto scored = sparse_.Score(query);
  auto better = [&](const ScoredSlot& a, const ScoredSlot& b) {
    if (a.score != b.score) return a.score > b.score;
    return slot_ids_[a.slot] < slot_ids_[b.slot];
  };
  if (scored.size() > n) {
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), better);
    scored.resize(n);
  } else {
    std::sort(scored.begin(), scored.end(), better);
  }
  return ToHits(scored, HitSource::kSparse);
}

std::vector<std::string> HybridIndex::TargetChunksLocked(const std::string& target, TagScope scope) const {
  if (scope == TagScope::kChunk) {
    if (!slot_of_.count(target)) Fail(ErrorKind::kNotFound, "unknown chunk_id: " + target);
    return {target};
  }
  auto reg = registry_.find(target);
  if (reg == registry_.end()) Fail(ErrorKind::kNotFound, "unknown doc_id: " + target);
  std::vector<std::string> ids;
  for (const auto& [ordinal, id] : reg->second) ids.push_back(id);
  return ids;
}

TagEditReport HybridIndex::InjectTag(const std::string& target, std::string_view raw_tag, TagScope scope,
                                     Embedder& embedder, const std::string& actor) {
  return EditTag(target, raw_tag, scope, embedder, actor, true);
}

TagEditReport HybridIndex::RemoveTag(const std::string& target, std::string_view raw_tag, TagScope scope,
                                     Embedder& embedder, const std::string& actor) {
  return EditTag(target, raw_tag, scope, embedder, actor, false);
}

TagEditReport HybridIndex::EditTag(const std::string& target, std::string_view raw_tag, TagScope scope,
                                   Embedder& embedder, const std::string& actor, bool inject) {
  auto tag = Tag::Normalize(raw_tag);
  if (!tag) Fail(ErrorKind::kInvalidArgument, "tag normalizes to empty", std::string(raw_tag));

  TagEditReport report;
  report.target = target;
  report.scope = scope;
  report.tag = tag->text();

  EditRecord record;
  record.actor = actor;
  record.action = inject ? "inject_tag" : "remove_tag";
  record.target = target;
  record.scope = ToString(scope);
  record.tag = tag->text();

  auto same = [&](const Tag& t) { return t.SameAs(*tag); };

  for (int attempt = 0; attempt < 3; ++attempt) {
    std::vector<std::string> ids;
    std::vector<SemanticPath> before;
    {
      std::shared_lock lock(mu_);
      ids = TargetChunksLocked(target, scope);
      for (const auto& id : ids) before.push_back(entries_[slot_of_.at(id)]->path);
    }

    bool noop = false;
    std::vector<SemanticPath> after = before;
    if (inject && scope == TagScope::kDocument) {
      noop = std::any_of(before.front().master.begin(), before.front().master.end(), same);
      for (auto& p : after) {
        if (noop) break;
        p.master.push_back(*tag);
        std::erase_if(p.paragraph, same);
      }
    } else if (inject) {
      noop = after.front().Contains(*tag);
      if (!noop) after.front().paragraph.push_back(*tag);
    } else if (scope == TagScope::kDocument) {
      noop = std::none_of(before.front().master.begin(), before.front().master.end(), same);
      if (!noop && before.front().master.size() == 1) {
        Fail(ErrorKind::kInvalidArgument, "cannot remove the last master tag of " + target);
      }
      for (auto& p : after) {
        if (noop) break;
        std::erase_if(p.master, same);
      }
    } else {
      noop = std::none_of(before.front().paragraph.begin(), before.front().paragraph.end(), same);
      if (!noop) std::erase_if(after.front().paragraph, same);
    }

    if (noop) {
      std::unique_lock lock(mu_);
      report.noop = true;
      record.outcome = "noop";
      report.edit_seq = AppendEditRecordLocked(record);
      return report;
    }

    auto vectors = EmbedPaths(after, embedder, options_.path_embedding);
    for (const auto& v : vectors) {
      if (v.size() != options_.dim) Fail(ErrorKind::kInvalidArgument, "embedder dimension does not match index");
    }

    std::unique_lock lock(mu_);
    bool unchanged = true;
    for (std::size_t i = 0; i < ids.size() && unchanged; ++i) {
      auto it = slot_of_.find(ids[i]);
      unchanged = it != slot_of_.end() && entries_[it->second]->path == before[i];
    }
    if (unchanged && scope == TagScope::kDocument) {
      unchanged = TargetChunksLocked(target, scope) == ids;
    }
    if (!unchanged) continue;  // a concurrent writer got there first; recompute

    for (std::size_t i = 0; i < ids.size(); ++i) {
      Slot slot = slot_of_.at(ids[i]);
      auto old_v = tag_store_.Get(slot);
      report.changes.push_back({ids[i], Vector(old_v.begin(), old_v.end()), vectors[i], after[i]});
      entries_[slot]->path = after[i];
      tag_store_.Put(slot, vectors[i]);
      record.affected.push_back(ids[i]);
    }
    record.outcome = "applied";
    report.edit_seq = AppendEditRecordLocked(record);
    return report;
  }
  Fail(ErrorKind::kConflict, "tag edit kept racing with concurrent writers", target);
}

std::optional<AugmentedChunk> HybridIndex::Get(const std::string& chunk_id) const {
  std::shared_lock lock(mu_);
  auto it = slot_of_.find(chunk_id);
  if (it == slot_of_.end()) return std::nullopt;
  const auto& e = *entries_[it->second];
  auto vp = tag_store_.Get(it->second);
  auto vt = dense_store_.Get(it->second);
  return AugmentedChunk{e.chunk, e.path, Vector(vt.begin(), vt.end()), Vector(vp.begin(), vp.end())};
}

std::vector<AugmentedChunk> HybridIndex::GetMany(const std::vector<std::string>& chunk_ids) const {
  std::vector<AugmentedChunk> out;
  out.reserve(chunk_ids.size());
  for (const auto& id : chunk_ids) {
    auto c = Get(id);
    if (!c) Fail(ErrorKind::kNotFound, "unknown chunk_id: " + id);
    out.push_back(std::move(*c));
  }
  return out;
}

bool HybridIndex::HasDocument(const std::string& doc_id) const {
  std::shared_lock lock(mu_);
  return registry_.count(doc_id) > 0;
}

bool HybridIndex::HasChunk(const std::string& chunk_id) const {
  std::shared_lock lock(mu_);
  return slot_of_.count(chunk_id) > 0;
}

std::vector<std::string> HybridIndex::DocumentIds() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [doc, chunks] : registry_) out.push_back(doc);
  return out;
}

std::vector<std::string> HybridIndex::DocumentChunks(const std::string& doc_id) const {
  std::shared_lock lock(mu_);
  return TargetChunksLocked(doc_id, TagScope::kDocument);
}

std::size_t HybridIndex::size() const {
  std::shared_lock lock(mu_);
  return slot_of_.size();
}

HybridIndex::Probe HybridIndex::ProbeTag(const std::string& chunk_id, std::span<const float> query) const {
  std::shared_lock lock(mu_);
  auto it = slot_of_.find(chunk_id);
  if (it == slot_of_.end()) Fail(ErrorKind::kNotFound, "unknown chunk_id: " + chunk_id);
  Probe probe;
  probe.distance = tag_store_.Score(query, it->second);
  probe.rank = 1;
  for (Slot s : tag_store_.LiveSlots()) {
    if (s == it->second) continue;
    double d = tag_store_.Score(query, s);
    if (Closer(d, probe.distance, options_.tag_metric) || (d == probe.distance && slot_ids_[s] < chunk_id)) {
      ++probe.rank;
    }
  }
  return probe;
}

std::uint64_t HybridIndex::AppendEditRecordLocked(EditRecord record) {
  record.seq = next_seq_++;
  if (record.timestamp.empty()) record.timestamp = UtcNow();
  edit_log_.push_back(std::move(record));
  return edit_log_.back().seq;
}

std::uint64_t HybridIndex::AppendEditRecord(EditRecord record) {
  std::unique_lock lock(mu_);
  return AppendEditRecordLocked(std::move(record));
}

std::vector<EditRecord> HybridIndex::EditLog() const {
  std::shared_lock lock(mu_);
  return edit_log_;
}

SubIndexIds HybridIndex::ChunkIdSets() const {
  std::shared_lock lock(mu_);
  SubIndexIds ids;
  for (Slot s : tag_store_.LiveSlots()) ids.tag.insert(slot_ids_[s]);
  for (Slot s : dense_store_.LiveSlots()) ids.dense.insert(slot_ids_[s]);
  for (Slot s : sparse_.LiveSlots()) ids.sparse.insert(slot_ids_[s]);
  for (const auto& [doc, chunks] : registry_) {
    for (const auto& [ordinal, id] : chunks) ids.registry.insert(id);
  }
  return ids;
}

SparseStats HybridIndex::sparse_stats() const {
  std::shared_lock lock(mu_);
  return sparse_.stats();
}

SparseStats HybridIndex::RecomputedSparseStats() const {
  std::shared_lock lock(mu_);
  return sparse_.RecomputeStats();
}

bool HybridIndex::ann_active() const {
  std::shared_lock lock(mu_);
  return tag_store_.ann_active() || dense_store_.ann_active();
}

void HybridIndex::Persist(const fs::path& dir) const {
  std::shared_lock lock(mu_);
  fs::create_directories(dir);

  // Rows in slot order; row number is the chunk_ref used by postings.
  std::vector<Slot> rows;
  std::unordered_map<Slot, std::uint32_t> row_of;
  for (Slot s = 0; s < entries_.size(); ++s) {
    if (!entries_[s]) continue;
    row_of.emplace(s, static_cast<std::uint32_t>(rows.size()));
    rows.push_back(s);
  }

  std::string chunks, vtag, vdense, postings, editlog;
  for (Slot s : rows) {
    const auto& e = *entries_[s];
    std::vector<std::string> master, paragraph;
    for (const auto& t : e.path.master) master.push_back(t.text());
    for (const auto& t : e.path.paragraph) paragraph.push_back(t.text());
    json line = {{"id", e.chunk.chunk_id}, {"doc_id", e.chunk.doc_id}, {"ordinal", e.chunk.ordinal},
                 {"start", e.chunk.span.start}, {"end", e.chunk.span.end}, {"text", e.chunk.text},
                 {"master", master}, {"paragraph", paragraph}};
    chunks += line.dump() + "\n";
    PutFloats(vtag, tag_store_.Get(s));
    PutFloats(vdense, dense_store_.Get(s));
  }

  std::vector<const std::pair<const std::string, std::vector<Posting>>*> terms;
  for (const auto& entry : sparse_.postings()) terms.push_back(&entry);
  std::sort(terms.begin(), terms.end(), [](auto* a, auto* b) { return a->first < b->first; });
  postings = "OPST";
  PutU32(postings, static_cast<std::uint32_t>(terms.size()));
  for (const auto* entry : terms) {
    PutU32(postings, static_cast<std::uint32_t>(entry->first.size()));
    postings += entry->first;
    PutU32(postings, static_cast<std::uint32_t>(entry->second.size()));
    for (const auto& p : entry->second) {
      PutU32(postings, row_of.at(p.slot));
      PutU32(postings, p.tf);
    }
  }
  for (const auto& r : edit_log_) editlog += EditRecordToJson(r).dump() + "\n";

  json files = json::object();
  for (const auto& [name, bytes] : {std::pair<std::string, const std::string*>{"chunks", &chunks},
                                    {"vectors.tag", &vtag},
                                    {"vectors.dense", &vdense},
                                    {"postings", &postings},
                                    {"editlog", &editlog}}) {
    WriteFile(dir / name, *bytes);
    files[name] = {{"bytes", bytes->size()}, {"crc32", Crc32(*bytes)}};
  }
  json header = {{"format", "orion-hybrid-index"},
                 {"version", kIndexFormatVersion},
                 {"dim", options_.dim},
                 {"tag_metric", ToString(options_.tag_metric)},
                 {"dense_metric", ToString(options_.dense_metric)},
                 {"path_embedding", options_.path_embedding == PathEmbedding::kMeanTags ? "mean_tags" : "joined_string"},
                 {"embedder_fingerprint", options_.embedder_fingerprint},
                 {"bm25", {{"k1", options_.bm25.k1}, {"b", options_.bm25.b}}},
                 {"chunk_count", rows.size()},
                 {"next_edit_seq", next_seq_},
                 {"files", files}};
  WriteFile(dir / "header", header.dump(2) + "\n");
}

std::unique_ptr<HybridIndex> HybridIndex::Load(const fs::path& dir, const std::string& expected_fingerprint,
                                               std::optional<IndexOptions> overrides) {
  json header;
  try {
    header = json::parse(ReadFile(dir / "header"));
  } catch (const json::exception& e) {
    Fail(ErrorKind::kCorrupt, "index header is not valid JSON", e.what());
  }
  try {
    if (header.value("format", "") != "orion-hybrid-index") Fail(ErrorKind::kCorrupt, "not an index directory");
    auto version = header.at("version").get<std::uint32_t>();
    if (version != kIndexFormatVersion) {
      Fail(ErrorKind::kCorrupt, "index format version mismatch: file has " + std::to_string(version) +
                                    ", expected " + std::to_string(kIndexFormatVersion));
    }
    auto fingerprint = header.at("embedder_fingerprint").get<std::string>();
    if (!expected_fingerprint.empty() && fingerprint != expected_fingerprint) {
      Fail(ErrorKind::kInvalidArgument,
           "embedder fingerprint mismatch: index built with '" + fingerprint + "', active embedder is '" +
               expected_fingerprint + "'");
    }

    IndexOptions options = overrides.value_or(IndexOptions{});
    options.dim = header.at("dim").get<std::size_t>();
    options.tag_metric = ParseMetric(header.at("tag_metric").get<std::string>());
    options.dense_metric = ParseMetric(header.at("dense_metric").get<std::string>());
    options.path_embedding = ParsePathEmbedding(header.at("path_embedding").get<std::string>());
    options.embedder_fingerprint = fingerprint;
    options.bm25 = {header.at("bm25").at("k1").get<double>(), header.at("bm25").at("b").get<double>()};
    const auto count = header.at("chunk_count").get<std::size_t>();

    std::map<std::string, std::string> bytes;
    for (const char* name : {"chunks", "vectors.tag", "vectors.dense", "postings", "editlog"}) {
      auto data = ReadFile(dir / name);
      const auto& meta = header.at("files").at(name);
      if (data.size() != meta.at("bytes").get<std::size_t>() || Crc32(data) != meta.at("crc32").get<std::uint32_t>()) {
        Fail(ErrorKind::kCorrupt, std::string("checksum mismatch in index file '") + name + "'", (dir / name).string());
      }
      bytes.emplace(name, std::move(data));
    }
    const std::size_t vec_bytes = count * options.dim * 4;
    if (bytes["vectors.tag"].size() != vec_bytes || bytes["vectors.dense"].size() != vec_bytes) {
      Fail(ErrorKind::kCorrupt, "vector file size does not match chunk count");
    }

    auto index = std::make_unique<HybridIndex>(options);
    std::istringstream lines(bytes["chunks"]);
    std::string line;
    std::vector<Slot> live;
    auto read_vec = [&](const std::string& blob, std::size_t row) {
      Vector v(options.dim);
      std::memcpy(v.data(), blob.data() + row * options.dim * 4, options.dim * 4);
      return v;
    };
    std::size_t row = 0;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      auto j = json::parse(line);
      Entry e;
      e.chunk.chunk_id = j.at("id").get<std::string>();
      e.chunk.doc_id = j.at("doc_id").get<std::string>();
      e.chunk.ordinal = j.at("ordinal").get<std::size_t>();
      e.chunk.span = {j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>()};
      e.chunk.text = j.at("text").get<std::string>();
      e.path.master = TagsFromStrings(j.at("master").get<std::vector<std::string>>());
      e.path.paragraph = TagsFromStrings(j.at("paragraph").get<std::vector<std::string>>());
      if (row >= count) Fail(ErrorKind::kCorrupt, "more chunk rows than header chunk_count");
      Slot slot = static_cast<Slot>(row);
      if (!index->slot_of_.emplace(e.chunk.chunk_id, slot).second) {
        Fail(ErrorKind::kCorrupt, "duplicate chunk id in index: " + e.chunk.chunk_id);
      }
      index->slot_ids_.push_back(e.chunk.chunk_id);
      index->registry_[e.chunk.doc_id][e.chunk.ordinal] = e.chunk.chunk_id;
      index->tag_store_.Put(slot, read_vec(bytes["vectors.tag"], row));
      index->dense_store_.Put(slot, read_vec(bytes["vectors.dense"], row));
      index->entries_.push_back(std::move(e));
      live.push_back(slot);
      ++row;
    }
    if (row != count) Fail(ErrorKind::kCorrupt, "chunk rows do not match header chunk_count");

    std::string_view post = bytes["postings"];
    if (post.substr(0, 4) != "OPST") Fail(ErrorKind::kCorrupt, "postings file has a bad magic number");
    std::size_t pos = 4;
    std::unordered_map<std::string, std::vector<Posting>> postings;
    auto terms = GetU32(post, pos);
    for (std::uint32_t t = 0; t < terms; ++t) {
      auto len = GetU32(post, pos);
      if (pos + len > post.size()) Fail(ErrorKind::kCorrupt, "postings file truncated");
      std::string term(post.substr(pos, len));
      pos += len;
      auto n = GetU32(post, pos);
      auto& list = postings[term];
      for (std::uint32_t i = 0; i < n; ++i) {
        auto ref = GetU32(post, pos);
        auto tf = GetU32(post, pos);
        if (ref >= count) Fail(ErrorKind::kCorrupt, "posting references unknown chunk row");
        list.push_back({ref, tf});
      }
    }
    index->sparse_ = SparseIndex::FromPostings(options.bm25, std::move(postings), live);

    std::istringstream log_lines(bytes["editlog"]);
    while (std::getline(log_lines, line)) {
      if (line.empty()) continue;
      index->edit_log_.push_back(EditRecordFromJson(json::parse(line)));
    }
    index->next_seq_ = header.value("next_edit_seq", static_cast<std::uint64_t>(index->edit_log_.size() + 1));
    return index;
  } catch (const json::exception& e) {
    Fail(ErrorKind::kCorrupt, "index files are malformed", e.what());
  }
}

}  // namespace orion
