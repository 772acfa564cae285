#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "orion/vector_store.hpp"

namespace orion {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct Posting {
  Slot slot = 0;
  std::uint32_t tf = 0;
  bool operator==(const Posting&) const = default;
};

struct SparseStats {
  std::size_t chunks = 0;       // N
  std::uint64_t total_len = 0;  // sum of chunk lengths in tokens
  double avgdl() const { return chunks == 0 ? 0.0 : static_cast<double>(total_len) / static_cast<double>(chunks); }
  bool operator==(const SparseStats&) const = default;
};

/// Okapi BM25 over an incrementally maintained inverted index. Posting lists
/// stay sorted by slot; new slots append at the tail.
class SparseIndex {
 public:
  explicit SparseIndex(Bm25Params params = {}) : params_(params) {}

  void Put(Slot slot, std::string_view text);
  void Remove(Slot slot);
  bool Contains(Slot slot) const { return slot < live_.size() && live_[slot]; }
  std::size_t size() const { return stats_.chunks; }
  const SparseStats& stats() const { return stats_; }
  const Bm25Params& params() const { return params_; }

  /// Stats recomputed from the postings alone (chunks = live slots).
  SparseStats RecomputeStats() const;

  std::size_t DocumentFrequency(const std::string& term) const;
  /// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)); always positive.
  double Idf(const std::string& term) const;

  /// Positive-score slots, unsorted. Repeated query terms count once.
  std::vector<ScoredSlot> Score(std::string_view query) const;

  const std::unordered_map<std::string, std::vector<Posting>>& postings() const { return postings_; }
  std::vector<Slot> LiveSlots() const;

  /// Restores an index from persisted postings; `live` lists every chunk slot
  /// including those without terms.
  static SparseIndex FromPostings(Bm25Params params, std::unordered_map<std::string, std::vector<Posting>> postings,
                                  const std::vector<Slot>& live);

 private:
  Bm25Params params_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<std::vector<std::pair<std::string, std::uint32_t>>> slot_terms_;
  std::vector<std::uint32_t> doc_len_;
  std::vector<bool> live_;
  SparseStats stats_;
};

}  // namespace orion
