#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "orion/embedding.hpp"

namespace orion {

using Slot = std::uint32_t;

struct ScoredSlot {
  Slot slot = 0;
  double score = 0.0;
};

struct HnswParams {
  std::size_t m = 16;
  std::size_t ef_construction = 128;
  std::size_t ef_search = 96;
  std::uint64_t seed = 42;
};

class VectorStore;

/// Hierarchical navigable small-world graph over the live slots of a
/// VectorStore. Removed slots stay in the graph for navigation and are
/// filtered out of results.
class HnswGraph {
 public:
  HnswGraph(const VectorStore& store, HnswParams params);

  void Insert(Slot slot);
  /// Re-links a node whose vector changed in place.
  void Relink(Slot slot);
  void MarkRemoved(Slot slot);
  /// Candidate slots ordered by graph distance; caller re-scores exactly.
  std::vector<Slot> Search(std::span<const float> query, std::size_t k) const;
  std::size_t size() const { return inserted_; }

 private:
  struct Node {
    int level = -1;
    bool removed = false;
    std::vector<std::vector<Slot>> links;
  };
  using Candidate = std::pair<double, Slot>;

  double Distance(std::span<const float> q, Slot slot) const;
  std::vector<Candidate> SearchLayer(std::span<const float> q, std::vector<Slot> entries, std::size_t ef,
                                     int layer) const;
  std::vector<Slot> SelectNeighbors(std::span<const float> base, std::vector<Candidate> candidates,
                                    std::size_t limit) const;
  void Connect(Slot slot, int level);
  std::size_t MaxLinks(int layer) const { return layer == 0 ? params_.m * 2 : params_.m; }

  const VectorStore& store_;
  HnswParams params_;
  std::mt19937_64 rng_;
  std::vector<Node> nodes_;
  Slot entry_ = 0;
  int max_level_ = -1;
  std::size_t inserted_ = 0;
};

/// Slot-addressed fixed-dimension vectors with exact and (above a size
/// threshold) graph-based approximate search.
class VectorStore {
 public:
  VectorStore(std::size_t dim, Metric metric, std::size_t ann_threshold, HnswParams params = {});
  VectorStore(const VectorStore&) = delete;
  VectorStore& operator=(const VectorStore&) = delete;

  void Put(Slot slot, std::span<const float> v);
  void Remove(Slot slot);
  bool Contains(Slot slot) const { return slot < live_.size() && live_[slot]; }
  std::span<const float> Get(Slot slot) const;
  std::size_t size() const { return live_count_; }
  std::size_t dim() const { return dim_; }
  Metric metric() const { return metric_; }
  bool ann_active() const { return graph_ != nullptr; }
  std::vector<Slot> LiveSlots() const;

  double Score(std::span<const float> query, Slot slot) const { return Similarity(query, Get(slot), metric_); }

  /// Top-n by metric, ties broken by `ids[slot]` ascending.
  std::vector<ScoredSlot> Search(std::span<const float> query, std::size_t n,
                                 const std::vector<std::string>& ids) const;
  std::vector<ScoredSlot> ExactSearch(std::span<const float> query, std::size_t n,
                                      const std::vector<std::string>& ids) const;

 private:
  void MaybeToggleGraph();

  std::size_t dim_;
  Metric metric_;
  std::size_t ann_threshold_;  // 0 disables the graph
  HnswParams params_;
  std::vector<float> data_;
  std::vector<bool> live_;
  std::size_t live_count_ = 0;
  std::unique_ptr<HnswGraph> graph_;
};

}  // namespace orion
