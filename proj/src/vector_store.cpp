#include "orion/vector_store.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "orion/error.hpp"

namespace orion {

HnswGraph::HnswGraph(const VectorStore& store, HnswParams params)
    : store_(store), params_(params), rng_(params.seed) {
  if (params_.m < 2) params_.m = 2;
}

double HnswGraph::Distance(std::span<const float> q, Slot slot) const {
  auto v = store_.Get(slot);
  if (store_.metric() == Metric::kL2) {
    double sum = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      double d = static_cast<double>(q[i]) - v[i];
      sum += d * d;
    }
    return sum;
  }
  return 1.0 - Similarity(q, v, Metric::kCosine);
}

std::vector<HnswGraph::Candidate> HnswGraph::SearchLayer(std::span<const float> q, std::vector<Slot> entries,
                                                         std::size_t ef, int layer) const {
  std::vector<char> visited(nodes_.size(), 0);
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> frontier;  // closest first
  std::priority_queue<Candidate> best;                                              // farthest first
  for (Slot e : entries) {
    if (visited[e]) continue;
    visited[e] = 1;
    double d = Distance(q, e);
    frontier.emplace(d, e);
    best.emplace(d, e);
  }
  while (best.size() > ef) best.pop();
  while (!frontier.empty()) {
    auto [d, s] = frontier.top();
    frontier.pop();
    if (best.size() >= ef && d > best.top().first) break;
    const auto& node = nodes_[s];
    if (layer > node.level) continue;
    for (Slot nb : node.links[layer]) {
      if (visited[nb]) continue;
      visited[nb] = 1;
      double dn = Distance(q, nb);
      if (best.size() < ef || dn < best.top().first) {
        frontier.emplace(dn, nb);
        best.emplace(dn, nb);
        if (best.size() > ef) best.pop();
      }
    }
  }
  std::vector<Candidate> out;
  out.reserve(best.size());
  while (!best.empty()) {
    out.push_back(best.top());
    best.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<Slot> HnswGraph::SelectNeighbors(std::span<const float> base, std::vector<Candidate> candidates,
                                             std::size_t limit) const {
  (void)base;
  std::sort(candidates.begin(), candidates.end());
  std::vector<Slot> chosen;
  std::vector<Slot> skipped;
  for (const auto& [d, s] : candidates) {
    if (chosen.size() >= limit) break;
    auto v = store_.Get(s);
    bool diverse = std::all_of(chosen.begin(), chosen.end(), [&](Slot c) { return Distance(v, c) >= d; });
    if (diverse) {
      chosen.push_back(s);
    } else {
      skipped.push_back(s);
    }
  }
  for (Slot s : skipped) {
    if (chosen.size() >= limit) break;
    chosen.push_back(s);
  }
  return chosen;
}

void HnswGraph::Connect(Slot slot, int level) {
  auto q = store_.Get(slot);
  std::vector<Slot> ep;
  if (entry_ != slot) {
    ep.push_back(entry_);
  } else {
    // The entry point itself is being re-linked: start from any other node.
    for (Slot s = 0; s < nodes_.size(); ++s) {
      if (s != slot && nodes_[s].level >= 0) {
        ep.push_back(s);
        break;
      }
    }
    if (ep.empty()) return;
  }
  for (int layer = max_level_; layer > level; --layer) {
    auto w = SearchLayer(q, ep, 1, layer);
    if (!w.empty()) ep = {w.front().second};
  }
  for (int layer = std::min(level, max_level_); layer >= 0; --layer) {
    auto w = SearchLayer(q, ep, params_.ef_construction, layer);
    std::erase_if(w, [&](const Candidate& c) { return c.second == slot || nodes_[c.second].level < layer; });
    auto neighbors = SelectNeighbors(q, w, params_.m);
    nodes_[slot].links[layer] = neighbors;
    for (Slot nb : neighbors) {
      auto& links = nodes_[nb].links[layer];
      if (std::find(links.begin(), links.end(), slot) != links.end()) continue;
      links.push_back(slot);
      if (links.size() > MaxLinks(layer)) {
        auto base = store_.Get(nb);
        std::vector<Candidate> scored;
        for (Slot l : links) scored.emplace_back(Distance(base, l), l);
        links = SelectNeighbors(base, std::move(scored), MaxLinks(layer));
      }
    }
    if (!w.empty()) {
      ep.clear();
      for (const auto& c : w) ep.push_back(c.second);
    }
  }
}

void HnswGraph::Insert(Slot slot) {
  if (slot >= nodes_.size()) nodes_.resize(slot + 1);
  auto& node = nodes_[slot];
  if (node.level >= 0) {
    node.removed = false;
    Relink(slot);
    return;
  }
  std::uniform_real_distribution<double> uniform(std::nextafter(0.0, 1.0), 1.0);
  const double ml = 1.0 / std::log(static_cast<double>(params_.m));
  node.level = static_cast<int>(std::floor(-std::log(uniform(rng_)) * ml));
  node.links.assign(node.level + 1, {});
  ++inserted_;
  if (max_level_ < 0) {
    entry_ = slot;
    max_level_ = node.level;
    return;
  }
  Connect(slot, node.level);
  if (node.level > max_level_) {
    max_level_ = node.level;
    entry_ = slot;
  }
}

void HnswGraph::Relink(Slot slot) {
  auto& node = nodes_[slot];
  for (auto& l : node.links) l.clear();
  Connect(slot, node.level);
}

void HnswGraph::MarkRemoved(Slot slot) {
  if (slot < nodes_.size()) nodes_[slot].removed = true;
}

std::vector<Slot> HnswGraph::Search(std::span<const float> query, std::size_t k) const {
  if (max_level_ < 0) return {};
  std::vector<Slot> ep{entry_};
  for (int layer = max_level_; layer > 0; --layer) {
    auto w = SearchLayer(query, ep, 1, layer);
    if (!w.empty()) ep = {w.front().second};
  }
  auto w = SearchLayer(query, ep, std::max(params_.ef_search, k * 2), 0);
  std::vector<Slot> out;
  for (const auto& [d, s] : w) {
    if (!nodes_[s].removed) out.push_back(s);
  }
  return out;
}

VectorStore::VectorStore(std::size_t dim, Metric metric, std::size_t ann_threshold, HnswParams params)
    : dim_(dim), metric_(metric), ann_threshold_(ann_threshold), params_(params) {
  if (dim == 0) Fail(ErrorKind::kInvalidArgument, "vector store dim must be positive");
}

std::span<const float> VectorStore::Get(Slot slot) const {
  return std::span<const float>(data_.data() + static_cast<std::size_t>(slot) * dim_, dim_);
}

void VectorStore::Put(Slot slot, std::span<const float> v) {
  if (v.size() != dim_) {
    Fail(ErrorKind::kInvalidArgument,
         "dimension mismatch: got " + std::to_string(v.size()) + ", store expects " + std::to_string(dim_));
  }
  if (slot >= live_.size()) {
    live_.resize(slot + 1, false);
    data_.resize(live_.size() * dim_, 0.0f);
  }
  std::copy(v.begin(), v.end(), data_.begin() + static_cast<std::ptrdiff_t>(slot * dim_));
  bool existed = live_[slot];
  if (!existed) {
    live_[slot] = true;
    ++live_count_;
  }
  if (graph_) {
    if (existed) {
      graph_->Relink(slot);
    } else {
      graph_->Insert(slot);
    }
  }
  MaybeToggleGraph();
}

void VectorStore::Remove(Slot slot) {
  if (!Contains(slot)) return;
  live_[slot] = false;
  --live_count_;
  std::fill_n(data_.begin() + static_cast<std::ptrdiff_t>(slot * dim_), dim_, 0.0f);
  if (graph_) graph_->MarkRemoved(slot);
  MaybeToggleGraph();
}

void VectorStore::MaybeToggleGraph() {
  if (ann_threshold_ == 0) return;
  if (!graph_ && live_count_ >= ann_threshold_) {
    graph_ = std::make_unique<HnswGraph>(*this, params_);
    for (Slot s : LiveSlots()) graph_->Insert(s);
  } else if (graph_ && live_count_ < ann_threshold_ / 2) {
    graph_.reset();
  }
}

std::vector<Slot> VectorStore::LiveSlots() const {
  std::vector<Slot> out;
  out.reserve(live_count_);
  for (Slot s = 0; s < live_.size(); ++s) {
    if (live_[s]) out.push_back(s);
  }
  return out;
}

namespace {

void RankAndTrim(std::vector<ScoredSlot>& scored, std::size_t n, Metric metric,
                 const std::vector<std::string>& ids) {
  auto better = [&](const ScoredSlot& a, const ScoredSlot& b) {
    if (a.score != b.score) return Closer(a.score, b.score, metric);
    return ids[a.slot] < ids[b.slot];
  };
  if (scored.size() > n) {
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), better);
    scored.resize(n);
  } else {
    std::sort(scored.begin(), scored.end(), better);
  }
}

}  // namespace

std::vector<ScoredSlot> VectorStore::ExactSearch(std::span<const float> query, std::size_t n,
                                                 const std::vector<std::string>& ids) const {
  if (query.size() != dim_) Fail(ErrorKind::kInvalidArgument, "query dimension mismatch");
  std::vector<ScoredSlot> scored;
  scored.reserve(live_count_);
  for (Slot s = 0; s < live_.size(); ++s) {
    if (live_[s]) scored.push_back({s, Score(query, s)});
  }
  RankAndTrim(scored, n, metric_, ids);
  return scored;
}

std::vector<ScoredSlot> VectorStore::Search(std::span<const float> query, std::size_t n,
                                            const std::vector<std::string>& ids) const {
  if (!graph_) return ExactSearch(query, n, ids);
  if (query.size() != dim_) Fail(ErrorKind::kInvalidArgument, "query dimension mismatch");
  std::vector<ScoredSlot> scored;
  for (Slot s : graph_->Search(query, n)) scored.push_back({s, Score(query, s)});
  RankAndTrim(scored, n, metric_, ids);
  return scored;
}

}  // namespace orion
