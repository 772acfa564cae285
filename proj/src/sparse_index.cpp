#include "orion/sparse_index.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "orion/text.hpp"

namespace orion {

void SparseIndex::Put(Slot slot, std::string_view body) {
  Remove(slot);
  std::map<std::string, std::uint32_t> tf;
  std::uint32_t length = 0;
  for (auto& t : text::Tokenize(body)) {
    ++tf[t];
    ++length;
  }
  if (slot >= live_.size()) {
    live_.resize(slot + 1, false);
    doc_len_.resize(slot + 1, 0);
    slot_terms_.resize(slot + 1);
  }
  auto& terms = slot_terms_[slot];
  for (const auto& [term, count] : tf) {
    auto& list = postings_[term];
    Posting p{slot, count};
    if (list.empty() || list.back().slot < slot) {
      list.push_back(p);
    } else {
      auto at = std::lower_bound(list.begin(), list.end(), slot,
                                 [](const Posting& x, Slot s) { return x.slot < s; });
      list.insert(at, p);
    }
    terms.emplace_back(term, count);
  }
  live_[slot] = true;
  doc_len_[slot] = length;
  ++stats_.chunks;
  stats_.total_len += length;
}

void SparseIndex::Remove(Slot slot) {
  if (!Contains(slot)) return;
  for (const auto& [term, count] : slot_terms_[slot]) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    auto& list = it->second;
    auto at = std::lower_bound(list.begin(), list.end(), slot, [](const Posting& x, Slot s) { return x.slot < s; });
    if (at != list.end() && at->slot == slot) list.erase(at);
    if (list.empty()) postings_.erase(it);
  }
  slot_terms_[slot].clear();
  stats_.total_len -= doc_len_[slot];
  --stats_.chunks;
  doc_len_[slot] = 0;
  live_[slot] = false;
}

SparseStats SparseIndex::RecomputeStats() const {
  SparseStats s;
  for (bool l : live_) s.chunks += l ? 1 : 0;
  for (const auto& [term, list] : postings_) {
    for (const auto& p : list) s.total_len += p.tf;
  }
  return s;
}

std::size_t SparseIndex::DocumentFrequency(const std::string& term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? 0 : it->second.size();
}

double SparseIndex::Idf(const std::string& term) const {
  const double n = static_cast<double>(stats_.chunks);
  const double df = static_cast<double>(DocumentFrequency(term));
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<ScoredSlot> SparseIndex::Score(std::string_view query) const {
  std::set<std::string> terms;
  for (auto& t : text::Tokenize(query)) terms.insert(std::move(t));
  const double avgdl = stats_.avgdl();
  std::unordered_map<Slot, double> acc;
  for (const auto& term : terms) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double idf = Idf(term);
    for (const auto& p : it->second) {
      const double tf = p.tf;
      const double norm = params_.k1 * (1.0 - params_.b + params_.b * doc_len_[p.slot] / avgdl);
      acc[p.slot] += idf * (tf * (params_.k1 + 1.0)) / (tf + norm);
    }
  }
  std::vector<ScoredSlot> out;
  out.reserve(acc.size());
  for (const auto& [slot, score] : acc) {
    if (score > 0.0) out.push_back({slot, score});
  }
  return out;
}

std::vector<Slot> SparseIndex::LiveSlots() const {
  std::vector<Slot> out;
  for (Slot s = 0; s < live_.size(); ++s) {
    if (live_[s]) out.push_back(s);
  }
  return out;
}

SparseIndex SparseIndex::FromPostings(Bm25Params params,
                                      std::unordered_map<std::string, std::vector<Posting>> postings,
                                      const std::vector<Slot>& live) {
  SparseIndex index(params);
  Slot max_slot = 0;
  for (Slot s : live) max_slot = std::max(max_slot, s);
  const std::size_t n = live.empty() ? 0 : static_cast<std::size_t>(max_slot) + 1;
  index.live_.assign(n, false);
  index.doc_len_.assign(n, 0);
  index.slot_terms_.assign(n, {});
  for (Slot s : live) {
    index.live_[s] = true;
    ++index.stats_.chunks;
  }
  for (auto& [term, list] : postings) {
    std::sort(list.begin(), list.end(), [](const Posting& a, const Posting& b) { return a.slot < b.slot; });
    for (const auto& p : list) {
      index.doc_len_[p.slot] += p.tf;
      index.stats_.total_len += p.tf;
      index.slot_terms_[p.slot].emplace_back(term, p.tf);
    }
  }
  index.postings_ = std::move(postings);
  return index;
}

}  // namespace orion
