#include "orion/tagging.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <unordered_set>

#include "orion/error.hpp"
#include "orion/text.hpp"

namespace orion {
namespace {

// UTF-8 sequences treated like ASCII punctuation: curly quotes are deleted,
// dashes, ellipsis and the path arrow become separators.
struct Utf8Punct {
  std::string_view bytes;
  bool separator;
};
constexpr Utf8Punct kUtf8Punct[] = {
    {"\xE2\x80\x9C", false}, {"\xE2\x80\x9D", false}, {"\xE2\x80\x98", false}, {"\xE2\x80\x99", false},
    {"\xE2\x80\x93", true},  {"\xE2\x80\x94", true},  {"\xE2\x80\xA6", true},  {"\xE2\x86\x92", true},
};

bool IsAsciiPunct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

std::string StripPunctuation(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size();) {
    auto c = static_cast<unsigned char>(raw[i]);
    if (c < 0x80) {
      if (c == '\'' || c == '"' || c == '`') {
        // dropped outright: "BDO's" -> "BDOs"
      } else if (IsAsciiPunct(c) || text::IsSpace(c) || c < 0x20) {
        out += ' ';
      } else {
        out += static_cast<char>(c);
      }
      ++i;
      continue;
    }
    bool matched = false;
    for (const auto& p : kUtf8Punct) {
      if (raw.compare(i, p.bytes.size(), p.bytes) == 0) {
        if (p.separator) out += ' ';
        i += p.bytes.size();
        matched = true;
        break;
      }
    }
    if (!matched) out += raw[i++];
  }
  return out;
}

// Non-stopword terms by descending count, ties alphabetical; stopwords
// trail so a text of nothing but stopwords still yields something.
std::vector<std::string> TermsByFrequency(std::string_view body) {
  std::unordered_map<std::string, std::size_t> counts;
  for (auto& t : text::Tokenize(body)) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    bool sa = text::IsStopword(a.first), sb = text::IsStopword(b.first);
    if (sa != sb) return sb;
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (auto& [term, count] : ranked) out.push_back(std::move(term));
  return out;
}

bool IsExcluded(const Tag& tag, const std::vector<Tag>& exclude) {
  return std::any_of(exclude.begin(), exclude.end(), [&](const Tag& t) { return t.SameAs(tag); });
}

}  // namespace

std::optional<Tag> Tag::Normalize(std::string_view raw) {
  auto words = text::SplitWhitespace(StripPunctuation(raw));
  if (words.empty()) return std::nullopt;
  if (words.size() > kMaxTagWords) words.resize(kMaxTagWords);
  return Tag(text::Join(words, " "));
}

std::string Tag::key() const { return text::ToLower(text_); }

std::vector<Tag> NormalizeTags(const std::vector<std::string>& raw) {
  std::vector<Tag> out;
  std::unordered_set<std::string> seen;
  for (const auto& r : raw) {
    auto tag = Tag::Normalize(r);
    if (!tag) continue;
    if (seen.insert(tag->key()).second) out.push_back(std::move(*tag));
  }
  return out;
}

std::vector<Tag> SemanticPath::tags() const {
  std::vector<Tag> out = master;
  out.insert(out.end(), paragraph.begin(), paragraph.end());
  return out;
}

std::vector<std::string> SemanticPath::tag_texts() const {
  std::vector<std::string> out;
  for (const auto& t : master) out.push_back(t.text());
  for (const auto& t : paragraph) out.push_back(t.text());
  return out;
}

std::string SemanticPath::Display() const { return text::Join(tag_texts(), " \xE2\x86\x92 "); }

bool SemanticPath::Contains(const Tag& tag) const {
  auto same = [&](const Tag& t) { return t.SameAs(tag); };
  return std::any_of(master.begin(), master.end(), same) || std::any_of(paragraph.begin(), paragraph.end(), same);
}

SemanticPath BuildPath(std::vector<Tag> master, const std::vector<Tag>& paragraph) {
  if (master.empty()) Fail(ErrorKind::kInvalidArgument, "semantic path needs at least one master tag");
  SemanticPath path;
  path.master = std::move(master);
  std::unordered_set<std::string> seen;
  for (const auto& t : path.master) seen.insert(t.key());
  for (const auto& t : paragraph) {
    if (seen.insert(t.key()).second) path.paragraph.push_back(t);
  }
  return path;
}

std::unordered_map<std::string, std::size_t> CandidateTermCounts(std::string_view body) {
  auto tokens = text::TokenizeWithOffsets(body);
  auto informative = [](const text::Token& t) {
    return t.term.size() >= 2 && !text::IsStopword(t.term) && !text::IsNumeric(t.term);
  };
  std::unordered_map<std::string, std::size_t> counts;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!informative(tokens[i])) continue;
    ++counts[tokens[i].term];
    if (i + 1 < tokens.size() && informative(tokens[i + 1])) {
      auto gap = body.substr(tokens[i].end, tokens[i + 1].begin - tokens[i].end);
      bool whitespace_only = std::all_of(gap.begin(), gap.end(), [](char c) {
        return c == ' ' || c == '\t';
      });
      if (whitespace_only) ++counts[tokens[i].term + " " + tokens[i + 1].term];
    }
  }
  return counts;
}

void TermStatistics::AddDocument(std::string_view body) {
  ++documents_;
  for (const auto& [term, count] : CandidateTermCounts(body)) ++df_[term];
}

std::size_t TermStatistics::DocumentFrequency(const std::string& term) const {
  auto it = df_.find(term);
  return it == df_.end() ? 0 : it->second;
}

double TermStatistics::Idf(const std::string& term) const {
  return std::log((static_cast<double>(documents_) + 1.0) / (static_cast<double>(DocumentFrequency(term)) + 1.0)) +
         1.0;
}

std::vector<std::string> HeuristicTagger::Extract(const TagRequest& request) {
  struct Scored {
    std::string term;
    double score;
    bool bigram;
  };
  std::vector<Scored> scored;
  for (auto& [term, count] : CandidateTermCounts(request.text)) {
    bool bigram = term.find(' ') != std::string::npos;
    double idf = request.background ? request.background->Idf(term) : 1.0;
    scored.push_back({term, static_cast<double>(count) * idf * (bigram ? 2.0 : 1.0), bigram});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.term < b.term;
  });

  std::vector<std::string> picked;
  std::unordered_set<std::string> picked_words;
  for (const auto& s : scored) {
    if (picked.size() >= request.limit) break;
    auto words = text::SplitWhitespace(s.term);
    bool overlaps = std::any_of(words.begin(), words.end(), [&](const std::string& w) { return picked_words.count(w); });
    if (overlaps) continue;
    picked.push_back(s.term);
    picked_words.insert(words.begin(), words.end());
  }
  return picked;
}

std::vector<std::string> LlmTagger::Extract(const TagRequest& request) {
  const auto& tmpl = request.kind == TagKind::kMaster ? prompts_.master_tags : prompts_.paragraph_tags;
  std::map<std::string, std::string> fields{{"text", std::string(request.text)},
                                            {"max_tags", std::to_string(request.limit)}};
  CompletionRequest call;
  call.seat = "tagger";
  call.system = RenderTemplate(tmpl.system, prompts_, fields);
  call.user = RenderTemplate(tmpl.user, prompts_, fields);

  auto parsed = ParseStringArray(client_->Complete(call));
  if (!parsed) {
    call.user += "\n\nReminder: return only the JSON array of strings, nothing else.";
    parsed = ParseStringArray(client_->Complete(call));
  }
  if (!parsed) throw BackendError("tagger returned output that is not a JSON string array", true);
  return *parsed;
}

std::optional<std::vector<Tag>> MasterTagCache::Find(const std::string& doc_id) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(doc_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<Tag> MasterTagCache::Insert(const std::string& doc_id, std::vector<Tag> tags) {
  std::unique_lock lock(mu_);
  return entries_.try_emplace(doc_id, std::move(tags)).first->second;
}

void MasterTagCache::Erase(const std::string& doc_id) {
  std::unique_lock lock(mu_);
  entries_.erase(doc_id);
}

std::vector<Tag> GenerateMasterTags(const Document& doc, std::size_t max_tags, Tagger& tagger,
                                    const TermStatistics* background, MasterTagCache* cache) {
  if (max_tags == 0) Fail(ErrorKind::kInvalidArgument, "max_tags must be >= 1");
  if (cache) {
    if (auto hit = cache->Find(doc.doc_id)) return *hit;
  }
  std::vector<std::string> raw;
  try {
    raw = tagger.Extract({TagKind::kMaster, doc.text, max_tags, background});
  } catch (const BackendError& e) {
    throw BackendError(std::string("master tagging failed: ") + e.what(), e.retryable(), "doc_id=" + doc.doc_id);
  }
  auto tags = NormalizeTags(raw);
  if (tags.size() > max_tags) tags.erase(tags.begin() + static_cast<std::ptrdiff_t>(max_tags), tags.end());
  if (tags.empty()) {
    auto fallback = Tag::Normalize(doc.title);
    if (!fallback) fallback = Tag::Normalize(doc.doc_id);
    if (fallback) tags.push_back(*fallback);
  }
  if (tags.empty()) Fail(ErrorKind::kData, "document yields no usable master tag", "doc_id=" + doc.doc_id);
  return cache ? cache->Insert(doc.doc_id, std::move(tags)) : tags;
}

ParagraphTags GenerateParagraphTags(const Chunk& chunk, Tagger& tagger, const TermStatistics* background,
                                    const std::vector<Tag>& exclude) {
  std::vector<std::string> raw;
  try {
    raw = tagger.Extract({TagKind::kParagraph, chunk.text, kParagraphTagCount + exclude.size(), background});
  } catch (const BackendError& e) {
    throw BackendError(std::string("paragraph tagging failed: ") + e.what(), e.retryable(),
                       "chunk_id=" + chunk.chunk_id);
  }
  ParagraphTags result;
  for (auto& tag : NormalizeTags(raw)) {
    if (result.tags.size() == kParagraphTagCount) break;
    if (!IsExcluded(tag, exclude)) result.tags.push_back(std::move(tag));
  }
  if (!result.tags.empty()) return result;
  return FallbackParagraphTags(chunk, exclude);
}

ParagraphTags FallbackParagraphTags(const Chunk& chunk, const std::vector<Tag>& exclude) {
  ParagraphTags result;
  result.fallback = true;
  std::optional<Tag> fallback;
  for (const auto& term : TermsByFrequency(chunk.text)) {
    auto tag = Tag::Normalize(term);
    if (tag && !IsExcluded(*tag, exclude)) {
      fallback = std::move(tag);
      break;
    }
  }
  if (fallback) {
    result.tags.push_back(*fallback);
  } else {
    result.needs_review = true;
  }
  return result;
}

}  // namespace orion
