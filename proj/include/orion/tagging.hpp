#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "orion/completion.hpp"
#include "orion/corpus.hpp"
#include "orion/prompts.hpp"

namespace orion {

/// A normalized tag: 1-4 words, no punctuation, surface case preserved.
class Tag {
 public:
  /// Strips punctuation and quotes, collapses whitespace, keeps the first
  /// four words. Returns nullopt when nothing survives.
  static std::optional<Tag> Normalize(std::string_view raw);

  const std::string& text() const { return text_; }
  /// Lowercased form used for case-insensitive equality.
  std::string key() const;
  bool SameAs(const Tag& other) const { return key() == other.key(); }

  bool operator==(const Tag&) const = default;

 private:
  explicit Tag(std::string text) : text_(std::move(text)) {}
  std::string text_;
};

inline constexpr std::size_t kMaxTagWords = 4;
inline constexpr std::size_t kParagraphTagCount = 3;

/// Normalizes each raw string, drops empties and removes case-insensitive
/// duplicates keeping the first surface form.
std::vector<Tag> NormalizeTags(const std::vector<std::string>& raw);

struct SemanticPath {
  std::vector<Tag> master;
  std::vector<Tag> paragraph;

  std::vector<Tag> tags() const;
  std::vector<std::string> tag_texts() const;
  /// "master1 → master2 → para1 → ..."
  std::string Display() const;
  bool Contains(const Tag& tag) const;

  bool operator==(const SemanticPath&) const = default;
};

/// Master tags followed by paragraph tags; a paragraph tag equal to a master
/// tag is dropped. Throws on an empty master list.
SemanticPath BuildPath(std::vector<Tag> master, const std::vector<Tag>& paragraph);

/// Document frequencies of unigram and adjacent-bigram candidate terms.
class TermStatistics {
 public:
  void AddDocument(std::string_view text);
  std::size_t documents() const { return documents_; }
  std::size_t DocumentFrequency(const std::string& term) const;
  /// ln((N + 1) / (df + 1)) + 1; equals 1 for every term when N == 0.
  double Idf(const std::string& term) const;

 private:
  std::size_t documents_ = 0;
  std::unordered_map<std::string, std::size_t> df_;
};

/// Informative candidate terms of `text`: non-stopword, non-numeric tokens of
/// length >= 2 and bigrams of two such tokens separated only by whitespace.
std::unordered_map<std::string, std::size_t> CandidateTermCounts(std::string_view text);

enum class TagKind { kMaster, kParagraph };

struct TagRequest {
  TagKind kind = TagKind::kParagraph;
  std::string_view text;
  std::size_t limit = kParagraphTagCount;
  const TermStatistics* background = nullptr;  // used by the heuristic backend only
};

class Tagger {
 public:
  virtual ~Tagger() = default;
  /// Raw tag strings; may be empty. Throws BackendError on backend failure.
  virtual std::vector<std::string> Extract(const TagRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Top terms by count × idf × word count, ties broken lexicographically.
/// Unigrams already covered by a chosen bigram are skipped.
class HeuristicTagger final : public Tagger {
 public:
  std::vector<std::string> Extract(const TagRequest& request) override;
  std::string name() const override { return "heuristic"; }
};

/// Prompts a completion backend and parses a JSON array of strings. An
/// unparseable reply gets one retry with a reminder, then a BackendError.
class LlmTagger final : public Tagger {
 public:
  LlmTagger(std::shared_ptr<CompletionClient> client, PromptSet prompts)
      : client_(std::move(client)), prompts_(std::move(prompts)) {}
  std::vector<std::string> Extract(const TagRequest& request) override;
  std::string name() const override { return "llm:" + client_->name(); }

 private:
  std::shared_ptr<CompletionClient> client_;
  PromptSet prompts_;
};

/// Per-document master tags; every chunk of a document reads the same entry.
class MasterTagCache {
 public:
  std::optional<std::vector<Tag>> Find(const std::string& doc_id) const;
  /// Inserts unless present; returns the stored value either way.
  std::vector<Tag> Insert(const std::string& doc_id, std::vector<Tag> tags);
  void Erase(const std::string& doc_id);

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, std::vector<Tag>> entries_;
};

/// Up to `max_tags` normalized master tags, cached per doc_id when a cache is
/// given. An empty result falls back to the title, else the doc_id.
std::vector<Tag> GenerateMasterTags(const Document& doc, std::size_t max_tags, Tagger& tagger,
                                    const TermStatistics* background = nullptr, MasterTagCache* cache = nullptr);

struct ParagraphTags {
  std::vector<Tag> tags;
  bool fallback = false;      // the tagger produced nothing usable
  bool needs_review = false;  // not even a fallback tag could be derived
};

/// Requests three tags; keeps 1-3 after normalization. With none left, falls
/// back to the chunk's most frequent non-stopword, then to its first raw
/// whitespace token.
/// Tags matching any of `exclude` (normally the document's master tags) are
/// skipped so the paragraph segment survives path de-duplication.
ParagraphTags GenerateParagraphTags(const Chunk& chunk, Tagger& tagger, const TermStatistics* background = nullptr,
                                    const std::vector<Tag>& exclude = {});

/// The fallback tags alone, used when the tagger itself failed.
ParagraphTags FallbackParagraphTags(const Chunk& chunk, const std::vector<Tag>& exclude = {});

}  // namespace orion
