#include "orion/text.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <unordered_set>

#include "orion/error.hpp"

namespace orion {

const char* ToString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
      return "invalid_argument";
    case ErrorKind::kData:
      return "data_error";
    case ErrorKind::kNotFound:
      return "not_found";
    case ErrorKind::kConflict:
      return "conflict";
    case ErrorKind::kBackend:
      return "backend_error";
    case ErrorKind::kCorrupt:
      return "corrupt";
  }
  return "unknown";
}

std::uint64_t Hash64(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x9e3779b97f4a7c15ULL);
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

std::string HexDigest(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace orion

namespace orion::text {
namespace {

const std::unordered_set<std::string_view>& Stopwords() {
  static const std::unordered_set<std::string_view> kWords = {
      "a",       "about",   "above",  "after",   "again",   "against", "all",     "also",
      "am",      "an",      "and",    "any",     "are",     "as",      "at",      "be",
      "because", "been",    "before", "being",   "below",   "between", "both",    "but",
      "by",      "can",     "could",  "did",     "do",      "does",    "doing",   "down",
      "during",  "each",    "few",    "for",     "from",    "further", "had",     "has",
      "have",    "having",  "he",     "her",     "here",    "hers",    "herself", "him",
      "himself", "his",     "how",    "i",       "if",      "in",      "into",    "is",
      "it",      "its",     "itself", "just",    "may",     "me",      "might",   "more",
      "most",    "must",    "my",     "myself",  "no",      "nor",     "not",     "now",
      "of",      "off",     "on",     "once",    "one",     "only",    "or",      "other",
      "our",     "ours",    "out",    "over",    "own",     "same",    "shall",   "she",
      "should",  "so",      "some",   "such",    "than",    "that",    "the",     "their",
      "theirs",  "them",    "then",   "there",   "these",   "they",    "this",    "those",
      "through", "to",      "too",    "under",   "until",   "up",      "upon",    "us",
      "very",    "was",     "we",     "were",    "what",    "when",    "where",   "which",
      "while",   "who",     "whom",   "why",     "will",    "with",    "within",  "would",
      "you",     "your",    "yours",  "yourself", "s",      "t",       "via",     "per",
      "its",     "etc",     "since",  "among",   "across",  "however", "thus",    "well",
  };
  return kWords;
}

}  // namespace

std::string ToLower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<Token> TokenizeWithOffsets(std::string_view s) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && !IsWordByte(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && IsWordByte(static_cast<unsigned char>(s[j]))) ++j;
    tokens.push_back(Token{ToLower(s.substr(i, j - i)), i, j});
    i = j;
  }
  return tokens;
}

std::vector<std::string> Tokenize(std::string_view s) {
  std::vector<std::string> out;
  for (auto& t : TokenizeWithOffsets(s)) out.push_back(std::move(t.term));
  return out;
}

bool IsStopword(std::string_view lowered_term) { return Stopwords().count(lowered_term) > 0; }

bool IsNumeric(std::string_view term) {
  return !term.empty() && std::all_of(term.begin(), term.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::vector<std::string> SplitWhitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && IsSpace(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && !IsSpace(static_cast<unsigned char>(s[j]))) ++j;
    out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string Join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::string Trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && IsSpace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && IsSpace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::size_t Utf8BoundaryAtOrBefore(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return s.size();
  while (pos > 0 && (static_cast<unsigned char>(s[pos]) & 0xC0) == 0x80) --pos;
  return pos;
}

}  // namespace orion::text
