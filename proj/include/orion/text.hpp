#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace orion::text {

struct Token {
  std::string term;  // lowercased
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Bytes >= 0x80 count as word characters so UTF-8 words are never split.
inline bool IsWordByte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

inline bool IsSpace(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string ToLower(std::string_view s);

/// Lowercase and split on non-alphanumerics. Shared by BM25, the hashed
/// embedder and the heuristic tagger.
std::vector<std::string> Tokenize(std::string_view s);
std::vector<Token> TokenizeWithOffsets(std::string_view s);

bool IsStopword(std::string_view lowered_term);
bool IsNumeric(std::string_view term);

std::vector<std::string> SplitWhitespace(std::string_view s);
std::string Join(const std::vector<std::string>& parts, std::string_view sep);
std::string Trim(std::string_view s);

/// Largest index <= pos that is not a UTF-8 continuation byte.
std::size_t Utf8BoundaryAtOrBefore(std::string_view s, std::size_t pos);

}  // namespace orion::text

namespace orion {

/// FNV-1a 64 followed by the splitmix64 finalizer. Stable across platforms.
std::uint64_t Hash64(std::string_view data, std::uint64_t seed = 0);
std::string HexDigest(std::uint64_t value);

}  // namespace orion
