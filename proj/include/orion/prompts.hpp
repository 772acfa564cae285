#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace orion {

struct PromptTemplate {
  std::string system;
  std::string user;
};

/// Every agent prompt. Templates use `{{DOMAIN}}` and `{{REGION_GROUP}}`
/// for deployment-wide substitutions and `{name}` for per-call fields.
struct PromptSet {
  PromptTemplate paragraph_tags;  // {text}
  PromptTemplate master_tags;     // {max_tags} {text}
  PromptTemplate rewrite;         // {max_n} {q} {hist}
  PromptTemplate prune;           // {query} {sub_query} {path} {text}
  PromptTemplate answer;          // {q} {context}
  std::string domain = "general";
  std::string region_group = "ASEAN";

  static PromptSet Defaults();

  /// Loads `<name>.system.txt` / `<name>.user.txt` overrides from `dir`;
  /// absent files keep the default text.
  static PromptSet LoadOverrides(const std::filesystem::path& dir);

  /// Writes every template to `dir` in the layout LoadOverrides reads.
  void WriteTo(const std::filesystem::path& dir) const;
};

/// Substitutes `{{DOMAIN}}`, `{{REGION_GROUP}}` and each `{key}` in `fields`.
/// Unknown placeholders are left untouched.
std::string RenderTemplate(std::string_view tmpl, const PromptSet& set,
                           const std::map<std::string, std::string>& fields);

}  // namespace orion
