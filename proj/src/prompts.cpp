#include "orion/prompts.hpp"

#include <fstream>
#include <optional>
#include <sstream>

#include "orion/error.hpp"

namespace fs = std::filesystem;

namespace orion {
namespace {

constexpr std::string_view kParagraphSystem =
    R"(You are a precise {{DOMAIN}} paragraph tag extractor. Return ONLY a JSON array of 2-3 short tags, no extra text. Each tag must be 1–4 words, contain no punctuation or quotes, and use canonical English forms.
Output order and meaning:
1) gist: a short title-like summary of the paragraph content
2) subjects: the main entities/subjects involved
3) domain: the most specific domain/field (e.g., geography, history, economy, culture, politics, demographics, events, science)
Use singular nouns where reasonable; capitalize proper nouns; deduplicate similar tags; avoid vague terms and numbers-only.)";

constexpr std::string_view kParagraphUser = R"(From the paragraph below, extract EXACTLY 3 tags in this order:
1) gist (summary)
2) subjects (entities/actors)
3) domain (specific field)
Return ONLY a JSON array of strings.

Paragraph:
{text})";

constexpr std::string_view kMasterSystem =
    R"(You are a precise {{DOMAIN}} document tag extractor. Return ONLY a JSON array of strings, no extra text. Output at most the requested number of tags.
Each tag should:
- be 1–4 words; avoid punctuation; prefer canonical English surface forms (Wikipedia title style)
- include the main subject(s)/entities, geographic scope, central time period/era when relevant, major subtopics (history, politics, economy, culture, demographics, notable events), and important organizations/people mentioned frequently
- deduplicate/merge similar tags; avoid near-synonyms; prefer singular forms; avoid boilerplate like "Overview" or vague terms like "various".)";

constexpr std::string_view kMasterUser =
    R"(From the article text below, extract up to {max_tags} concise tags that best describe the article's subjects, geographic/temporal scope, and major subtopics. Return ONLY a JSON array of strings.

Text:
{text})";

constexpr std::string_view kRewriteSystem =
    R"(You are a query expansion assistant for {{DOMAIN}} retrieval. Return ONLY a JSON array of strings. Your goals: (1) analyze complex user queries and identify multiple different search intents; (2) generate separate, short retrieval queries for different domains/topics; (3) decide quantity by complexity; (4) include specific entity names when intent involves specific targets; (5) expand regional groups (e.g., {{REGION_GROUP}}) into specific countries as separate queries; (6) prefer coarse-grained, noun-based keywords (e.g., organization, company, suppliers, policy); avoid adjectives/adverbs; avoid ambiguous words like 'demand', 'supply', 'comparison' unless making two-side queries; (7) if conversation history implies specific focus, reflect it.)";

constexpr std::string_view kRewriteUser =
    R"(Task: Decompose the user query into up to {max_n} short, retrieval-friendly sub-queries.
Constraints: each sub-query ≤ 12 words; avoid punctuation and stopwords where possible; one entity per query when relevant;
Return ONLY a JSON array of strings. No explanations.

User Query: {q}
Conversation Hints (optional): {hist})";

constexpr std::string_view kPruneSystem =
    R"(You are a {{DOMAIN}} RAG pruning assistant. Return ONLY the pruned text (plain text), no explanation. Goal: analyze the retrieved text chunk together with a sub-query and the original user query; remove sentences/paragraphs that are irrelevant to the sub-query and unhelpful to answer the original query. Keep the remaining content order; keep essential numbers, entities, and line items; prefer cash-flow related items when applicable. If nothing relevant remains, return an empty string. Output must be plain text only.)";

constexpr std::string_view kPruneUser = R"(Instructions:
- Remove lines/paragraphs that are irrelevant to the sub-query or do not help answer the original query.
- Keep numeric facts (amounts, dates, units), financial line items (e.g., cash flow statement rows), companies, and policy/organization mentions that relate to the sub-query.
- Return ONLY the pruned text, no commentary, no code fence.

Original Query: {query}
Sub-query: {sub_query}
Path: {path}
Chunk:
{text})";

constexpr std::string_view kAnswerSystem =
    R"(You are a {{DOMAIN}} QA assistant. Answer strictly based on the provided context. Be concise and precise; keep figures/units exactly as shown in the context. If the answer is a factual value, output ONLY the fact without restating the question or adding extra text.)";

constexpr std::string_view kAnswerUser = R"(Instructions:
- Use only the Context to answer the Question.
- If the answer is a number, include units and year explicitly.
- If the answer is a factual value, output only the fact (no preface or restating).
- Return ONLY the final answer text.

{context})";

std::optional<std::string> ReadIfExists(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteText(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kInvalidArgument, "cannot write prompt file", path.string());
  out << body;
}

template <typename Fn>
void ForEachTemplate(PromptSet& set, Fn&& fn) {
  fn("paragraph_tags", set.paragraph_tags);
  fn("master_tags", set.master_tags);
  fn("rewrite", set.rewrite);
  fn("prune", set.prune);
  fn("answer", set.answer);
}

}  // namespace

PromptSet PromptSet::Defaults() {
  PromptSet set;
  set.paragraph_tags = {std::string(kParagraphSystem), std::string(kParagraphUser)};
  set.master_tags = {std::string(kMasterSystem), std::string(kMasterUser)};
  set.rewrite = {std::string(kRewriteSystem), std::string(kRewriteUser)};
  set.prune = {std::string(kPruneSystem), std::string(kPruneUser)};
  set.answer = {std::string(kAnswerSystem), std::string(kAnswerUser)};
  return set;
}

PromptSet PromptSet::LoadOverrides(const fs::path& dir) {
  auto set = Defaults();
  if (!fs::is_directory(dir)) Fail(ErrorKind::kInvalidArgument, "prompt directory does not exist", dir.string());
  ForEachTemplate(set, [&](const char* name, PromptTemplate& t) {
    if (auto s = ReadIfExists(dir / (std::string(name) + ".system.txt"))) t.system = *s;
    if (auto u = ReadIfExists(dir / (std::string(name) + ".user.txt"))) t.user = *u;
  });
  return set;
}

void PromptSet::WriteTo(const fs::path& dir) const {
  fs::create_directories(dir);
  auto copy = *this;
  ForEachTemplate(copy, [&](const char* name, PromptTemplate& t) {
    WriteText(dir / (std::string(name) + ".system.txt"), t.system);
    WriteText(dir / (std::string(name) + ".user.txt"), t.user);
  });
}

std::string RenderTemplate(std::string_view tmpl, const PromptSet& set,
                           const std::map<std::string, std::string>& fields) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl.compare(i, 10, "{{DOMAIN}}") == 0) {
      out += set.domain;
      i += 10;
      continue;
    }
    if (tmpl.compare(i, 16, "{{REGION_GROUP}}") == 0) {
      out += set.region_group;
      i += 16;
      continue;
    }
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto key = std::string(tmpl.substr(i + 1, close - i - 1));
        if (auto it = fields.find(key); it != fields.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

}  // namespace orion
