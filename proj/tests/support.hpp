#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "orion/completion.hpp"
#include "orion/config.hpp"
#include "orion/corpus.hpp"
#include "orion/embedding.hpp"
#include "orion/engine.hpp"
#include "orion/index.hpp"
#include "orion/tagging.hpp"

namespace orion::testing {

inline std::filesystem::path DataDir() { return ORION_TEST_DATA_DIR; }

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("orion-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::vector<Tag> Tags(const std::vector<std::string>& raw) { return NormalizeTags(raw); }

inline AugmentedChunk MakeItem(const std::string& doc_id, std::size_t ordinal, const std::string& text,
                               const std::vector<std::string>& master, const std::vector<std::string>& paragraph,
                               Embedder& embedder) {
  AugmentedChunk item;
  item.chunk.doc_id = doc_id;
  item.chunk.ordinal = ordinal;
  item.chunk.chunk_id = MakeChunkId(doc_id, ordinal);
  item.chunk.text = text;
  item.chunk.span = {0, text.size()};
  item.path = BuildPath(Tags(master), Tags(paragraph));
  const std::string texts[] = {text};
  item.v_text = EmbedText(texts, embedder, embedder.dim()).front();
  item.v_path = EmbedPath(item.path, embedder);
  return item;
}

/// Unit vector drawn from a Gaussian.
inline Vector RandomUnitVector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = g(rng);
  NormalizeInPlace(v);
  return Vector(v.begin(), v.end());
}

inline std::string RandomWords(std::mt19937_64& rng, std::size_t count, std::size_t vocab = 50) {
  std::uniform_int_distribution<std::size_t> pick(0, vocab - 1);
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    if (i) out += ' ';
    out += "w" + std::to_string(pick(rng));
  }
  return out;
}

inline IndexOptions SmallIndexOptions(const Embedder& embedder) {
  IndexOptions o;
  o.dim = embedder.dim();
  o.embedder_fingerprint = embedder.fingerprint();
  return o;
}

inline EngineConfig TestConfig() {
  EngineConfig c;
  c.embedder.dim = 256;
  c.ingest_workers = 2;
  return c;
}

/// Engine over the hashed embedder and heuristic tagger with an optional
/// completion client.
inline std::unique_ptr<Engine> MakeEngine(std::shared_ptr<CompletionClient> llm = nullptr,
                                          EngineConfig config = TestConfig(),
                                          std::shared_ptr<Tagger> tagger = std::make_shared<HeuristicTagger>()) {
  auto embedder = std::make_shared<HashedEmbedder>(config.embedder.dim, config.embedder.seed);
  return std::make_unique<Engine>(config, embedder, std::move(llm), std::move(tagger), PromptSet::Defaults());
}

inline std::shared_ptr<ScriptedCompletionClient> ToyScript() {
  return std::shared_ptr<ScriptedCompletionClient>(
      ScriptedCompletionClient::FromFile(DataDir() / "scripted_llm.json").release());
}

inline std::vector<Document> ToyCorpus() { return LoadCorpus(DataDir() / "toy_corpus", CorpusSchema::kProfiles); }

}  // namespace orion::testing
