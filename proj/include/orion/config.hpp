#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "orion/corpus.hpp"
#include "orion/generation.hpp"
#include "orion/index.hpp"
#include "orion/retrieval.hpp"

namespace orion {

struct EmbedderConfig {
  std::string kind = "hashed";  // hashed | remote
  std::size_t dim = 256;
  std::uint64_t seed = 42;
  std::string endpoint;
  std::string model;
  std::string api_key_env = "ORION_EMBEDDING_API_KEY";
  std::size_t batch_size = 32;
  double timeout_seconds = 30.0;
};

struct LlmConfig {
  std::string kind = "null";  // null | remote | scripted
  std::string endpoint;
  std::string model;
  std::string api_key_env = "ORION_LLM_API_KEY";
  double timeout_seconds = 60.0;
  std::string fixture;  // scripted responses file
  std::size_t max_in_flight = 8;
};

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string api_token_env = "ORION_API_TOKEN";
  std::size_t threads = 8;
};

struct EngineConfig {
  EmbedderConfig embedder;
  LlmConfig llm;
  std::string tagger = "heuristic";  // heuristic | llm
  std::size_t max_master_tags = 5;
  std::size_t ingest_workers = 4;
  SegmentOptions segment;
  IndexOptions index;  // dim and fingerprint are taken from the embedder
  std::string index_dir;
  RetrievalConfig retrieval;
  GenerationOptions generation;
  std::string prompts_dir;
  std::string domain = "general";
  std::string region_group = "ASEAN";
  ServerConfig server;
  std::size_t eval_concurrency = 1;

  /// Unknown keys are rejected so typos surface instead of silently
  /// reverting to defaults.
  static EngineConfig FromJson(const nlohmann::json& j);
  static EngineConfig Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;
  void Validate() const;
};

}  // namespace orion
