#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "orion/corpus.hpp"
#include "orion/engine.hpp"

namespace orion {

/// 1 when any of the first k retrieved ids is relevant, else 0.
double HitRateAtK(std::span<const std::string> retrieved, const std::set<std::string>& relevant, std::size_t k);

/// |top-k ∩ relevant| / k; k stays the denominator even for short lists.
double PrecisionAtK(std::span<const std::string> retrieved, const std::set<std::string>& relevant, std::size_t k);

/// Token-level LCS F1 over lowercased whitespace tokens; 0 when either side
/// has no tokens.
double RougeL(std::string_view candidate, std::string_view reference);

enum class BenchmarkMethod { kOrion, kVss, kSparse, kHybrid };

BenchmarkMethod ParseBenchmarkMethod(std::string_view name);
const char* ToString(BenchmarkMethod method);

inline constexpr std::size_t kRetrievalKs[] = {3, 5, 10};
inline constexpr std::size_t kGenerationK = 5;

/// Ranked chunk ids for one question under a method, at most k of them.
/// Orion merges its per-sub-query lists in fused-score order, first
/// occurrence wins.
std::vector<std::string> RetrieveForMethod(const Engine& engine, BenchmarkMethod method, const std::string& question,
                                           std::size_t k);

struct MethodReport {
  BenchmarkMethod method = BenchmarkMethod::kOrion;
  std::map<std::size_t, double> hit_rate;   // by k
  std::map<std::size_t, double> precision;  // by k
  std::optional<double> rouge_l;            // mean; absent without generation
  std::size_t generation_failures = 0;
  double retrieval_seconds = 0.0;
  double generation_seconds = 0.0;
};

struct BenchmarkReport {
  std::size_t documents = 0;
  std::size_t chunks = 0;
  std::size_t questions = 0;
  double index_seconds = 0.0;
  std::vector<MethodReport> methods;
  nlohmann::json config;
};

struct BenchmarkOptions {
  std::vector<BenchmarkMethod> methods{BenchmarkMethod::kOrion};
  bool generate = false;
  std::size_t concurrency = 1;
};

/// Ingests `docs` into the engine (timed), then evaluates every question
/// for each method at k in {3, 5, 10}; generation runs at k = 5.
BenchmarkReport RunBenchmark(Engine& engine, const std::vector<Document>& docs, const std::vector<QaRecord>& qa,
                             const BenchmarkOptions& options);

nlohmann::json BenchmarkReportJson(const BenchmarkReport& report);

/// Aligned plain-text table with Hit/Prec columns per k.
std::string RenderBenchmarkTable(const BenchmarkReport& report);

}  // namespace orion
