#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "orion/completion.hpp"
#include "orion/tagging.hpp"

namespace orion {

using Vector = std::vector<float>;

enum class Metric { kL2, kCosine };

Metric ParseMetric(std::string_view name);
const char* ToString(Metric metric);

/// L2: Euclidean distance, smaller is closer. Cosine: similarity in [-1, 1],
/// larger is closer (0 when either vector is zero). Throws on dim mismatch.
double Similarity(std::span<const float> a, std::span<const float> b, Metric metric);

/// True when `a` is a better match than `b` under the metric.
inline bool Closer(double a, double b, Metric metric) { return metric == Metric::kL2 ? a < b : a > b; }

void NormalizeInPlace(std::vector<double>& v);

/// Maps strings to fixed-dimension vectors. Output order matches input order
/// and the same string always yields the same vector within one backend.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<Vector> Embed(std::span<const std::string> texts) = 0;
  virtual std::size_t dim() const = 0;
  /// Identifies backend, model and dimension; persisted indices record it.
  virtual std::string fingerprint() const = 0;
};

/// Feature-hashed bag of words: lowercase alphanumeric tokens, each hashed
/// into a signed bucket, then L2-normalized. Text without tokens maps to the
/// zero vector.
class HashedEmbedder final : public Embedder {
 public:
  explicit HashedEmbedder(std::size_t dim = 256, std::uint64_t seed = 42);
  std::vector<Vector> Embed(std::span<const std::string> texts) override;
  std::size_t dim() const override { return dim_; }
  std::string fingerprint() const override;

  Vector EmbedOne(std::string_view text) const;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

struct RemoteEmbedderOptions {
  std::string endpoint;  // full URL of the embeddings route
  std::string model;
  std::string api_key;
  std::size_t dim = 0;
  std::size_t batch_size = 32;
  double timeout_seconds = 30.0;
  RetryPolicy retry{3, std::chrono::milliseconds(200), 2.0, std::chrono::milliseconds(5000)};
};

/// JSON-over-HTTP embeddings protocol:
///   request  {model, input: [string...]}
///   response {data: [{index, embedding: [float...]}...]} or {embeddings: [[float...]...]}
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(RemoteEmbedderOptions options);
  std::vector<Vector> Embed(std::span<const std::string> texts) override;
  std::size_t dim() const override { return options_.dim; }
  std::string fingerprint() const override;

  static std::vector<Vector> ParseResponseBody(const std::string& body, std::size_t expected_count);

 private:
  RemoteEmbedderOptions options_;
};

/// Embeds and validates: one finite vector of `expected_dim` per input.
std::vector<Vector> EmbedText(std::span<const std::string> texts, Embedder& embedder, std::size_t expected_dim);

enum class PathEmbedding { kMeanTags, kJoinedString };

PathEmbedding ParsePathEmbedding(std::string_view name);

/// Arithmetic mean of the per-tag embeddings before normalization.
std::vector<double> PathMean(const SemanticPath& path, Embedder& embedder);

/// kMeanTags: L2-normalized PathMean. kJoinedString: embedding of the tags
/// joined by spaces.
Vector EmbedPath(const SemanticPath& path, Embedder& embedder, PathEmbedding mode = PathEmbedding::kMeanTags);

/// Batch form of EmbedPath; each distinct tag string is embedded once.
std::vector<Vector> EmbedPaths(std::span<const SemanticPath> paths, Embedder& embedder,
                               PathEmbedding mode = PathEmbedding::kMeanTags);

}  // namespace orion
