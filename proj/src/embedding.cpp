#include "orion/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "http_post.hpp"
#include "orion/error.hpp"
#include "orion/text.hpp"

using nlohmann::json;

namespace orion {

Metric ParseMetric(std::string_view name) {
  if (name == "l2") return Metric::kL2;
  if (name == "cosine") return Metric::kCosine;
  Fail(ErrorKind::kInvalidArgument, "unknown metric: " + std::string(name));
}

const char* ToString(Metric metric) { return metric == Metric::kL2 ? "l2" : "cosine"; }

double Similarity(std::span<const float> a, std::span<const float> b, Metric metric) {
  if (a.size() != b.size()) {
    Fail(ErrorKind::kInvalidArgument,
         "dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  if (metric == Metric::kL2) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
      sum += d * d;
    }
    return std::sqrt(sum);
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

void NormalizeInPlace(std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) return;
  for (double& x : v) x /= norm;
}

HashedEmbedder::HashedEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim == 0) Fail(ErrorKind::kInvalidArgument, "embedding dim must be positive");
}

Vector HashedEmbedder::EmbedOne(std::string_view body) const {
  std::vector<double> acc(dim_, 0.0);
  for (const auto& token : text::Tokenize(body)) {
    auto h = Hash64(token, seed_);
    auto bucket = static_cast<std::size_t>(h % dim_);
    acc[bucket] += (h >> 63) ? -1.0 : 1.0;
  }
  NormalizeInPlace(acc);
  return Vector(acc.begin(), acc.end());
}

std::vector<Vector> HashedEmbedder::Embed(std::span<const std::string> texts) {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(EmbedOne(t));
  return out;
}

std::string HashedEmbedder::fingerprint() const {
  return "hashed-v1:dim=" + std::to_string(dim_) + ":seed=" + std::to_string(seed_);
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) Fail(ErrorKind::kInvalidArgument, "remote embedder needs an endpoint");
  if (options_.dim == 0) Fail(ErrorKind::kInvalidArgument, "remote embedder needs embedder.dim");
  if (options_.batch_size == 0) options_.batch_size = 1;
}

std::string RemoteEmbedder::fingerprint() const {
  return "remote:" + options_.model + ":dim=" + std::to_string(options_.dim);
}

std::vector<Vector> RemoteEmbedder::ParseResponseBody(const std::string& body, std::size_t expected_count) {
  std::vector<Vector> out;
  try {
    auto doc = json::parse(body);
    if (auto data = doc.find("data"); data != doc.end()) {
      out.resize(data->size());
      for (std::size_t i = 0; i < data->size(); ++i) {
        const auto& item = (*data)[i];
        auto index = item.contains("index") ? item.at("index").get<std::size_t>() : i;
        if (index >= out.size()) throw BackendError("embedding index out of range", false);
        out[index] = item.at("embedding").get<Vector>();
      }
    } else {
      out = doc.at("embeddings").get<std::vector<Vector>>();
    }
  } catch (const json::exception& e) {
    throw BackendError("malformed embedding response", false, e.what());
  }
  if (out.size() != expected_count) {
    throw BackendError("embedding response has " + std::to_string(out.size()) + " vectors, expected " +
                           std::to_string(expected_count),
                       false);
  }
  return out;
}

std::vector<Vector> RemoteEmbedder::Embed(std::span<const std::string> texts) {
  std::vector<std::pair<std::string, std::string>> headers;
  if (!options_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + options_.api_key);
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (std::size_t begin = 0; begin < texts.size(); begin += options_.batch_size) {
    auto batch = texts.subspan(begin, std::min(options_.batch_size, texts.size() - begin));
    json body = {{"model", options_.model}, {"input", std::vector<std::string>(batch.begin(), batch.end())}};
    auto response =
        detail::PostJsonWithRetry(options_.endpoint, body.dump(), headers, options_.timeout_seconds, options_.retry);
    for (auto& v : ParseResponseBody(response.body, batch.size())) out.push_back(std::move(v));
  }
  return out;
}

std::vector<Vector> EmbedText(std::span<const std::string> texts, Embedder& embedder, std::size_t expected_dim) {
  auto vectors = embedder.Embed(texts);
  if (vectors.size() != texts.size()) {
    throw BackendError("embedder returned " + std::to_string(vectors.size()) + " vectors for " +
                           std::to_string(texts.size()) + " inputs",
                       false);
  }
  for (const auto& v : vectors) {
    if (v.size() != expected_dim) {
      Fail(ErrorKind::kInvalidArgument, "embedding dimension mismatch: got " + std::to_string(v.size()) +
                                            ", index expects " + std::to_string(expected_dim));
    }
    if (!std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); })) {
      throw BackendError("embedder returned a non-finite value", false);
    }
  }
  return vectors;
}

PathEmbedding ParsePathEmbedding(std::string_view name) {
  if (name == "mean_tags") return PathEmbedding::kMeanTags;
  if (name == "joined_string") return PathEmbedding::kJoinedString;
  Fail(ErrorKind::kInvalidArgument, "unknown path_embedding mode: " + std::string(name));
}

namespace {

std::vector<double> MeanOf(const std::vector<const Vector*>& parts, std::size_t dim) {
  std::vector<double> mean(dim, 0.0);
  for (const auto* v : parts) {
    for (std::size_t i = 0; i < dim; ++i) mean[i] += (*v)[i];
  }
  for (double& x : mean) x /= static_cast<double>(parts.size());
  return mean;
}

}  // namespace

std::vector<double> PathMean(const SemanticPath& path, Embedder& embedder) {
  auto tags = path.tag_texts();
  if (tags.empty()) Fail(ErrorKind::kInvalidArgument, "cannot embed an empty path");
  auto vectors = EmbedText(tags, embedder, embedder.dim());
  std::vector<const Vector*> parts;
  for (const auto& v : vectors) parts.push_back(&v);
  return MeanOf(parts, embedder.dim());
}

Vector EmbedPath(const SemanticPath& path, Embedder& embedder, PathEmbedding mode) {
  return EmbedPaths(std::span<const SemanticPath>(&path, 1), embedder, mode).front();
}

std::vector<Vector> EmbedPaths(std::span<const SemanticPath> paths, Embedder& embedder, PathEmbedding mode) {
  const auto dim = embedder.dim();
  for (const auto& p : paths) {
    if (p.master.empty() && p.paragraph.empty()) Fail(ErrorKind::kInvalidArgument, "cannot embed an empty path");
  }
  if (mode == PathEmbedding::kJoinedString) {
    std::vector<std::string> joined;
    for (const auto& p : paths) joined.push_back(text::Join(p.tag_texts(), " "));
    return EmbedText(joined, embedder, dim);
  }

  std::map<std::string, std::size_t> slot;
  std::vector<std::string> unique;
  for (const auto& p : paths) {
    for (auto& t : p.tag_texts()) {
      if (slot.emplace(t, unique.size()).second) unique.push_back(t);
    }
  }
  auto vectors = EmbedText(unique, embedder, dim);
  std::vector<Vector> out;
  out.reserve(paths.size());
  for (const auto& p : paths) {
    std::vector<const Vector*> parts;
    for (const auto& t : p.tag_texts()) parts.push_back(&vectors[slot.at(t)]);
    auto mean = MeanOf(parts, dim);
    NormalizeInPlace(mean);
    out.emplace_back(mean.begin(), mean.end());
  }
  return out;
}

}  // namespace orion
