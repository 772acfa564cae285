#include <atomic>
#include <cmath>
#include <random>
#include <set>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "orion/embedding.hpp"
#include "orion/error.hpp"
#include "support.hpp"

namespace orion {
namespace {

using nlohmann::json;

double Norm(const Vector& v) {
  double s = 0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

TEST(Similarity, L2AndCosineByHand) {
  Vector a{1, 0}, b{0, 1}, c{2, 0};
  EXPECT_NEAR(Similarity(a, b, Metric::kL2), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(Similarity(a, c, Metric::kCosine), 1.0, 1e-12);
  EXPECT_NEAR(Similarity(a, b, Metric::kCosine), 0.0, 1e-12);
  EXPECT_EQ(Similarity(a, Vector{0, 0}, Metric::kCosine), 0.0);
  EXPECT_THROW(Similarity(a, Vector{1, 2, 3}, Metric::kL2), Error);
  EXPECT_TRUE(Closer(0.1, 0.2, Metric::kL2));
  EXPECT_TRUE(Closer(0.9, 0.2, Metric::kCosine));
}

TEST(HashedEmbedder, DeterministicUnitVectors) {
  HashedEmbedder e(64, 42);
  auto a = e.EmbedOne("BDO Unibank universal banking");
  auto b = HashedEmbedder(64, 42).EmbedOne("bdo unibank, universal banking!");
  EXPECT_EQ(a, b);
  EXPECT_NEAR(Norm(a), 1.0, 1e-6);
  EXPECT_NE(a, HashedEmbedder(64, 43).EmbedOne("BDO Unibank universal banking"));
}

TEST(HashedEmbedder, NoTokensGivesZeroVector) {
  HashedEmbedder e(16);
  EXPECT_EQ(Norm(e.EmbedOne(" ;; ")), 0.0);
}

TEST(HashedEmbedder, Fingerprint) { EXPECT_EQ(HashedEmbedder(128, 7).fingerprint(), "hashed-v1:dim=128:seed=7"); }

TEST(HashedEmbedder, DistinctStringsGetDistinctVectors) {
  HashedEmbedder e(256);
  std::set<Vector> seen;
  EXPECT_NE(e.EmbedOne("listen"), e.EmbedOne("silent"));
  // Single tokens can only land in 2 * dim states, so the fixture strings
  // carry several tokens each.
  std::mt19937_64 rng(4);
  std::set<std::string> strings;
  while (strings.size() < 1000) strings.insert(testing::RandomWords(rng, 6, 5000));
  for (const auto& s : strings) seen.insert(e.EmbedOne(s));
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(EmbedText, RejectsWrongDimension) {
  HashedEmbedder e(8);
  const std::string texts[] = {"a"};
  EXPECT_THROW(EmbedText(texts, e, 16), Error);
}

TEST(PathEmbedding, MeanOfTagVectorsThenNormalized) {
  HashedEmbedder e(32);
  auto path = BuildPath(NormalizeTags({"rice", "delta floods"}), NormalizeTags({"exports"}));
  auto mean = PathMean(path, e);
  auto r = e.EmbedOne("rice"), d = e.EmbedOne("delta floods"), x = e.EmbedOne("exports");
  for (std::size_t i = 0; i < 32; ++i) {
    EXPECT_NEAR(mean[i], (static_cast<double>(r[i]) + d[i] + x[i]) / 3.0, 1e-12);
  }
  auto v = EmbedPath(path, e);
  EXPECT_NEAR(Norm(v), 1.0, 1e-6);
  auto joined = EmbedPath(path, e, PathEmbedding::kJoinedString);
  EXPECT_EQ(joined, e.EmbedOne("rice delta floods exports"));
}

TEST(PathEmbedding, BatchMatchesSingle) {
  HashedEmbedder e(32);
  std::vector<SemanticPath> paths = {BuildPath(NormalizeTags({"a", "b"}), {}),
                                     BuildPath(NormalizeTags({"b", "c"}), NormalizeTags({"d"}))};
  auto batch = EmbedPaths(paths, e);
  EXPECT_EQ(batch[0], EmbedPath(paths[0], e));
  EXPECT_EQ(batch[1], EmbedPath(paths[1], e));
}

// Property: appending a tag whose vector equals the probe q moves the
// unnormalized mean towards q by exactly n/(n+1), and the normalized path
// vector never moves away from q.
TEST(PathEmbeddingProperty, InjectingQueryTagContracts) {
  HashedEmbedder e(64);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
    std::vector<std::string> raw;
    for (std::size_t i = 0; i < n; ++i) raw.push_back("tag" + std::to_string(trial) + "x" + std::to_string(i));
    std::string probe = "probe" + std::to_string(trial) + " topic";
    auto before = BuildPath(NormalizeTags(raw), {});
    raw.push_back(probe);
    auto after = BuildPath(NormalizeTags(raw), {});
    auto q = e.EmbedOne(probe);
    auto m0 = PathMean(before, e), m1 = PathMean(after, e);
    double d0 = 0, d1 = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      d0 += (q[i] - m0[i]) * (q[i] - m0[i]);
      d1 += (q[i] - m1[i]) * (q[i] - m1[i]);
    }
    EXPECT_NEAR(std::sqrt(d1), std::sqrt(d0) * n / (n + 1.0), 1e-12);
    EXPECT_LE(Similarity(q, EmbedPath(after, e), Metric::kL2), Similarity(q, EmbedPath(before, e), Metric::kL2) + 1e-9);
  }
}

TEST(RemoteEmbedder, ParsesBothResponseShapes) {
  auto a = RemoteEmbedder::ParseResponseBody(
      R"({"data":[{"index":1,"embedding":[3,4]},{"index":0,"embedding":[1,2]}]})", 2);
  EXPECT_EQ(a[0], (Vector{1, 2}));
  EXPECT_EQ(a[1], (Vector{3, 4}));
  auto b = RemoteEmbedder::ParseResponseBody(R"({"embeddings":[[1,2]]})", 1);
  EXPECT_EQ(b[0], (Vector{1, 2}));
  EXPECT_THROW(RemoteEmbedder::ParseResponseBody(R"({"embeddings":[[1,2]]})", 2), BackendError);
  EXPECT_THROW(RemoteEmbedder::ParseResponseBody("not json", 1), BackendError);
}

class FakeEmbeddingService {
 public:
  explicit FakeEmbeddingService(int failures_before_success) : failures_left_(failures_before_success) {
    server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
      ++calls_;
      if (failures_left_-- > 0) {
        res.status = 503;
        return;
      }
      auto body = json::parse(req.body);
      json out = {{"embeddings", json::array()}};
      batch_sizes_.push_back(body["input"].size());
      last_auth_ = req.get_header_value("Authorization");
      for (const auto& s : body["input"]) out["embeddings"].push_back({static_cast<double>(s.get<std::string>().size()), 1.0});
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEmbeddingService() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/embed"; }

  std::atomic<int> calls_{0};
  std::vector<std::size_t> batch_sizes_;
  std::string last_auth_;

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> failures_left_;
};

RemoteEmbedderOptions FastOptions(const std::string& url) {
  RemoteEmbedderOptions o;
  o.endpoint = url;
  o.model = "test";
  o.dim = 2;
  o.batch_size = 2;
  o.api_key = "secret";
  o.retry = {3, std::chrono::milliseconds(1), 2.0, std::chrono::milliseconds(5)};
  return o;
}

TEST(RemoteEmbedder, BatchesAndRetriesTransientFailures) {
  FakeEmbeddingService service(2);
  RemoteEmbedder embedder(FastOptions(service.url()));
  std::vector<std::string> texts{"a", "bb", "ccc", "dddd", "eeeee"};
  auto out = EmbedText(texts, embedder, 2);
  ASSERT_EQ(out.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(out[i][0], static_cast<float>(i + 1));
  EXPECT_EQ(service.batch_sizes_, (std::vector<std::size_t>{2, 2, 1}));
  EXPECT_EQ(service.calls_.load(), 5);  // two 503s, then three batches
  EXPECT_EQ(service.last_auth_, "Bearer secret");
}

TEST(RemoteEmbedder, GivesUpAfterMaxAttempts) {
  FakeEmbeddingService service(100);
  RemoteEmbedder embedder(FastOptions(service.url()));
  std::vector<std::string> texts{"a"};
  EXPECT_THROW(embedder.Embed(texts), BackendError);
  EXPECT_EQ(service.calls_.load(), 3);
}

TEST(RemoteEmbedder, UnreachableEndpointIsBackendError) {
  auto o = FastOptions("http://127.0.0.1:1/embed");
  RemoteEmbedder embedder(o);
  std::vector<std::string> texts{"a"};
  EXPECT_THROW(embedder.Embed(texts), BackendError);
}

}  // namespace
}  // namespace orion
