#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "orion/server.hpp"
#include "support.hpp"

namespace orion {
namespace {

using nlohmann::json;

class ApiTest : public ::testing::Test {
 protected:
  ApiTest() : engine_(testing::MakeEngine(testing::ToyScript())), api_(*engine_) {}

  ApiResponse Call(const std::string& method, const std::string& path, const json& body = nullptr,
                   std::map<std::string, std::string> params = {}) {
    ApiRequest req;
    req.method = method;
    req.path = path;
    if (!body.is_null()) req.body = body.dump();
    req.params = std::move(params);
    return api_.Handle(req);
  }

  void IngestToy() {
    auto r = Call("POST", "/v1/ingest", {{"corpus_path", (testing::DataDir() / "toy_corpus").string()}});
    ASSERT_EQ(r.status, 200) << r.body.dump();
  }

  std::unique_ptr<Engine> engine_;
  ApiService api_;
};

TEST_F(ApiTest, HealthReportsCounts) {
  auto r = Call("GET", "/v1/health");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["chunks"], 0);
  IngestToy();
  r = Call("GET", "/v1/health");
  EXPECT_EQ(r.body["documents"], 6);
  EXPECT_EQ(r.body["chunks"], 12);
  EXPECT_EQ(r.body["llm"], "scripted");
}

TEST_F(ApiTest, IngestInlineDocuments) {
  auto r = Call("POST", "/v1/ingest",
                {{"documents", json::array({{{"doc_id", "acme"}, {"title", "Acme"}, {"text", "Acme grows rice in Can Tho."}}})},
                 {"actor", "curator"}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["documents"][0]["doc_id"], "acme");
  EXPECT_EQ(engine_->index().EditLog().back().actor, "curator");
}

TEST_F(ApiTest, IngestValidation) {
  ApiRequest bad{"POST", "/v1/ingest", "{not json", {}, {}};
  EXPECT_EQ(api_.Handle(bad).status, 400);
  EXPECT_EQ(api_.Handle(bad).body["code"], "malformed_json");
  EXPECT_EQ(Call("POST", "/v1/ingest", json::array()).status, 422);
  EXPECT_EQ(Call("POST", "/v1/ingest", json::object()).status, 422);
  EXPECT_EQ(Call("POST", "/v1/ingest", {{"documents", json::array({{{"doc_id", "a"}}})}}).status, 422);
  EXPECT_EQ(Call("POST", "/v1/ingest", {{"documents", json::array({{{"doc_id", "a#1"}, {"text", "x"}}})}}).status, 400);
  EXPECT_EQ(Call("POST", "/v1/ingest", {{"corpus_path", "/nonexistent/corpus"}}).status, 422);
  EXPECT_EQ(Call("POST", "/v1/ingest", {{"documents", json::array({{{"doc_id", "a"}, {"text", "x"}}})},
                                        {"segment", {{"window_chars", 10}, {"overlap_chars", 10}}}})
                .status,
            400);
}

TEST_F(ApiTest, QueryStatuses) {
  EXPECT_EQ(Call("POST", "/v1/query", {{"question", "anything"}}).status, 409);
  IngestToy();
  EXPECT_EQ(Call("POST", "/v1/query", {{"question", ""}}).status, 422);
  EXPECT_EQ(Call("POST", "/v1/query", {{"question", 5}}).status, 422);
  EXPECT_EQ(Call("POST", "/v1/query", {{"question", "q"}, {"k", 0}}).status, 422);
  auto r = Call("POST", "/v1/query", {{"question", "What was SeaCompany Logistics revenue in 2023?"}, {"debug", true}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_NE(r.body["answer"]["text"].get<std::string>().find("1.2 billion"), std::string::npos);
  EXPECT_TRUE(r.body.contains("trace"));
  auto nogen = Call("POST", "/v1/query", {{"question", "pangasius"}, {"generate", false}});
  EXPECT_EQ(nogen.status, 200);
  EXPECT_TRUE(nogen.body["answer"].is_null());
}

TEST(ApiNullLlm, GenerationFailureIs502WithFingerprint) {
  auto engine = testing::MakeEngine(nullptr);
  engine->Ingest(testing::ToyCorpus());
  ApiService api(*engine);
  auto r = api.Handle({"POST", "/v1/query", json{{"question", "pangasius"}}.dump(), {}, {}});
  EXPECT_EQ(r.status, 502);
  EXPECT_EQ(r.body["code"], "generation_failed");
  EXPECT_EQ(r.body["prompt_fingerprint"].get<std::string>().size(), 16u);
  auto ok = api.Handle({"POST", "/v1/query", json{{"question", "pangasius"}, {"generate", false}}.dump(), {}, {}});
  EXPECT_EQ(ok.status, 200);
}

TEST_F(ApiTest, DocsChunksAndTags) {
  IngestToy();
  auto docs = Call("GET", "/v1/docs");
  ASSERT_EQ(docs.body["documents"].size(), 6u);
  EXPECT_FALSE(docs.body["documents"][0]["master_tags"].empty());

  auto chunks = Call("GET", "/v1/docs/mekong_agri/chunks");
  ASSERT_EQ(chunks.status, 200);
  EXPECT_EQ(chunks.body["total"], 2);
  EXPECT_EQ(chunks.body["chunks"][0]["chunk_id"], "mekong_agri#0");
  EXPECT_EQ(Call("GET", "/v1/docs/nope/chunks").status, 404);

  auto chunk = Call("GET", "/v1/chunks/mekong_agri#1");
  ASSERT_EQ(chunk.status, 200);
  EXPECT_TRUE(chunk.body.contains("text"));
  EXPECT_EQ(Call("GET", "/v1/chunks/mekong_agri#9").status, 404);

  auto inject = Call("POST", "/v1/docs/mekong_agri/tags", {{"tag", "catfish exports"}, {"probe_query", "catfish exports"}});
  ASSERT_EQ(inject.status, 200) << inject.body.dump();
  auto after = Call("GET", "/v1/chunks/mekong_agri#0");
  auto master = after.body["path"]["master"];
  EXPECT_EQ(master.back(), "catfish exports");

  auto chunk_inject = Call("POST", "/v1/chunks/mekong_agri#1/tags", {{"tag", "river delta"}});
  EXPECT_EQ(chunk_inject.status, 200);
  EXPECT_EQ(Call("GET", "/v1/chunks/mekong_agri#1").body["path"]["paragraph"].back(), "river delta");

  auto removed = Call("DELETE", "/v1/docs/mekong_agri/tags", {{"tag", "catfish exports"}});
  EXPECT_EQ(removed.status, 200);
  auto absent = Call("DELETE", "/v1/docs/mekong_agri/tags", nullptr, {{"tag", "catfish exports"}});
  EXPECT_EQ(absent.status, 404);
  EXPECT_EQ(absent.body["code"], "tag_not_present");
  EXPECT_EQ(Call("POST", "/v1/docs/mekong_agri/tags", json::object()).status, 422);
  EXPECT_EQ(Call("POST", "/v1/docs/nope/tags", {{"tag", "x"}}).status, 404);
}

TEST_F(ApiTest, EditLogPaging) {
  IngestToy();
  Call("POST", "/v1/docs/java_power/tags", {{"tag", "geothermal"}});
  Call("POST", "/v1/docs/java_power/tags", {{"tag", "geothermal"}});
  auto all = Call("GET", "/v1/editlog");
  ASSERT_EQ(all.body["records"].size(), 3u);
  EXPECT_EQ(all.body["records"][2]["outcome"], "noop");
  auto since = Call("GET", "/v1/editlog", nullptr, {{"since", "1"}, {"limit", "1"}});
  ASSERT_EQ(since.body["records"].size(), 1u);
  EXPECT_EQ(since.body["records"][0]["seq"], 2);
  EXPECT_EQ(Call("GET", "/v1/editlog", nullptr, {{"since", "x"}}).status, 400);
}

TEST_F(ApiTest, UnknownRoutes) {
  EXPECT_EQ(Call("GET", "/v2/health").status, 404);
  EXPECT_EQ(Call("GET", "/v1/nothing").status, 404);
  EXPECT_EQ(Call("PUT", "/v1/query").status, 404);
}

TEST(ApiAuth, TokenRequiredExceptHealth) {
  auto engine = testing::MakeEngine();
  ApiService api(*engine, "s3cret");
  EXPECT_EQ(api.Handle({"GET", "/v1/health", "", {}, {}}).status, 200);
  EXPECT_EQ(api.Handle({"GET", "/v1/docs", "", {}, {}}).status, 401);
  EXPECT_EQ(api.Handle({"GET", "/v1/docs", "", {}, {{"authorization", "Bearer nope"}}}).status, 401);
  EXPECT_EQ(api.Handle({"GET", "/v1/docs", "", {}, {{"authorization", "Bearer s3cret"}}}).status, 200);
}

TEST(ApiPagination, HundredChunkDocument) {
  auto engine = testing::MakeEngine();
  std::string text;
  for (int i = 0; i < 100; ++i) text += "Paragraph " + std::to_string(i) + " about rice. ";
  ApiService api(*engine);
  json body = {{"documents", json::array({{{"doc_id", "long"}, {"text", text}}})},
               {"segment", {{"window_chars", 24}, {"overlap_chars", 0}}}};
  auto r = api.Handle({"POST", "/v1/ingest", body.dump(), {}, {}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  const std::size_t total = engine->index().DocumentChunks("long").size();
  ASSERT_GE(total, 100u);
  std::vector<std::string> seen;
  for (std::size_t offset = 0; offset < total; offset += 30) {
    auto page = api.Handle({"GET", "/v1/docs/long/chunks", "", {{"offset", std::to_string(offset)}, {"limit", "30"}}, {}});
    ASSERT_EQ(page.status, 200);
    EXPECT_EQ(page.body["total"], total);
    for (const auto& c : page.body["chunks"]) seen.push_back(c["chunk_id"]);
  }
  EXPECT_EQ(seen, engine->index().DocumentChunks("long"));
}

class HttpFixture : public ::testing::Test {
 protected:
  HttpFixture() : engine_(testing::MakeEngine(testing::ToyScript())), api_(*engine_, "tok"), server_(api_, 4) {
    port_ = server_.Bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_.Listen(); });
    server_.WaitUntilReady();
  }
  ~HttpFixture() override {
    server_.Stop();
    thread_.join();
  }
  httplib::Client Client() {
    httplib::Client c("127.0.0.1", port_);
    c.set_bearer_token_auth("tok");
    c.set_read_timeout(60, 0);
    return c;
  }

  std::unique_ptr<Engine> engine_;
  ApiService api_;
  HttpServer server_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(HttpFixture, EndToEndOverSocket) {
  auto c = Client();
  json ingest = {{"corpus_path", (testing::DataDir() / "toy_corpus").string()}};
  auto r = c.Post("/v1/ingest", ingest.dump(), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  r = c.Get("/v1/chunks/bdo_unibank%230");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["chunk_id"], "bdo_unibank#0");
  r = c.Post("/v1/query", json{{"question", "What was SeaCompany Logistics revenue in 2023?"}}.dump(), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_NE(json::parse(r->body)["answer"]["text"].get<std::string>().find("1.2 billion"), std::string::npos);
  r = c.Delete("/v1/docs/bdo_unibank/tags?tag=absent%20tag");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);

  httplib::Client anon("127.0.0.1", port_);
  r = anon.Get("/v1/docs");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 401);
  r = anon.Get("/v1/health");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
}

TEST_F(HttpFixture, ConcurrentIngestAndQuery) {
  auto c = Client();
  ASSERT_EQ(c.Post("/v1/ingest", json{{"corpus_path", (testing::DataDir() / "toy_corpus").string()}}.dump(),
                   "application/json")
                ->status,
            200);
  std::atomic<int> ok{0}, failed{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 3; ++t) {
    threads.emplace_back([&, t] {
      auto client = Client();
      for (int i = 0; i < 4; ++i) {
        httplib::Result r;
        if (t == 0) {
          json doc = {{"doc_id", "extra" + std::to_string(i)}, {"text", "Extra profile number " + std::to_string(i)}};
          r = client.Post("/v1/ingest", json{{"documents", json::array({doc})}}.dump(), "application/json");
        } else {
          r = client.Post("/v1/query", json{{"question", "pangasius exports"}, {"generate", false}}.dump(),
                          "application/json");
        }
        (r && r->status == 200 ? ok : failed)++;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(failed.load(), 0);
  EXPECT_EQ(ok.load(), 12);
  EXPECT_EQ(engine_->index().DocumentIds().size(), 10u);
  auto ids = engine_->index().ChunkIdSets();
  EXPECT_EQ(ids.tag, ids.sparse);
  EXPECT_EQ(ids.tag, ids.dense);
}

}  // namespace
}  // namespace orion
