#include <functional>

#include <gtest/gtest.h>

#include "orion/engine.hpp"
#include "orion/error.hpp"
#include "support.hpp"

namespace orion {
namespace {

using testing::MakeEngine;
using testing::ToyCorpus;

ErrorKind KindOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::kData;
}

// Master tags come from the heuristic tagger; paragraph tags always throw.
class FailingParagraphTagger : public Tagger {
 public:
  std::vector<std::string> Extract(const TagRequest& request) override {
    if (request.kind == TagKind::kParagraph) throw BackendError("tagger offline", false);
    return inner_.Extract(request);
  }
  std::string name() const override { return "failing"; }

 private:
  HeuristicTagger inner_;
};

TEST(Engine, IngestReportsChunksAndReplacement) {
  auto engine = MakeEngine();
  auto report = engine->Ingest(ToyCorpus());
  ASSERT_EQ(report.documents.size(), 6u);
  EXPECT_EQ(engine->index().size(), 12u);
  for (const auto& d : report.documents) {
    EXPECT_FALSE(d.replaced);
    EXPECT_EQ(d.chunk_ids.size(), 2u);
    EXPECT_TRUE(d.needs_review.empty());
  }
  auto docs = ToyCorpus();
  docs.resize(1);
  docs[0].text = "BDO Unibank was restated as a short profile.";
  auto again = engine->Ingest(docs, "curator");
  EXPECT_TRUE(again.documents[0].replaced);
  EXPECT_EQ(again.documents[0].chunk_ids, (std::vector<std::string>{"bdo_unibank#0"}));
  EXPECT_EQ(engine->index().size(), 11u);
  EXPECT_FALSE(engine->index().HasChunk("bdo_unibank#1"));
  auto log = engine->index().EditLog();
  ASSERT_EQ(log.size(), 2u);
  EXPECT_EQ(log[1].action, "ingest");
  EXPECT_EQ(log[1].actor, "curator");
  EXPECT_EQ(again.edit_seq, log[1].seq);
}

TEST(Engine, EveryChunkHasMasterAndOneToThreeParagraphTags) {
  auto engine = MakeEngine();
  engine->Ingest(ToyCorpus());
  for (const auto& doc : engine->index().DocumentIds()) {
    std::vector<Tag> master;
    for (const auto& id : engine->index().DocumentChunks(doc)) {
      auto item = engine->index().Get(id);
      ASSERT_TRUE(item);
      EXPECT_GE(item->path.master.size(), 1u);
      EXPECT_LE(item->path.master.size(), 5u);
      EXPECT_GE(item->path.paragraph.size(), 1u) << id;
      EXPECT_LE(item->path.paragraph.size(), 3u) << id;
      if (master.empty()) master = item->path.master;
      EXPECT_EQ(item->path.master, master) << "master tags differ within " << doc;
    }
  }
}

TEST(Engine, InvalidBatchesAreRejectedWholesale) {
  auto engine = MakeEngine();
  EXPECT_EQ(KindOf([&] { engine->Ingest({{"a#1", "", "text", {}}}); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(KindOf([&] { engine->Ingest({{"", "", "text", {}}}); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(KindOf([&] { engine->Ingest({{"a", "", "   ", {}}}); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(KindOf([&] { engine->Ingest({{"a", "", "x", {}}, {"a", "", "y", {}}}); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(KindOf([&] { engine->Ingest({{"a", "", "x", {}}}, "system", SegmentOptions{10, 10}); }),
            ErrorKind::kInvalidArgument);
  EXPECT_EQ(engine->index().size(), 0u);
}

TEST(Engine, QueryOnEmptyIndexIsConflict) {
  auto engine = MakeEngine();
  EXPECT_EQ(KindOf([&] { engine->Query({"anything", std::nullopt, false, false}); }), ErrorKind::kConflict);
  engine->Ingest(ToyCorpus());
  EXPECT_EQ(KindOf([&] { engine->Query({"  ", std::nullopt, false, false}); }), ErrorKind::kInvalidArgument);
  EXPECT_EQ(KindOf([&] { engine->Query({"q", 0, false, false}); }), ErrorKind::kInvalidArgument);
}

TEST(Engine, NullLlmDegradesToPureIndexRetrieval) {
  auto engine = MakeEngine(nullptr);
  engine->Ingest(ToyCorpus());
  auto result = engine->Query({"Which companies export to Vietnam?", std::nullopt, false, false});
  ASSERT_EQ(result.contexts.size(), 1u);
  EXPECT_EQ(result.contexts[0].sub_query, "Which companies export to Vietnam?");
  ASSERT_FALSE(result.contexts[0].fused.empty());
  ASSERT_EQ(result.contexts[0].pruned.size(), result.contexts[0].fused.size());
  for (std::size_t i = 0; i < result.contexts[0].pruned.size(); ++i) {
    const auto& ev = result.contexts[0].pruned[i];
    EXPECT_EQ(ev.chunk_id, result.contexts[0].fused[i].chunk_id);
    EXPECT_EQ(ev.text, engine->index().Get(ev.chunk_id)->chunk.text);
  }
  EXPECT_FALSE(result.answer.has_value());
  EXPECT_THROW(engine->Query({"Which companies export to Vietnam?", std::nullopt, false, true}), GenerationError);
}

TEST(Engine, NullCompletionClientBehavesLikeNoClient) {
  auto engine = MakeEngine(std::make_shared<NullCompletionClient>());
  engine->Ingest(ToyCorpus());
  auto result = engine->Query({"pangasius farming", std::nullopt, false, false});
  ASSERT_EQ(result.contexts.size(), 1u);
  EXPECT_EQ(result.contexts[0].pruned.size(), result.contexts[0].fused.size());
}

TEST(Engine, ScriptedQueryAnswers) {
  auto engine = MakeEngine(testing::ToyScript());
  engine->Ingest(ToyCorpus());
  auto result = engine->Query({"What was SeaCompany Logistics revenue in 2023?", std::nullopt, false, true});
  ASSERT_TRUE(result.answer.has_value());
  EXPECT_NE(result.answer->text.find("1.2 billion"), std::string::npos);
  EXPECT_GT(result.contexts.size(), 1u);
  EXPECT_EQ(result.contexts[0].sub_query, "What was SeaCompany Logistics revenue in 2023?");
}

TEST(Engine, FailingParagraphTaggerFallsBackAndQueuesReview) {
  auto engine = MakeEngine(nullptr, testing::TestConfig(), std::make_shared<FailingParagraphTagger>());
  auto report = engine->Ingest(ToyCorpus());
  EXPECT_EQ(engine->index().size(), 12u);
  std::size_t flagged = 0;
  for (const auto& d : report.documents) flagged += d.needs_review.size();
  EXPECT_EQ(flagged, 12u);
  EXPECT_EQ(engine->ReviewQueue().size(), 12u);
  for (const auto& id : engine->ReviewQueue()) {
    auto item = engine->index().Get(id);
    EXPECT_GE(item->path.paragraph.size(), 1u) << id;
  }
  // Re-ingesting a document replaces its queue entries rather than adding.
  auto docs = ToyCorpus();
  docs.resize(1);
  auto fixed = engine->Ingest(docs);
  EXPECT_EQ(engine->ReviewQueue().size(), 12u);
  EXPECT_EQ(fixed.documents[0].needs_review.size(), 2u);
}

TEST(Engine, EditTagReportsProbeMovement) {
  auto engine = MakeEngine();
  engine->Ingest(ToyCorpus());
  const std::string probe = "coastal feeder shipping";
  auto result = engine->EditTag("seacompany_logistics", probe, TagScope::kDocument, true, probe, "curator");
  EXPECT_FALSE(result.report.noop);
  ASSERT_EQ(result.probes.size(), 2u);
  for (const auto& p : result.probes) {
    EXPECT_LT(p.after.distance, p.before.distance) << p.chunk_id;
    EXPECT_LE(p.after.rank, p.before.rank) << p.chunk_id;
  }
  auto removed = engine->EditTag("seacompany_logistics", probe, TagScope::kDocument, false, probe, "curator");
  ASSERT_EQ(removed.probes.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(removed.probes[i].after.distance, result.probes[i].before.distance, 1e-6);
  }
  auto again = engine->EditTag("seacompany_logistics", probe, TagScope::kDocument, false, std::nullopt);
  EXPECT_TRUE(again.report.noop);
  EXPECT_TRUE(again.probes.empty());
}

TEST(Engine, JsonViews) {
  auto engine = MakeEngine(testing::ToyScript());
  auto ingest = IngestReportJson(engine->Ingest(ToyCorpus()));
  EXPECT_EQ(ingest["documents"].size(), 6u);
  auto result = engine->Query({"Which ASEAN companies export to Vietnam?", std::nullopt, true, true});
  auto compact = QueryResultJson(result);
  EXPECT_TRUE(compact.contains("answer"));
  auto trace = QueryTraceJson(result, engine->config().retrieval);
  EXPECT_EQ(trace["question"], "Which ASEAN companies export to Vietnam?");
  EXPECT_EQ(trace["sub_queries"][0], "Which ASEAN companies export to Vietnam?");
  EXPECT_EQ(trace["config"]["tag_fanout"], 15);
  EXPECT_EQ(trace["config"]["sparse_fanout"], 2);
  EXPECT_EQ(TraceRound(0.1234567894), 0.123456789);
  EXPECT_EQ(TraceRound(-1e-12), 0.0);
}

}  // namespace
}  // namespace orion
