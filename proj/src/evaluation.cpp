#include "orion/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "orion/error.hpp"
#include "orion/text.hpp"

using nlohmann::json;

namespace orion {

double HitRateAtK(std::span<const std::string> retrieved, const std::set<std::string>& relevant, std::size_t k) {
  const std::size_t n = std::min(k, retrieved.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (relevant.count(retrieved[i])) return 1.0;
  }
  return 0.0;
}

double PrecisionAtK(std::span<const std::string> retrieved, const std::set<std::string>& relevant, std::size_t k) {
  if (k == 0) Fail(ErrorKind::kInvalidArgument, "k must be >= 1");
  const std::size_t n = std::min(k, retrieved.size());
  std::set<std::string> hits;
  for (std::size_t i = 0; i < n; ++i) {
    if (relevant.count(retrieved[i])) hits.insert(retrieved[i]);
  }
  return static_cast<double>(hits.size()) / static_cast<double>(k);
}

double RougeL(std::string_view candidate, std::string_view reference) {
  auto cand = text::SplitWhitespace(text::ToLower(candidate));
  auto ref = text::SplitWhitespace(text::ToLower(reference));
  if (cand.empty() || ref.empty()) return 0.0;
  std::vector<std::size_t> prev(ref.size() + 1, 0), cur(ref.size() + 1, 0);
  for (std::size_t i = 1; i <= cand.size(); ++i) {
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      cur[j] = cand[i - 1] == ref[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[ref.size()]);
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(cand.size());
  const double r = lcs / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

BenchmarkMethod ParseBenchmarkMethod(std::string_view name) {
  if (name == "orion") return BenchmarkMethod::kOrion;
  if (name == "vss") return BenchmarkMethod::kVss;
  if (name == "sparse") return BenchmarkMethod::kSparse;
  if (name == "hybrid") return BenchmarkMethod::kHybrid;
  Fail(ErrorKind::kInvalidArgument, "unknown benchmark method: " + std::string(name));
}

const char* ToString(BenchmarkMethod method) {
  switch (method) {
    case BenchmarkMethod::kOrion:
      return "orion";
    case BenchmarkMethod::kVss:
      return "vss";
    case BenchmarkMethod::kSparse:
      return "sparse";
    case BenchmarkMethod::kHybrid:
      return "hybrid";
  }
  return "unknown";
}

namespace {

std::vector<std::string> Ids(const std::vector<RankedHit>& hits) {
  std::vector<std::string> out;
  for (const auto& h : hits) out.push_back(h.chunk_id);
  return out;
}

Vector EmbedQuery(const Engine& engine, const std::string& q) {
  const std::string texts[] = {q};
  return EmbedText(texts, engine.embedder(), engine.index().options().dim).front();
}

/// Evidence across sub-queries ordered by fused score, first occurrence kept.
std::vector<std::string> MergeContexts(const std::vector<SubQueryContext>& contexts) {
  struct Entry {
    double score;
    std::size_t order;
    std::string id;
  };
  std::vector<Entry> all;
  for (const auto& ctx : contexts) {
    std::unordered_map<std::string, double> score;
    for (const auto& f : ctx.fused) score.emplace(f.chunk_id, f.score);
    for (const auto& e : ctx.pruned) all.push_back({score.at(e.chunk_id), all.size(), e.chunk_id});
  }
  std::stable_sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& e : all) {
    if (seen.insert(e.id).second) out.push_back(e.id);
  }
  return out;
}

}  // namespace

std::vector<std::string> RetrieveForMethod(const Engine& engine, BenchmarkMethod method, const std::string& question,
                                           std::size_t k) {
  const auto& index = engine.index();
  switch (method) {
    case BenchmarkMethod::kVss:
      return Ids(index.SearchDense(EmbedQuery(engine, question), k));
    case BenchmarkMethod::kSparse:
      return Ids(index.SearchSparse(question, k));
    case BenchmarkMethod::kHybrid: {
      const std::size_t fanout = engine.config().retrieval.tag_fanout_multiplier * k;
      std::map<std::string, SourceRanks> ranks;
      for (const auto& h : index.SearchDense(EmbedQuery(engine, question), fanout)) ranks[h.chunk_id].sem = h.rank;
      for (const auto& h : index.SearchSparse(question, fanout)) ranks[h.chunk_id].sparse = h.rank;
      std::vector<RrfInput> inputs;
      for (const auto& [id, r] : ranks) inputs.push_back({id, r});
      RetrievalConfig cfg;
      cfg.k = k;
      cfg.w_tag = 0.0;
      cfg.w_sem = 0.5;
      cfg.w_sparse = 0.5;
      cfg.eta = engine.config().retrieval.eta;
      std::vector<std::string> out;
      for (const auto& f : RrfFuse(inputs, cfg)) out.push_back(f.chunk_id);
      return out;
    }
    case BenchmarkMethod::kOrion: {
      QueryRequest req;
      req.question = question;
      req.k = k;
      req.generate = false;
      auto ids = MergeContexts(engine.Query(req).contexts);
      if (ids.size() > k) ids.resize(k);
      return ids;
    }
  }
  return {};
}

namespace {

template <typename Fn>
void ParallelFor(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::min(std::max<std::size_t>(workers, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

BenchmarkReport RunBenchmark(Engine& engine, const std::vector<Document>& docs, const std::vector<QaRecord>& qa,
                             const BenchmarkOptions& options) {
  BenchmarkReport report;
  report.config = engine.config().ToJson();
  report.questions = qa.size();

  auto t0 = std::chrono::steady_clock::now();
  if (!docs.empty()) engine.Ingest(docs, "benchmark");
  report.index_seconds = Seconds(t0);
  report.documents = engine.index().DocumentIds().size();
  report.chunks = engine.index().size();
  if (report.chunks == 0) Fail(ErrorKind::kData, "benchmark index is empty");

  std::vector<std::set<std::string>> gold(qa.size());
  for (std::size_t i = 0; i < qa.size(); ++i) {
    if (!engine.index().HasDocument(qa[i].doc_id)) {
      spdlog::warn("gold document {} of question {} is not indexed", qa[i].doc_id, i);
      continue;
    }
    for (auto& id : engine.index().DocumentChunks(qa[i].doc_id)) gold[i].insert(std::move(id));
  }

  for (auto method : options.methods) {
    MethodReport m;
    m.method = method;
    auto t_retrieval = std::chrono::steady_clock::now();
    for (std::size_t k : kRetrievalKs) {
      std::vector<double> hit(qa.size()), prec(qa.size());
      ParallelFor(qa.size(), options.concurrency, [&](std::size_t i) {
        auto ids = RetrieveForMethod(engine, method, qa[i].question, k);
        hit[i] = HitRateAtK(ids, gold[i], k);
        prec[i] = PrecisionAtK(ids, gold[i], k);
      });
      double h = 0, p = 0;
      for (std::size_t i = 0; i < qa.size(); ++i) {
        h += hit[i];
        p += prec[i];
      }
      const double n = qa.empty() ? 1.0 : static_cast<double>(qa.size());
      m.hit_rate[k] = h / n;
      m.precision[k] = p / n;
    }
    m.retrieval_seconds = Seconds(t_retrieval);

    if (options.generate) {
      auto t_gen = std::chrono::steady_clock::now();
      std::vector<double> rouge(qa.size(), 0.0);
      std::atomic<std::size_t> failures{0};
      ParallelFor(qa.size(), options.concurrency, [&](std::size_t i) {
        try {
          std::string answer;
          if (method == BenchmarkMethod::kOrion) {
            QueryRequest req{qa[i].question, kGenerationK, false, true};
            answer = engine.Query(req).answer->text;
          } else {
            SubQueryContext ctx;
            ctx.sub_query = qa[i].question;
            for (const auto& id : RetrieveForMethod(engine, method, qa[i].question, kGenerationK)) {
              auto chunk = engine.index().Get(id);
              if (chunk) ctx.pruned.push_back({id, chunk->chunk.text, chunk->path});
            }
            NullCompletionClient null_client;
            CompletionClient& client = engine.llm() ? *engine.llm() : static_cast<CompletionClient&>(null_client);
            const SubQueryContext contexts[] = {ctx};
            answer = GenerateAnswer(qa[i].question, contexts, client, engine.prompts(), engine.config().generation).text;
          }
          rouge[i] = RougeL(answer, qa[i].answer);
        } catch (const BackendError& e) {
          ++failures;
          spdlog::warn("generation failed for question {}: {}", i, e.what());
        }
      });
      double sum = 0;
      for (double r : rouge) sum += r;
      m.rouge_l = qa.empty() ? 0.0 : sum / static_cast<double>(qa.size());
      m.generation_failures = failures;
      m.generation_seconds = Seconds(t_gen);
    }
    report.methods.push_back(std::move(m));
  }
  return report;
}

json BenchmarkReportJson(const BenchmarkReport& report) {
  json methods = json::array();
  for (const auto& m : report.methods) {
    json retrieval = json::object();
    for (std::size_t k : kRetrievalKs) {
      retrieval[std::to_string(k)] = {{"hit_rate", m.hit_rate.at(k)}, {"precision", m.precision.at(k)}};
    }
    methods.push_back({{"method", ToString(m.method)},
                       {"retrieval", retrieval},
                       {"rouge_l", m.rouge_l ? json(*m.rouge_l) : json(nullptr)},
                       {"bertscore", "not computed"},
                       {"generation_failures", m.generation_failures},
                       {"timings", {{"retrieval_seconds", m.retrieval_seconds},
                                    {"generation_seconds", m.generation_seconds}}}});
  }
  return {{"documents", report.documents},
          {"chunks", report.chunks},
          {"questions", report.questions},
          {"index_construction_seconds", report.index_seconds},
          {"methods", methods},
          {"config", report.config}};
}

std::string RenderBenchmarkTable(const BenchmarkReport& report) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"Method"};
  for (std::size_t k : kRetrievalKs) {
    header.push_back("Hit@" + std::to_string(k));
    header.push_back("Prec.@" + std::to_string(k));
  }
  header.insert(header.end(), {"ROUGE-L", "BERTScore", "Retrieval (s)", "Generation (s)"});
  rows.push_back(header);

  auto num = [](double v, const char* fmt) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return std::string(buf);
  };
  for (const auto& m : report.methods) {
    std::vector<std::string> row{ToString(m.method)};
    for (std::size_t k : kRetrievalKs) {
      row.push_back(num(m.hit_rate.at(k), "%.3f"));
      row.push_back(num(m.precision.at(k), "%.3f"));
    }
    row.push_back(m.rouge_l ? num(*m.rouge_l, "%.4f") : "-");
    row.push_back("not computed");
    row.push_back(num(m.retrieval_seconds, "%.3f"));
    row.push_back(m.rouge_l ? num(m.generation_seconds, "%.3f") : "-");
    rows.push_back(std::move(row));
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c) out += "  ";
      const auto& cell = rows[r][c];
      if (c == 0) {
        out += cell + std::string(width[c] - cell.size(), ' ');
      } else {
        out += std::string(width[c] - cell.size(), ' ') + cell;
      }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    }
  }
  out += "Index construction (s): " + num(report.index_seconds, "%.3f") + "  documents: " +
         std::to_string(report.documents) + "  chunks: " + std::to_string(report.chunks) +
         "  questions: " + std::to_string(report.questions) + "\n";
  return out;
}

}  // namespace orion
