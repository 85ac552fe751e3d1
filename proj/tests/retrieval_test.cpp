// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "kailin/error.hpp"
#include "kailin/retrieval.hpp"
#include "support.hpp"

namespace kailin {
namespace {

DocumentStore three_docs() {
  return DocumentStore({{"d1", "enzyme activity", "in yeast", {}, {}},
                        {"d2", "enzyme dimer", "structure", {}, {}},
                        {"d3", "protein fold", "kinetics", {}, {}}});
}

RetrievalConfig dense_cfg(int k = 3) {
  RetrievalConfig cfg;
  cfg.mode = RetrievalMode::kDense;
  cfg.top_k = k;
  cfg.embedding_model = "mock-embed";
  return cfg;
}

TEST(MockEmbedder, DeterministicUnitVectors) {
  MockEmbedder e(48);
  const auto a = e.embed("m", "text");
  const auto b = e.embed("m", "text");
  const auto c = e.embed("other", "text");
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  ASSERT_EQ(a.size(), 48u);
  double sq = 0.0;
  for (double x : a) sq += x * x;
  EXPECT_NEAR(sq, 1.0, 1e-12);
  EXPECT_EQ(e.calls(), 3u);
}

TEST(DenseTopK, IdenticalTextRanksFirstWithUnitScore) {
  const auto store = three_docs();
  MockEmbedder e;
  EmbeddingCache cache;
  const auto r = dense_top_k(document_text(store.at("d2")), dense_cfg(), store, e, cache);
  ASSERT_EQ(r.hits.size(), 3u);
  EXPECT_EQ(r.hits[0].pmid, "d2");
  EXPECT_NEAR(r.hits[0].score, 1.0, 1e-12);
}

TEST(DenseTopK, CacheCallCounts) {
  const auto store = three_docs();
  MockEmbedder e;
  EmbeddingCache cache;
  dense_top_k("enzyme", dense_cfg(), store, e, cache);
  EXPECT_EQ(e.calls(), 4u);
  EXPECT_EQ(cache.size(), 3u);
  dense_top_k("enzyme", dense_cfg(), store, e, cache);
  EXPECT_EQ(e.calls(), 5u);
}

TEST(DenseTopK, PersistentCacheSurvivesRestart) {
  const auto dir = kailin::testing::scratch_dir("embed_cache");
  const auto store = three_docs();
  MockEmbedder e;
  std::vector<Hit> first;
  {
    EmbeddingCache cache(dir);
    first = dense_top_k("fold", dense_cfg(), store, e, cache).hits;
  }
  EmbeddingCache reopened(dir);
  const auto again = dense_top_k("fold", dense_cfg(), store, e, reopened).hits;
  EXPECT_EQ(e.calls(), 5u);
  EXPECT_EQ(first, again);
  const auto key = EmbeddingCache::key("mock-embed", document_text(store.at("d1")));
  EXPECT_TRUE(std::filesystem::exists(dir / key.substr(0, 2) / (key + ".json")));
}

TEST(DenseTopK, DimensionMismatch) {
  const auto store = three_docs();
  MockEmbedder e;
  e.set_dimension_hook([](std::string_view text) { return text.find("dimer") != text.npos ? 4u : 3u; });
  EmbeddingCache cache;
  try {
    dense_top_k("enzyme", dense_cfg(), store, e, cache);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(DenseTopK, RequiresModelAndHonoursK) {
  const auto store = three_docs();
  MockEmbedder e;
  EmbeddingCache cache;
  auto cfg = dense_cfg(2);
  EXPECT_EQ(dense_top_k("enzyme", cfg, store, e, cache).hits.size(), 2u);
  cfg.embedding_model.clear();
  EXPECT_THROW(dense_top_k("enzyme", cfg, store, e, cache), Error);
}

TEST(DenseTopK, ConcurrentQueriesShareTheCache) {
  std::mt19937_64 rng(4);
  const auto store = kailin::testing::random_corpus(rng, 40, 30);
  MockEmbedder e;
  EmbeddingCache cache;
  const auto reference = dense_top_k("enzyme kinase", dense_cfg(5), store, e, cache).hits;
  std::vector<std::vector<Hit>> results(8);
  {
    std::vector<std::jthread> threads;
    for (std::size_t i = 0; i < results.size(); ++i) {
      threads.emplace_back([&, i] { results[i] = dense_top_k("enzyme kinase", dense_cfg(5), store, e, cache).hits; });
    }
  }
  for (const auto& r : results) EXPECT_EQ(r, reference);
  std::set<std::string> texts;  // duplicate documents share an entry
  for (const auto& d : store.documents()) texts.insert(document_text(d));
  EXPECT_EQ(cache.size(), texts.size());
}

class CannedTransport final : public Transport {
 public:
  explicit CannedTransport(HttpResponse r) : response_(std::move(r)) {}
  HttpResponse post(const HttpRequest& request) override {
    last_ = request;
    return response_;
  }
  HttpRequest last_;

 private:
  HttpResponse response_;
};

TEST(HttpEmbeddingClient, ParsesAndReportsFailures) {
  auto ok = std::make_shared<CannedTransport>(HttpResponse{200, R"({"data":[{"embedding":[0.5,0.25]}]})", ""});
  HttpEmbeddingClient client(ok, "secret");
  EXPECT_EQ(client.embed("m", "t"), (Embedding{0.5, 0.25}));
  EXPECT_EQ(ok->last_.path, "/embeddings");
  EXPECT_EQ(nlohmann::json::parse(ok->last_.body)["input"], "t");

  for (const HttpResponse& bad : {HttpResponse{503, "", ""}, HttpResponse{0, "", "refused"},
                                  HttpResponse{200, "{}", ""}}) {
    HttpEmbeddingClient c(std::make_shared<CannedTransport>(bad), "");
    try {
      c.embed("m", "t");
      FAIL();
    } catch (const Error& err) {
      EXPECT_EQ(err.code(), ErrorCode::kEmbeddingServiceError);
      EXPECT_TRUE(is_external_service_error(err.code()));
    }
  }
}

TEST(Retriever, DispatchAndGuards) {
  const auto store = three_docs();
  const auto index = build_index(store);
  MockEmbedder e;
  EmbeddingCache cache;
  const Retriever full(store, &index, &e, &cache);
  RetrievalConfig cfg;
  cfg.top_k = 1;
  EXPECT_EQ(full.retrieve("enzyme activity", cfg).hits.at(0).pmid, "d1");
  cfg.mode = RetrievalMode::kRandom;
  EXPECT_EQ(full.retrieve("q", cfg).hits, full.retrieve("q", cfg).hits);
  EXPECT_EQ(full.retrieve("q", cfg).hits.size(), 1u);
  EXPECT_EQ(full.retrieve("q", dense_cfg(2)).hits.size(), 2u);

  const Retriever no_index(store, nullptr);
  cfg.mode = RetrievalMode::kTfidf;
  try {
    no_index.retrieve("enzyme", cfg);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kIndexMissing);
  }
  EXPECT_THROW(no_index.retrieve("enzyme", dense_cfg()), Error);

  const auto other = build_index(DocumentStore({{"x", "unrelated", "", {}, {}}}));
  try {
    Retriever mismatched(store, &other);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kIndexMismatch);
  }
}

TEST(RetrievalProperties, HitCountAndUniqueness) {
  std::mt19937_64 rng(31);
  MockEmbedder e(16);
  for (int iter = 0; iter < 30; ++iter) {
    const auto store = kailin::testing::random_corpus(rng, 30, 25);
    const auto index = build_index(store);
    EmbeddingCache cache;
    const Retriever r(store, &index, &e, &cache);
    for (auto mode : {RetrievalMode::kTfidf, RetrievalMode::kDense, RetrievalMode::kRandom}) {
      RetrievalConfig cfg = dense_cfg(1 + static_cast<int>(rng() % 8));
      cfg.mode = mode;
      const std::string query = "enzyme protein kinase tumor lung";
      if (mode == RetrievalMode::kTfidf && index.query_vector(query).empty()) continue;
      const auto hits = r.retrieve(query, cfg).hits;
      std::set<std::string> unique;
      for (const auto& h : hits) unique.insert(h.pmid);
      ASSERT_EQ(unique.size(), hits.size());
      ASSERT_EQ(hits.size(), std::min<std::size_t>(cfg.top_k, store.size())) << to_string(mode);
    }
  }
}

}  // namespace
}  // namespace kailin
