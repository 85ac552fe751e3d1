// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#include "kailin/retrieval.hpp"

#include <cmath>
#include <fstream>
#include <mutex>

#include <nlohmann/json.hpp>

#include "kailin/digest.hpp"
#include "kailin/error.hpp"

namespace kailin {
namespace {

void normalize(Embedding& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double n = std::sqrt(sq);
  if (n == 0.0) return;
  for (double& x : v) x /= n;
}

double cosine_unit(const Embedding& a, const Embedding& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

Embedding MockEmbedder::embed(std::string_view model, std::string_view text) {
  ++calls_;
  const std::size_t dim = dim_hook_ ? dim_hook_(text) : dim_;
  Embedding v(dim);
  std::string seed = std::string(model) + '\0' + std::string(text);
  Sha256 block{};
  for (std::size_t i = 0; i < dim; ++i) {
    if (i % 16 == 0) {
      block = sha256(seed + '\0' + std::to_string(i / 16));
    }
    const std::size_t off = (i % 16) * 2;
    const unsigned raw = (static_cast<unsigned>(block[off]) << 8) | block[off + 1];
    v[i] = raw / 32767.5 - 1.0;
  }
  normalize(v);
  return v;
}

HttpEmbeddingClient::HttpEmbeddingClient(std::shared_ptr<Transport> transport, std::string api_key,
                                         std::chrono::milliseconds timeout)
    : transport_(std::move(transport)), api_key_(std::move(api_key)), timeout_(timeout) {}

Embedding HttpEmbeddingClient::embed(std::string_view model, std::string_view text) {
  nlohmann::ordered_json body;
  body["model"] = model;
  body["input"] = text;
  HttpRequest req;
  req.path = "/embeddings";
  req.body = body.dump();
  req.timeout = timeout_;
  if (!api_key_.empty()) req.headers.emplace_back("Authorization", "Bearer " + api_key_);
  const HttpResponse resp = transport_->post(req);
  if (!resp.received()) {
    throw Error(ErrorCode::kEmbeddingServiceError, "transport: " + resp.error);
  }
  if (resp.status < 200 || resp.status >= 300) {
    throw Error(ErrorCode::kEmbeddingServiceError, "HTTP " + std::to_string(resp.status), resp.status);
  }
  try {
    const auto j = nlohmann::json::parse(resp.body);
    return j.at("data").at(0).at("embedding").get<Embedding>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kEmbeddingServiceError, std::string("bad response: ") + e.what(), resp.status);
  }
}

EmbeddingCache::EmbeddingCache(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::filesystem::create_directories(*directory_);
}

std::string EmbeddingCache::key(std::string_view model, std::string_view text) {
  return sha256_hex(std::string(model) + '\0' + sha256_hex(text));
}

std::optional<Embedding> EmbeddingCache::get(std::string_view model, std::string_view text) const {
  const std::string k = key(model, text);
  {
    std::shared_lock lock(mutex_);
    if (const auto it = memory_.find(k); it != memory_.end()) return it->second;
  }
  if (!directory_) return std::nullopt;
  std::ifstream in(*directory_ / k.substr(0, 2) / (k + ".json"));
  if (!in) return std::nullopt;
  Embedding v;
  try {
    v = nlohmann::json::parse(in).get<Embedding>();
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;  // unreadable entries are treated as misses
  }
  std::unique_lock lock(mutex_);
  memory_.emplace(k, v);
  return v;
}

void EmbeddingCache::put(std::string_view model, std::string_view text, const Embedding& value) {
  const std::string k = key(model, text);
  std::unique_lock lock(mutex_);
  memory_[k] = value;
  if (!directory_) return;
  const auto dir = *directory_ / k.substr(0, 2);
  std::filesystem::create_directories(dir);
  const auto tmp = dir / (k + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write embedding cache " + tmp.string());
    out << nlohmann::json(value).dump() << '\n';
  }
  std::filesystem::rename(tmp, dir / (k + ".json"));
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mutex_);
  return memory_.size();
}

ScoredRetrieval dense_top_k(std::string_view query, const RetrievalConfig& cfg,
                            const DocumentStore& store, EmbeddingClient& embedder,
                            EmbeddingCache& cache) {
  if (cfg.top_k < 1) throw Error(ErrorCode::kConfigError, "top_k must be >= 1");
  if (cfg.embedding_model.empty()) {
    throw Error(ErrorCode::kConfigError, "dense retrieval needs an embedding model");
  }
  if (query.empty()) throw Error(ErrorCode::kEmptyQuery, "empty query");
  std::optional<std::size_t> dim;
  auto check_dim = [&](const Embedding& v, std::string_view what) {
    if (!dim) dim = v.size();
    if (v.size() != *dim || v.empty()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  std::string(what) + " has dimension " + std::to_string(v.size()) +
                      ", expected " + std::to_string(*dim));
    }
  };

  std::vector<Embedding> doc_vectors;
  doc_vectors.reserve(store.size());
  for (const auto& doc : store.documents()) {
    const std::string text = document_text(doc);
    std::optional<Embedding> v = cache.get(cfg.embedding_model, text);
    if (!v) {
      v = embedder.embed(cfg.embedding_model, text);
      cache.put(cfg.embedding_model, text, *v);
    }
    check_dim(*v, "document " + doc.pmid);
    normalize(*v);
    doc_vectors.push_back(std::move(*v));
  }
  Embedding q = embedder.embed(cfg.embedding_model, query);
  check_dim(q, "query");
  normalize(q);

  ScoredRetrieval result;
  result.query_fingerprint = sha256_hex(cfg.embedding_model + '\0' + std::string(query));
  for (std::size_t i = 0; i < store.size(); ++i) {
    result.hits.push_back({store.documents()[i].pmid, cosine_unit(q, doc_vectors[i])});
  }
  sort_hits(result.hits);
  result.hits.resize(std::min<std::size_t>(result.hits.size(), static_cast<std::size_t>(cfg.top_k)));
  return result;
}

Retriever::Retriever(const DocumentStore& store, const CorpusIndex* index,
                     EmbeddingClient* embedder, EmbeddingCache* cache)
    : store_(&store), index_(index), embedder_(embedder), cache_(cache) {
  if (!cache_) {
    own_cache_ = std::make_unique<EmbeddingCache>();
    cache_ = own_cache_.get();
  }
  if (index_) {
    if (index_->doc_count() != store.size()) {
      throw Error(ErrorCode::kIndexMismatch,
                  "index covers " + std::to_string(index_->doc_count()) + " documents, store has " +
                      std::to_string(store.size()));
    }
    for (const auto& pmid : index_->pmids()) {
      if (!store.find(pmid)) {
        throw Error(ErrorCode::kIndexMismatch, "indexed pmid '" + pmid + "' is not in the store");
      }
    }
  }
}

ScoredRetrieval Retriever::retrieve(std::string_view query, const RetrievalConfig& cfg) const {
  switch (cfg.mode) {
    case RetrievalMode::kTfidf:
      if (!index_) throw Error(ErrorCode::kIndexMissing, "tfidf retrieval needs an index");
      return top_k(query, cfg, *index_);
    case RetrievalMode::kDense:
      if (!embedder_) throw Error(ErrorCode::kConfigError, "dense retrieval needs an embedder");
      return dense_top_k(query, cfg, *store_, *embedder_, *cache_);
    case RetrievalMode::kRandom:
      return random_top_k(cfg, *store_, fnv1a64(query));
  }
  throw Error(ErrorCode::kConfigError, "unknown retrieval mode");
}

}  // namespace kailin
