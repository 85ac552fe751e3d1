// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kailin/corpus.hpp"
#include "kailin/transport.hpp"

namespace kailin {

using Embedding = std::vector<double>;

class EmbeddingClient {
 public:
  virtual ~EmbeddingClient() = default;
  /// One service call per text. Throws Error(kEmbeddingServiceError).
  virtual Embedding embed(std::string_view model, std::string_view text) = 0;
};

/// Deterministic offline embedder: SHA-256 of (model, text) expanded to
/// `dim` components in [-1, 1], then unit-normalized. Identical texts map to
/// identical vectors. Counts calls for cache-contract checks.
class MockEmbedder final : public EmbeddingClient {
 public:
  explicit MockEmbedder(std::size_t dim = 32) : dim_(dim) {}

  Embedding embed(std::string_view model, std::string_view text) override;

  std::size_t calls() const { return calls_.load(); }
  /// Optional per-text dimensionality override (for mismatch tests).
  void set_dimension_hook(std::function<std::size_t(std::string_view)> hook) {
    dim_hook_ = std::move(hook);
  }

 private:
  std::size_t dim_;
  std::atomic<std::size_t> calls_{0};
  std::function<std::size_t(std::string_view)> dim_hook_;
};

/// Embeddings endpoint client ({model, input} -> data[0].embedding).
class HttpEmbeddingClient final : public EmbeddingClient {
 public:
  HttpEmbeddingClient(std::shared_ptr<Transport> transport, std::string api_key,
                      std::chrono::milliseconds timeout = std::chrono::seconds(60));
  Embedding embed(std::string_view model, std::string_view text) override;

 private:
  std::shared_ptr<Transport> transport_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

/// Document embeddings keyed by (model id, SHA-256 of content). Held in
/// memory and, when a directory is given, persisted as one file per key.
/// Concurrent lookups share a lock; inserts are serialized.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  explicit EmbeddingCache(std::filesystem::path directory);

  std::optional<Embedding> get(std::string_view model, std::string_view text) const;
  void put(std::string_view model, std::string_view text, const Embedding& value);
  std::size_t size() const;

  static std::string key(std::string_view model, std::string_view text);

 private:
  std::optional<std::filesystem::path> directory_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::string, Embedding> memory_;
};

/// Cosine over unit-normalized embeddings of query vs. each document's text.
/// Same ordering contract as lexical top_k. Throws kDimensionMismatch when
/// vectors disagree in length.
ScoredRetrieval dense_top_k(std::string_view query, const RetrievalConfig& cfg,
                            const DocumentStore& store, EmbeddingClient& embedder,
                            EmbeddingCache& cache);

/// Dispatches a query to the configured retrieval mode. Holds non-owning
/// references; the store, index and embedder must outlive it.
class Retriever {
 public:
  Retriever(const DocumentStore& store, const CorpusIndex* index,
            EmbeddingClient* embedder = nullptr, EmbeddingCache* cache = nullptr);

  /// Throws kIndexMissing (tfidf without an index), kConfigError (dense
  /// without embedder or model), plus the errors of the chosen mode.
  ScoredRetrieval retrieve(std::string_view query, const RetrievalConfig& cfg) const;

  const DocumentStore& store() const { return *store_; }
  const CorpusIndex* index() const { return index_; }

 private:
  const DocumentStore* store_;
  const CorpusIndex* index_;
  EmbeddingClient* embedder_;
  EmbeddingCache* cache_;
  std::unique_ptr<EmbeddingCache> own_cache_;
};

}  // namespace kailin
