// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kailin {

struct Document {
  std::string pmid;
  std::string title;
  std::string abstract;
  std::vector<std::string> mesh_uis;
  std::optional<int> pub_year;

  friend bool operator==(const Document&, const Document&) = default;
};

/// Immutable collection of documents keyed by pmid. Iteration order is
/// ascending pmid (lexicographic).
class DocumentStore {
 public:
  DocumentStore() = default;
  explicit DocumentStore(std::vector<Document> docs);  // throws kDuplicatePmid

  const Document* find(std::string_view pmid) const;
  const Document& at(std::string_view pmid) const;  // throws kDocumentNotIndexed
  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  const std::vector<Document>& documents() const { return docs_; }

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> by_pmid_;
};

/// Reads one JSON object per line with keys pmid, title, abstract, mesh_uis
/// and optional pub_year. Throws kMalformedRecord (with line number) or
/// kDuplicatePmid.
DocumentStore ingest(std::istream& source);
DocumentStore ingest_file(const std::filesystem::path& path);
void write_corpus_jsonl(const DocumentStore& store, std::ostream& out);

/// Annotation count per descriptor ui over the store.
std::map<std::string, std::uint64_t, std::less<>> annotation_frequencies(const DocumentStore& store);

// ---------------------------------------------------------------------------
// Tokenizer and TF-IDF index
// ---------------------------------------------------------------------------

/// Lowercases, splits on anything that is not ASCII alphanumeric, drops
/// tokens shorter than two characters. No stemming, no stop words.
std::vector<std::string> tokenize(std::string_view text);

/// Identifies the tokenizer rules; persisted with the index.
std::string tokenizer_fingerprint();

/// The text a document contributes to lexical and dense retrieval.
std::string document_text(const Document& doc);

struct Posting {
  std::string pmid;
  std::uint32_t tf;
  friend bool operator==(const Posting&, const Posting&) = default;
};

struct TermEntry {
  std::uint32_t df = 0;
  std::vector<Posting> postings;  // ascending pmid
  friend bool operator==(const TermEntry&, const TermEntry&) = default;
};

/// Sparse TF-IDF vector: (term, weight) sorted by term.
using SparseVector = std::vector<std::pair<std::string, double>>;

/// Inverted TF-IDF index. Weights are tf * idf with raw counts and
/// idf(t) = ln((N + 1) / (df(t) + 1)) + 1.
class CorpusIndex {
 public:
  CorpusIndex() = default;

  std::size_t doc_count() const { return doc_count_; }
  const std::map<std::string, TermEntry, std::less<>>& vocabulary() const { return vocab_; }
  const std::map<std::string, double, std::less<>>& norms() const { return norms_; }
  const std::string& fingerprint() const { return fingerprint_; }
  const std::vector<std::string>& pmids() const { return pmids_; }

  bool contains(std::string_view pmid) const;
  double idf(std::string_view term) const;  // 0 for unknown terms
  std::optional<double> norm(std::string_view pmid) const;

  /// Weighted vector for an indexed document. Throws kDocumentNotIndexed.
  SparseVector document_vector(std::string_view pmid) const;
  /// Query weights: query tf times corpus idf; out-of-vocabulary terms drop.
  SparseVector query_vector(std::string_view text) const;

  void save(std::ostream& out) const;
  /// Throws kIndexMismatch if the stored tokenizer fingerprint differs.
  static CorpusIndex load(std::istream& in);

  friend CorpusIndex build_index(const DocumentStore& store);

 private:
  void finalize();

  std::size_t doc_count_ = 0;
  std::vector<std::string> pmids_;  // ascending
  std::map<std::string, TermEntry, std::less<>> vocab_;
  std::map<std::string, double, std::less<>> norms_;
  std::string fingerprint_;
  // pmid -> (term, tf) in term order; derived from postings
  std::unordered_map<std::string, std::vector<std::pair<std::string, std::uint32_t>>> forward_;
};

CorpusIndex build_index(const DocumentStore& store);  // throws kEmptyStore
void save_index_file(const CorpusIndex& index, const std::filesystem::path& path);
CorpusIndex load_index_file(const std::filesystem::path& path);

double dot(const SparseVector& a, const SparseVector& b);
double l2_norm(const SparseVector& v);

// ---------------------------------------------------------------------------
// Retrieval
// ---------------------------------------------------------------------------

enum class RetrievalMode { kTfidf, kDense, kRandom };

std::string_view to_string(RetrievalMode mode);
RetrievalMode parse_retrieval_mode(std::string_view name);  // throws kConfigError

struct RetrievalConfig {
  int top_k = 4;
  RetrievalMode mode = RetrievalMode::kTfidf;
  std::uint64_t seed = 42;
  std::string embedding_model;
};

struct Hit {
  std::string pmid;
  double score = 0.0;
  friend bool operator==(const Hit&, const Hit&) = default;
};

struct ScoredRetrieval {
  std::string query_fingerprint;
  std::vector<Hit> hits;
};

/// Orders hits by score descending, ties (scores equal at 1e-12 resolution)
/// by ascending pmid.
void sort_hits(std::vector<Hit>& hits);

/// Lexical retrieval: cosine between the query vector and each document
/// vector. An all-out-of-vocabulary query yields no hits; otherwise exactly
/// min(top_k, N) hits. Throws kEmptyQuery when the query has no tokens.
ScoredRetrieval top_k(std::string_view query, const RetrievalConfig& cfg,
                      const CorpusIndex& index);

/// Uniform sample without replacement of min(top_k, N) pmids; scores are 0
/// and hits keep the sampled order. `salt` is mixed into the seed.
ScoredRetrieval random_top_k(const RetrievalConfig& cfg, const DocumentStore& store,
                             std::uint64_t salt = 0);

}  // namespace kailin
