// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#include "kailin/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kailin/digest.hpp"
#include "kailin/error.hpp"

namespace kailin {
namespace {

constexpr std::string_view kIndexMagic = "kailin-tfidf-index v1";

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

Document parse_document_line(const std::string& line, std::size_t line_no) {
  const std::string where = "line " + std::to_string(line_no);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, where + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kMalformedRecord, where + ": not an object");
  for (const char* key : {"pmid", "title", "abstract"}) {
    if (!j.contains(key) || !j[key].is_string()) {
      throw Error(ErrorCode::kMalformedRecord, where + ": missing string field '" + key + "'");
    }
  }
  Document d;
  d.pmid = j["pmid"].get<std::string>();
  if (d.pmid.empty()) throw Error(ErrorCode::kMalformedRecord, where + ": empty pmid");
  d.title = j["title"].get<std::string>();
  d.abstract = j["abstract"].get<std::string>();
  if (!j.contains("mesh_uis") || !j["mesh_uis"].is_array()) {
    throw Error(ErrorCode::kMalformedRecord, where + ": missing array field 'mesh_uis'");
  }
  for (const auto& ui : j["mesh_uis"]) {
    if (!ui.is_string()) throw Error(ErrorCode::kMalformedRecord, where + ": non-string mesh ui");
    auto s = ui.get<std::string>();
    if (std::find(d.mesh_uis.begin(), d.mesh_uis.end(), s) == d.mesh_uis.end()) {
      d.mesh_uis.push_back(std::move(s));
    }
  }
  if (j.contains("pub_year") && !j["pub_year"].is_null()) {
    if (!j["pub_year"].is_number_integer()) {
      throw Error(ErrorCode::kMalformedRecord, where + ": pub_year must be an integer");
    }
    d.pub_year = j["pub_year"].get<int>();
  }
  return d;
}

// Unbiased draw in [0, bound) from a 64-bit engine.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

// ---------------------------------------------------------------------------
// DocumentStore

DocumentStore::DocumentStore(std::vector<Document> docs) : docs_(std::move(docs)) {
  std::sort(docs_.begin(), docs_.end(),
            [](const Document& a, const Document& b) { return a.pmid < b.pmid; });
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    if (!by_pmid_.emplace(docs_[i].pmid, i).second) {
      throw Error(ErrorCode::kDuplicatePmid, "'" + docs_[i].pmid + "'");
    }
  }
}

const Document* DocumentStore::find(std::string_view pmid) const {
  const auto it = by_pmid_.find(std::string(pmid));
  return it == by_pmid_.end() ? nullptr : &docs_[it->second];
}

const Document& DocumentStore::at(std::string_view pmid) const {
  if (const auto* d = find(pmid)) return *d;
  throw Error(ErrorCode::kDocumentNotIndexed, "pmid '" + std::string(pmid) + "' not in store");
}

DocumentStore ingest(std::istream& source) {
  std::vector<Document> docs;
  std::set<std::string, std::less<>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (blank(line)) continue;
    Document d = parse_document_line(line, line_no);
    if (!seen.insert(d.pmid).second) {
      throw Error(ErrorCode::kDuplicatePmid, "'" + d.pmid + "' (line " + std::to_string(line_no) + ")");
    }
    docs.push_back(std::move(d));
  }
  return DocumentStore(std::move(docs));
}

DocumentStore ingest_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open corpus " + path.string());
  return ingest(in);
}

void write_corpus_jsonl(const DocumentStore& store, std::ostream& out) {
  for (const auto& d : store.documents()) {
    nlohmann::ordered_json j;
    j["pmid"] = d.pmid;
    j["title"] = d.title;
    j["abstract"] = d.abstract;
    j["mesh_uis"] = d.mesh_uis;
    if (d.pub_year) {
      j["pub_year"] = *d.pub_year;
    } else {
      j["pub_year"] = nullptr;
    }
    out << j.dump() << '\n';
  }
}

std::map<std::string, std::uint64_t, std::less<>> annotation_frequencies(const DocumentStore& store) {
  std::map<std::string, std::uint64_t, std::less<>> freq;
  for (const auto& d : store.documents()) {
    for (const auto& ui : d.mesh_uis) ++freq[ui];
  }
  return freq;
}

// ---------------------------------------------------------------------------
// Tokenizer

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&]() {
    if (current.size() >= 2) out.push_back(current);
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::string tokenizer_fingerprint() {
  return "ascii-alnum-split;lowercase;min-len=2;no-stem;no-stopwords";
}

std::string document_text(const Document& doc) {
  return doc.title + "\n" + doc.abstract;
}

// ---------------------------------------------------------------------------
// CorpusIndex

CorpusIndex build_index(const DocumentStore& store) {
  if (store.empty()) throw Error(ErrorCode::kEmptyStore, "cannot index an empty store");
  CorpusIndex index;
  index.doc_count_ = store.size();
  index.fingerprint_ = tokenizer_fingerprint();
  for (const auto& doc : store.documents()) {  // ascending pmid
    index.pmids_.push_back(doc.pmid);
    std::map<std::string, std::uint32_t> counts;
    for (auto& tok : tokenize(document_text(doc))) ++counts[std::move(tok)];
    for (const auto& [term, tf] : counts) {
      auto& entry = index.vocab_[term];
      ++entry.df;
      entry.postings.push_back({doc.pmid, tf});
    }
  }
  index.finalize();
  return index;
}

void CorpusIndex::finalize() {
  forward_.clear();
  norms_.clear();
  for (const auto& [term, entry] : vocab_) {
    for (const auto& p : entry.postings) forward_[p.pmid].emplace_back(term, p.tf);
  }
  for (const auto& [pmid, terms] : forward_) {
    double sq = 0.0;
    for (const auto& [term, tf] : terms) {
      const double w = tf * idf(term);
      sq += w * w;
    }
    norms_.emplace(pmid, std::sqrt(sq));
  }
}

bool CorpusIndex::contains(std::string_view pmid) const {
  return std::binary_search(pmids_.begin(), pmids_.end(), pmid);
}

double CorpusIndex::idf(std::string_view term) const {
  const auto it = vocab_.find(term);
  if (it == vocab_.end()) return 0.0;
  return std::log((static_cast<double>(doc_count_) + 1.0) / (it->second.df + 1.0)) + 1.0;
}

std::optional<double> CorpusIndex::norm(std::string_view pmid) const {
  const auto it = norms_.find(pmid);
  if (it == norms_.end()) return std::nullopt;
  return it->second;
}

SparseVector CorpusIndex::document_vector(std::string_view pmid) const {
  if (!contains(pmid)) {
    throw Error(ErrorCode::kDocumentNotIndexed, "pmid '" + std::string(pmid) + "'");
  }
  SparseVector v;
  const auto it = forward_.find(std::string(pmid));
  if (it == forward_.end()) return v;
  v.reserve(it->second.size());
  for (const auto& [term, tf] : it->second) v.emplace_back(term, tf * idf(term));
  return v;
}

SparseVector CorpusIndex::query_vector(std::string_view text) const {
  std::map<std::string, std::uint32_t> counts;
  for (auto& tok : tokenize(text)) ++counts[std::move(tok)];
  SparseVector v;
  for (const auto& [term, tf] : counts) {
    const double w = idf(term);
    if (w > 0.0) v.emplace_back(term, tf * w);
  }
  return v;
}

// Line format, all sections in ascending key order:
//   kailin-tfidf-index v1
//   fingerprint\t<tokenizer fingerprint>
//   docs\t<N>
//   D\t<pmid>                       (N lines)
//   T\t<term>\t<df>\t<pmid>:<tf> ...  (one line per term)
void CorpusIndex::save(std::ostream& out) const {
  out << kIndexMagic << '\n';
  out << "fingerprint\t" << fingerprint_ << '\n';
  out << "docs\t" << doc_count_ << '\n';
  for (const auto& pmid : pmids_) out << "D\t" << pmid << '\n';
  for (const auto& [term, entry] : vocab_) {
    out << "T\t" << term << '\t' << entry.df;
    for (const auto& p : entry.postings) out << '\t' << p.pmid << ':' << p.tf;
    out << '\n';
  }
}

CorpusIndex CorpusIndex::load(std::istream& in) {
  auto fail = [](const std::string& what) {
    return Error(ErrorCode::kIndexMismatch, "index file: " + what);
  };
  std::string line;
  if (!std::getline(in, line) || line != kIndexMagic) throw fail("bad header");
  CorpusIndex index;
  if (!std::getline(in, line) || !line.starts_with("fingerprint\t")) throw fail("missing fingerprint");
  index.fingerprint_ = line.substr(std::string_view("fingerprint\t").size());
  if (index.fingerprint_ != tokenizer_fingerprint()) {
    throw Error(ErrorCode::kIndexMismatch, "tokenizer fingerprint '" + index.fingerprint_ +
                                               "' does not match '" + tokenizer_fingerprint() + "'");
  }
  if (!std::getline(in, line) || !line.starts_with("docs\t")) throw fail("missing doc count");
  index.doc_count_ = std::stoull(line.substr(5));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string tag;
    std::getline(fields, tag, '\t');
    if (tag == "D") {
      std::string pmid;
      std::getline(fields, pmid, '\t');
      index.pmids_.push_back(pmid);
    } else if (tag == "T") {
      std::string term, df, posting;
      std::getline(fields, term, '\t');
      std::getline(fields, df, '\t');
      TermEntry entry;
      entry.df = static_cast<std::uint32_t>(std::stoul(df));
      while (std::getline(fields, posting, '\t')) {
        const auto colon = posting.rfind(':');
        if (colon == std::string::npos) throw fail("bad posting for term " + term);
        entry.postings.push_back(
            {posting.substr(0, colon), static_cast<std::uint32_t>(std::stoul(posting.substr(colon + 1)))});
      }
      if (entry.df != entry.postings.size()) throw fail("df/postings disagree for term " + term);
      index.vocab_.emplace(std::move(term), std::move(entry));
    } else {
      throw fail("unknown line tag '" + tag + "'");
    }
  }
  if (index.pmids_.size() != index.doc_count_) throw fail("doc count mismatch");
  index.finalize();
  return index;
}

void save_index_file(const CorpusIndex& index, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  index.save(out);
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

CorpusIndex load_index_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIndexMissing, "cannot open index " + path.string());
  return CorpusIndex::load(in);
}

double dot(const SparseVector& a, const SparseVector& b) {
  double sum = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      sum += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return sum;
}

double l2_norm(const SparseVector& v) {
  double sq = 0.0;
  for (const auto& [t, w] : v) sq += w * w;
  return std::sqrt(sq);
}

// ---------------------------------------------------------------------------
// Retrieval

std::string_view to_string(RetrievalMode mode) {
  switch (mode) {
    case RetrievalMode::kTfidf: return "tfidf";
    case RetrievalMode::kDense: return "dense";
    case RetrievalMode::kRandom: return "random";
  }
  return "?";
}

RetrievalMode parse_retrieval_mode(std::string_view name) {
  if (name == "tfidf") return RetrievalMode::kTfidf;
  if (name == "dense") return RetrievalMode::kDense;
  if (name == "random") return RetrievalMode::kRandom;
  throw Error(ErrorCode::kConfigError, "unknown retriever '" + std::string(name) + "'");
}

void sort_hits(std::vector<Hit>& hits) {
  auto key = [](double score) { return std::llround(score * 1e12); };
  std::sort(hits.begin(), hits.end(), [&](const Hit& a, const Hit& b) {
    const auto ka = key(a.score);
    const auto kb = key(b.score);
    if (ka != kb) return ka > kb;
    return a.pmid < b.pmid;
  });
}

ScoredRetrieval top_k(std::string_view query, const RetrievalConfig& cfg,
                      const CorpusIndex& index) {
  if (cfg.top_k < 1) throw Error(ErrorCode::kConfigError, "top_k must be >= 1");
  if (tokenize(query).empty()) throw Error(ErrorCode::kEmptyQuery, "query has no indexable tokens");
  ScoredRetrieval result;
  result.query_fingerprint = sha256_hex(query);
  const SparseVector q = index.query_vector(query);
  const double qnorm = l2_norm(q);
  if (q.empty() || qnorm == 0.0) return result;

  std::unordered_map<std::string, double> acc;
  for (const auto& [term, qw] : q) {
    const auto& entry = index.vocabulary().find(term)->second;
    const double w = index.idf(term);
    for (const auto& p : entry.postings) acc[p.pmid] += qw * (p.tf * w);
  }
  result.hits.reserve(index.doc_count());
  for (const auto& pmid : index.pmids()) {
    double score = 0.0;
    if (const auto it = acc.find(pmid); it != acc.end()) {
      score = it->second / (qnorm * *index.norm(pmid));
    }
    result.hits.push_back({pmid, score});
  }
  sort_hits(result.hits);
  result.hits.resize(std::min<std::size_t>(result.hits.size(), static_cast<std::size_t>(cfg.top_k)));
  return result;
}

ScoredRetrieval random_top_k(const RetrievalConfig& cfg, const DocumentStore& store,
                             std::uint64_t salt) {
  if (store.empty()) throw Error(ErrorCode::kEmptyStore, "cannot sample from an empty store");
  if (cfg.top_k < 1) throw Error(ErrorCode::kConfigError, "top_k must be >= 1");
  std::vector<std::size_t> order(store.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.seed ^ salt);
  const std::size_t k = std::min<std::size_t>(store.size(), static_cast<std::size_t>(cfg.top_k));
  // Partial Fisher-Yates: the first k slots are the sample, in draw order.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + bounded(rng, store.size() - i);
    std::swap(order[i], order[j]);
  }
  ScoredRetrieval result;
  result.query_fingerprint = "random:" + std::to_string(cfg.seed) + ":" + to_hex(salt);
  for (std::size_t i = 0; i < k; ++i) result.hits.push_back({store.documents()[order[i]].pmid, 0.0});
  return result;
}

}  // namespace kailin
