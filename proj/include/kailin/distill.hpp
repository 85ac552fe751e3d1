// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#pragma once

#include <array>
#include <atomic>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "kailin/corpus.hpp"
#include "kailin/llm.hpp"
#include "kailin/mesh.hpp"
#include "kailin/retrieval.hpp"
#include "kailin/scoring.hpp"

namespace kailin::distill {

struct PreferencePair {
  std::string prompt;
  std::string chosen;
  std::string rejected;
  double score_chosen = 0.0;
  double score_rejected = 0.0;
  std::string source_pmid;
  std::string generator_chosen;
  std::string generator_rejected;
  std::string scorer_kind;
  std::string template_id;
  double tie_margin = 0.0;

  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

struct DistillStats {
  std::size_t documents_processed = 0;
  std::size_t pairs_emitted = 0;
  std::size_t pairs_skipped_tie = 0;
  std::size_t failures = 0;
  double mean_margin = 0.0;
  std::map<std::string, std::size_t> wins;  // generator id -> times chosen
  std::vector<std::string> failure_reasons;  // "pmid: message"
};

/// How a candidate question is turned into a retrieval query.
enum class QueryMode { kQuestionOnly, kQuestionWithSource };

QueryMode parse_query_mode(std::string_view name);  // "question" | "question+source"
std::string_view to_string(QueryMode mode);

struct PreferenceOptions {
  std::array<std::string, 2> generators;
  int candidates_per_model = 1;
  RetrievalConfig retrieval;
  scoring::ScorerConfig scorer;
  llm::PromptTemplate question_template = llm::default_question_template();
  QueryMode query_mode = QueryMode::kQuestionOnly;
  const std::atomic<bool>* cancel = nullptr;
};

/// What the scorers need. `ontology` is required for the mesh scorer and
/// `index` for the tfidf scorer; `ic` only for Lin/Resnik metrics.
struct ScoringContext {
  const mesh::MeshOntology* ontology = nullptr;
  const mesh::InformationContent* ic = nullptr;
  const CorpusIndex* index = nullptr;
};

struct PreferenceRun {
  std::vector<PreferencePair> pairs;  // ascending source pmid
  DistillStats stats;
};

/// The selection loop. For every document: one candidate question per
/// generator (times candidates_per_model), top-k retrieval per candidate,
/// a score of the retrieved collection against the source document, and a
/// pair (highest vs lowest score) unless the gap is within tie_margin.
/// Per-document failures are counted and skipped; configuration problems
/// throw.
PreferenceRun build_preference_pairs(const DocumentStore& store, const ScoringContext& scoring,
                                     const Retriever& retriever, llm::Gateway& gateway,
                                     const PreferenceOptions& options);

/// Score of one retrieved collection for `source` under a scorer kind.
double score_collection(const Document& source, const std::vector<const Document*>& retrieved,
                        const scoring::ScorerConfig& scorer, const ScoringContext& ctx);

// ---------------------------------------------------------------------------
// Distilled pretraining examples

struct QuestionRecord {
  std::string source_pmid;
  std::string question;
};

struct DistilledExample {
  std::string question;
  std::vector<std::string> context_pmids;  // retrieval order
  std::string rendered_text;
  std::string source_pmid;

  friend bool operator==(const DistilledExample&, const DistilledExample&) = default;
};

struct DistillRun {
  std::vector<DistilledExample> examples;  // ascending source pmid
  std::size_t questions_processed = 0;
  std::size_t skipped_empty_retrieval = 0;
  std::size_t failures = 0;
};

/// Line separating rendered context blocks.
inline constexpr std::string_view kContextDelimiter = "\n----\n";

/// Context blocks ("title\nabstract", retrieval order) joined by the
/// delimiter.
std::string render_contexts(const std::vector<const Document*>& docs);

DistillRun assemble_distilled(const std::vector<QuestionRecord>& questions,
                              const DocumentStore& store, const Retriever& retriever,
                              const RetrievalConfig& cfg, const llm::PromptTemplate& tmpl,
                              const std::atomic<bool>* cancel = nullptr);

// ---------------------------------------------------------------------------
// Files (one JSON object per line, newline-terminated)

void write_pairs(const std::vector<PreferencePair>& pairs, std::ostream& out);
std::vector<PreferencePair> read_pairs(std::istream& in);  // throws kMalformedRecord
void write_distilled(const std::vector<DistilledExample>& examples, std::ostream& out);
std::vector<DistilledExample> read_distilled(std::istream& in);

void write_questions(const std::vector<llm::QuestionCandidate>& questions, std::ostream& out);
std::vector<llm::QuestionCandidate> read_questions(std::istream& in);

/// Result of validating a preference file on its own.
struct PairFileCheck {
  std::size_t records = 0;
  std::size_t schema_errors = 0;
  std::size_t margin_violations = 0;
  bool sorted = true;
  std::vector<std::string> problems;
  bool ok() const { return schema_errors == 0 && margin_violations == 0 && sorted; }
};

/// Checks schema, score_chosen > score_rejected + meta.tie_margin for every
/// record, chosen != rejected, and ascending source pmid order.
PairFileCheck check_pair_file(std::istream& in);

}  // namespace kailin::distill
