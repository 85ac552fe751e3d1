// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#include "kailin/distill.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "kailin/error.hpp"

namespace kailin::distill {
namespace {

using ordered_json = nlohmann::ordered_json;

void check_cancel(const std::atomic<bool>* cancel) {
  if (cancel && cancel->load()) throw Error(ErrorCode::kCancelled, "interrupted");
}

std::vector<const Document*> resolve_hits(const ScoredRetrieval& r, const DocumentStore& store) {
  std::vector<const Document*> docs;
  docs.reserve(r.hits.size());
  for (const auto& h : r.hits) docs.push_back(&store.at(h.pmid));
  return docs;
}

struct Candidate {
  std::string generator;
  std::string text;
  double score = 0.0;
};

template <typename F>
auto parse_lines(std::istream& in, F&& per_line) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      per_line(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

QueryMode parse_query_mode(std::string_view name) {
  if (name == "question") return QueryMode::kQuestionOnly;
  if (name == "question+source") return QueryMode::kQuestionWithSource;
  throw Error(ErrorCode::kConfigError, "unknown query mode '" + std::string(name) + "'");
}

std::string_view to_string(QueryMode mode) {
  return mode == QueryMode::kQuestionOnly ? "question" : "question+source";
}

double score_collection(const Document& source, const std::vector<const Document*>& retrieved,
                        const scoring::ScorerConfig& scorer, const ScoringContext& ctx) {
  switch (scorer.kind) {
    case scoring::ScorerKind::kMeshHierarchy: {
      if (!ctx.ontology) throw Error(ErrorCode::kConfigError, "mesh scorer needs an ontology");
      const scoring::HierarchyScorer hs(*ctx.ontology, scorer.term, ctx.ic);
      return hs.collection_score(source, retrieved);
    }
    case scoring::ScorerKind::kTfidf:
      if (!ctx.index) throw Error(ErrorCode::kIndexMissing, "tfidf scorer needs an index");
      return scoring::tfidf_collection_score(source, retrieved, *ctx.index);
    case scoring::ScorerKind::kNull:
      if (retrieved.empty()) throw Error(ErrorCode::kEmptyCollection, "no retrieved documents");
      return 0.0;
  }
  return 0.0;
}

PreferenceRun build_preference_pairs(const DocumentStore& store, const ScoringContext& ctx,
                                     const Retriever& retriever, llm::Gateway& gateway,
                                     const PreferenceOptions& options) {
  if (options.generators[0].empty() || options.generators[1].empty() ||
      options.generators[0] == options.generators[1]) {
    throw Error(ErrorCode::kConfigError, "two distinct generator ids are required");
  }
  if (options.candidates_per_model < 1) {
    throw Error(ErrorCode::kConfigError, "candidates_per_model must be >= 1");
  }
  if (options.scorer.kind == scoring::ScorerKind::kMeshHierarchy && !ctx.ontology) {
    throw Error(ErrorCode::kConfigError, "mesh scorer needs an ontology");
  }
  if (options.scorer.kind == scoring::ScorerKind::kTfidf && !ctx.index) {
    throw Error(ErrorCode::kIndexMissing, "tfidf scorer needs an index");
  }
  if (options.scorer.tie_margin < 0.0 || !std::isfinite(options.scorer.tie_margin)) {
    throw Error(ErrorCode::kConfigError, "tie_margin must be finite and >= 0");
  }

  PreferenceRun run;
  auto& stats = run.stats;
  const auto& docs = store.documents();
  const std::size_t per_doc = 2 * static_cast<std::size_t>(options.candidates_per_model);
  // Generation fans out through the gateway in chunks so an interrupt is
  // noticed between chunks.
  const std::size_t chunk_docs =
      std::max<std::size_t>(1, 4 * static_cast<std::size_t>(gateway.config().max_in_flight));
  double margin_sum = 0.0;

  for (std::size_t begin = 0; begin < docs.size(); begin += chunk_docs) {
    check_cancel(options.cancel);
    const std::size_t end = std::min(docs.size(), begin + chunk_docs);
    std::vector<llm::ChatRequest> requests;
    for (std::size_t i = begin; i < end; ++i) {
      // A template that cannot render fails every document, so it throws.
      const std::string prompt = llm::render_question_prompt(docs[i], options.question_template);
      for (const auto& gen : options.generators) {
        for (int c = 0; c < options.candidates_per_model; ++c) {
          llm::ChatRequest req{gen, prompt, std::nullopt};
          if (c > 0) req.seed = gateway.config().seed.value_or(0) + static_cast<std::uint64_t>(c);
          requests.push_back(std::move(req));
        }
      }
    }
    const auto results = gateway.batch(requests);

    for (std::size_t i = begin; i < end; ++i) {
      const Document& doc = docs[i];
      ++stats.documents_processed;
      try {
        std::vector<Candidate> candidates;
        for (std::size_t r = 0; r < per_doc; ++r) {
          const auto& res = results[(i - begin) * per_doc + r];
          if (!res.ok()) throw *res.error;
          std::string text = *res.text;
          const auto first = text.find_first_not_of(" \t\r\n");
          const auto last = text.find_last_not_of(" \t\r\n");
          text = text.substr(first, last - first + 1);
          candidates.push_back({requests[(i - begin) * per_doc + r].model, std::move(text), 0.0});
        }
        for (auto& cand : candidates) {
          const std::string query = options.query_mode == QueryMode::kQuestionOnly
                                        ? cand.text
                                        : cand.text + "\n" + document_text(doc);
          const auto retrieved = retriever.retrieve(query, options.retrieval);
          cand.score = score_collection(doc, resolve_hits(retrieved, store), options.scorer, ctx);
        }
        // Highest and lowest score; earlier candidates win exact ties.
        const Candidate* best = &candidates.front();
        const Candidate* worst = &candidates.front();
        for (const auto& cand : candidates) {
          if (cand.score > best->score) best = &cand;
          if (cand.score < worst->score) worst = &cand;
        }
        if (!(best->score > worst->score + options.scorer.tie_margin) || best->text == worst->text) {
          ++stats.pairs_skipped_tie;
          continue;
        }
        PreferencePair pair;
        pair.prompt = requests[(i - begin) * per_doc].prompt;
        pair.chosen = best->text;
        pair.rejected = worst->text;
        pair.score_chosen = best->score;
        pair.score_rejected = worst->score;
        pair.source_pmid = doc.pmid;
        pair.generator_chosen = best->generator;
        pair.generator_rejected = worst->generator;
        pair.scorer_kind = std::string(scoring::to_string(options.scorer.kind));
        pair.template_id = options.question_template.id;
        pair.tie_margin = options.scorer.tie_margin;
        margin_sum += pair.score_chosen - pair.score_rejected;
        ++stats.wins[pair.generator_chosen];
        ++stats.pairs_emitted;
        run.pairs.push_back(std::move(pair));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kConfigError || e.code() == ErrorCode::kIndexMissing ||
            e.code() == ErrorCode::kIndexMismatch) {
          throw;
        }
        ++stats.failures;
        stats.failure_reasons.push_back(doc.pmid + ": " + e.what());
      }
    }
  }
  for (const auto& gen : options.generators) stats.wins.try_emplace(gen, 0);
  stats.mean_margin = stats.pairs_emitted ? margin_sum / static_cast<double>(stats.pairs_emitted) : 0.0;
  // Documents are visited in pmid order already; keep the guarantee explicit.
  std::stable_sort(run.pairs.begin(), run.pairs.end(),
                   [](const auto& a, const auto& b) { return a.source_pmid < b.source_pmid; });
  return run;
}

std::string render_contexts(const std::vector<const Document*>& docs) {
  std::string out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (i > 0) out += kContextDelimiter;
    out += docs[i]->title;
    out += '\n';
    out += docs[i]->abstract;
  }
  return out;
}

DistillRun assemble_distilled(const std::vector<QuestionRecord>& questions,
                              const DocumentStore& store, const Retriever& retriever,
                              const RetrievalConfig& cfg, const llm::PromptTemplate& tmpl,
                              const std::atomic<bool>* cancel) {
  if (!tmpl.references("context") || !tmpl.references("question")) {
    throw Error(ErrorCode::kTemplateRenderError,
                "distill template '" + tmpl.id + "' needs {context} and {question}");
  }
  DistillRun run;
  for (const auto& q : questions) {
    check_cancel(cancel);
    ++run.questions_processed;
    ScoredRetrieval retrieved;
    try {
      retrieved = retriever.retrieve(q.question, cfg);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyQuery) throw;
      retrieved = {};
    }
    if (retrieved.hits.empty()) {
      ++run.skipped_empty_retrieval;
      continue;
    }
    const auto docs = resolve_hits(retrieved, store);
    DistilledExample ex;
    ex.question = q.question;
    ex.source_pmid = q.source_pmid;
    for (const auto& h : retrieved.hits) ex.context_pmids.push_back(h.pmid);
    ex.rendered_text = tmpl.render({{"context", render_contexts(docs)}, {"question", q.question}});
    run.examples.push_back(std::move(ex));
  }
  std::stable_sort(run.examples.begin(), run.examples.end(),
                   [](const auto& a, const auto& b) { return a.source_pmid < b.source_pmid; });
  return run;
}

// ---------------------------------------------------------------------------
// Files

void write_pairs(const std::vector<PreferencePair>& pairs, std::ostream& out) {
  for (const auto& p : pairs) {
    ordered_json j;
    j["prompt"] = p.prompt;
    j["chosen"] = p.chosen;
    j["rejected"] = p.rejected;
    j["score_chosen"] = p.score_chosen;
    j["score_rejected"] = p.score_rejected;
    j["meta"] = {{"source_pmid", p.source_pmid},
                 {"generator_chosen", p.generator_chosen},
                 {"generator_rejected", p.generator_rejected},
                 {"scorer_kind", p.scorer_kind},
                 {"template_id", p.template_id},
                 {"tie_margin", p.tie_margin}};
    out << j.dump() << '\n';
  }
}

std::vector<PreferencePair> read_pairs(std::istream& in) {
  std::vector<PreferencePair> pairs;
  parse_lines(in, [&](const nlohmann::json& j) {
    PreferencePair p;
    p.prompt = j.at("prompt").get<std::string>();
    p.chosen = j.at("chosen").get<std::string>();
    p.rejected = j.at("rejected").get<std::string>();
    p.score_chosen = j.at("score_chosen").get<double>();
    p.score_rejected = j.at("score_rejected").get<double>();
    const auto& meta = j.at("meta");
    p.source_pmid = meta.at("source_pmid").get<std::string>();
    p.generator_chosen = meta.at("generator_chosen").get<std::string>();
    p.generator_rejected = meta.at("generator_rejected").get<std::string>();
    p.scorer_kind = meta.at("scorer_kind").get<std::string>();
    p.template_id = meta.at("template_id").get<std::string>();
    p.tie_margin = meta.at("tie_margin").get<double>();
    pairs.push_back(std::move(p));
  });
  return pairs;
}

void write_distilled(const std::vector<DistilledExample>& examples, std::ostream& out) {
  for (const auto& e : examples) {
    ordered_json j;
    j["text"] = e.rendered_text;
    j["meta"] = {{"source_pmid", e.source_pmid},
                 {"context_pmids", e.context_pmids},
                 {"question", e.question}};
    out << j.dump() << '\n';
  }
}

std::vector<DistilledExample> read_distilled(std::istream& in) {
  std::vector<DistilledExample> out;
  parse_lines(in, [&](const nlohmann::json& j) {
    DistilledExample e;
    e.rendered_text = j.at("text").get<std::string>();
    const auto& meta = j.at("meta");
    e.source_pmid = meta.at("source_pmid").get<std::string>();
    e.context_pmids = meta.at("context_pmids").get<std::vector<std::string>>();
    e.question = meta.at("question").get<std::string>();
    out.push_back(std::move(e));
  });
  return out;
}

void write_questions(const std::vector<llm::QuestionCandidate>& questions, std::ostream& out) {
  for (const auto& q : questions) {
    ordered_json j;
    j["source_pmid"] = q.source_pmid;
    j["generator_id"] = q.generator_id;
    j["text"] = q.text;
    j["template_id"] = q.template_id;
    out << j.dump() << '\n';
  }
}

std::vector<llm::QuestionCandidate> read_questions(std::istream& in) {
  std::vector<llm::QuestionCandidate> out;
  parse_lines(in, [&](const nlohmann::json& j) {
    out.push_back({j.at("source_pmid").get<std::string>(), j.value("generator_id", ""),
                   j.at("text").get<std::string>(), j.value("template_id", "")});
  });
  return out;
}

PairFileCheck check_pair_file(std::istream& in) {
  PairFileCheck check;
  std::string line;
  std::string previous_pmid;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ++check.records;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      for (const char* key : {"prompt", "chosen", "rejected"}) {
        if (!j.at(key).is_string()) throw std::invalid_argument(std::string(key) + " is not a string");
      }
      for (const char* key : {"score_chosen", "score_rejected"}) {
        if (!j.at(key).is_number()) throw std::invalid_argument(std::string(key) + " is not a number");
      }
      const auto& meta = j.at("meta");
      const std::string pmid = meta.at("source_pmid").get<std::string>();
      const double margin = meta.at("tie_margin").get<double>();
      const double chosen = j["score_chosen"].get<double>();
      const double rejected = j["score_rejected"].get<double>();
      if (!(chosen > rejected + margin)) {
        ++check.margin_violations;
        check.problems.push_back(where + "score_chosen does not exceed score_rejected + tie_margin");
      }
      if (j["chosen"] == j["rejected"]) {
        ++check.margin_violations;
        check.problems.push_back(where + "chosen equals rejected");
      }
      if (pmid < previous_pmid) {
        check.sorted = false;
        check.problems.push_back(where + "records not sorted by source_pmid");
      }
      previous_pmid = pmid;
    } catch (const std::exception& e) {
      ++check.schema_errors;
      check.problems.push_back(where + e.what());
    }
  }
  return check;
}

}  // namespace kailin::distill
