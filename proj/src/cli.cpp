// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#include "kailin/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "kailin/corpus.hpp"
#include "kailin/digest.hpp"
#include "kailin/distill.hpp"
#include "kailin/error.hpp"
#include "kailin/eval.hpp"
#include "kailin/llm.hpp"
#include "kailin/mesh.hpp"
#include "kailin/retrieval.hpp"
#include "kailin/scoring.hpp"

namespace kailin::cli {
namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr FlagSpec kFlags[] = {
    {"--corpus", "paths.corpus", "Line-delimited document corpus"},
    {"--mesh", "paths.mesh", "MeSH descriptor file (ascii-bin, xml or jsonl)"},
    {"--mesh-format", "paths.mesh_format", "auto | ascii-bin | xml | jsonl"},
    {"--index", "paths.index", "TF-IDF index file (written by `index`, read by later stages)"},
    {"--out", "paths.out", "Output directory"},
    {"--cache", "paths.cache", "Embedding cache directory"},
    {"--questions", "paths.questions", "Question file (jsonl) used by `distill`"},
    {"--question-template", "paths.question_template", "Question-generation template file"},
    {"--distill-template", "paths.distill_template", "Distilled-text template file"},
    {"--benchmark", "paths.benchmark", "PubMedQA-layout benchmark JSON"},
    {"--answers", "paths.answers", "Stub answer file ({id, text} per line)"},
    {"--scorer", "scoring.scorer", "mesh | tfidf | null"},
    {"--metric", "scoring.metric", "wu-palmer | lin | resnik-normalized"},
    {"--aggregation", "scoring.aggregation", "mean | union"},
    {"--tie-margin", "scoring.tie_margin", "Minimum score gap for a preference pair"},
    {"--retriever", "retrieval.mode", "tfidf | dense | random"},
    {"--top-k", "retrieval.top_k", "Documents retrieved per query"},
    {"--embedding-model", "retrieval.embedding_model", "Embedding model id (dense retrieval)"},
    {"--embedder", "retrieval.embedder", "http | mock"},
    {"--query", "retrieval.query", "question | question+source"},
    {"--model-a", "generation.model_a", "First generator model id"},
    {"--model-b", "generation.model_b", "Second generator model id"},
    {"--candidates-per-model", "generation.candidates_per_model", "Questions sampled per generator"},
    {"--transport", "gateway.transport", "http | mock"},
    {"--base-url", "gateway.base_url", "Chat-completions base URL"},
    {"--max-in-flight", "gateway.max_in_flight", "Concurrent request bound"},
    {"--max-retries", "gateway.max_retries", "Retries for 429/5xx/transport failures"},
    {"--setting", "eval.setting", "reasoning-required | question-only"},
    {"--model", "eval.model", "Model answering benchmark items"},
    {"--slice-mesh", "eval.slice_mesh", "Comma-separated MeSH terms to slice by"},
    {"--slice-years", "eval.slice_years", "Disjoint year ranges, e.g. 2001-2004,2005-2007"},
    {"--seed", "run.seed", "Seed for sampling and generation"},
};

const std::map<std::string, std::vector<std::string>>& subcommand_flags() {
  static const std::vector<std::string> gateway = {"--transport", "--base-url", "--max-in-flight",
                                                   "--max-retries"};
  static const std::vector<std::string> retrieval = {"--index", "--cache", "--retriever", "--top-k",
                                                     "--embedding-model", "--embedder"};
  auto join = [](std::initializer_list<std::vector<std::string>> parts) {
    std::vector<std::string> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
  };
  static const std::map<std::string, std::vector<std::string>> table = {
      {"ingest", {"--corpus"}},
      {"index", {"--corpus", "--index"}},
      {"questions",
       join({{"--corpus", "--model-a", "--model-b", "--candidates-per-model", "--question-template"},
             gateway})},
      {"prefs", join({{"--corpus", "--mesh", "--mesh-format", "--scorer", "--metric", "--aggregation",
                       "--tie-margin", "--query", "--model-a", "--model-b", "--candidates-per-model",
                       "--question-template"},
                      retrieval, gateway})},
      {"distill", join({{"--corpus", "--questions", "--model-a", "--question-template",
                         "--distill-template"},
                        retrieval, gateway})},
      {"eval", join({{"--benchmark", "--setting", "--answers", "--model", "--slice-mesh",
                      "--slice-years"},
                     gateway})},
      {"report", {}},
  };
  return table;
}

const char* description(const std::string& sub) {
  if (sub == "ingest") return "Validate a corpus and write its canonical form";
  if (sub == "index") return "Build and persist the TF-IDF index";
  if (sub == "questions") return "Generate candidate questions per document";
  if (sub == "prefs") return "Build hierarchy-scored preference pairs";
  if (sub == "distill") return "Assemble distilled pretraining examples";
  if (sub == "eval") return "Evaluate answers on a PubMedQA-style benchmark";
  return "Validate output files and summarize manifests";
}

// ---------------------------------------------------------------------------
// Typed configuration

std::int64_t to_int(const Settings& s, const std::string& key) {
  const std::string& v = s.at(key);
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfigError, key + ": expected an integer, got '" + v + "'");
  }
}

double to_double(const Settings& s, const std::string& key) {
  const std::string& v = s.at(key);
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfigError, key + ": expected a number, got '" + v + "'");
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

struct RunConfig {
  Settings settings;
  bool verbose = false;
  fs::path out;
  std::uint64_t seed = 42;
  llm::GatewayConfig gateway;
  std::string transport;
  std::array<std::string, 2> generators;
  int candidates_per_model = 1;
  RetrievalConfig retrieval;
  std::string embedder;
  distill::QueryMode query_mode = distill::QueryMode::kQuestionOnly;
  scoring::ScorerConfig scorer;
  eval::Setting setting = eval::Setting::kReasoningRequired;

  fs::path path(const std::string& key) const { return settings.at("paths." + key); }
  bool has(const std::string& key) const { return !settings.at(key).empty(); }
};

RunConfig build_config(Settings settings, bool verbose) {
  RunConfig c;
  c.verbose = verbose;
  c.settings = std::move(settings);
  const Settings& s = c.settings;
  c.out = s.at("paths.out");
  if (c.out.empty()) throw Error(ErrorCode::kConfigError, "paths.out must be set");
  c.seed = static_cast<std::uint64_t>(to_int(s, "run.seed"));

  c.gateway.base_url = s.at("gateway.base_url");
  c.gateway.api_key_env = s.at("gateway.api_key_env");
  c.gateway.max_in_flight = static_cast<int>(to_int(s, "gateway.max_in_flight"));
  c.gateway.max_retries = static_cast<int>(to_int(s, "gateway.max_retries"));
  c.gateway.retry_base_delay = std::chrono::milliseconds(to_int(s, "gateway.retry_base_delay_ms"));
  c.gateway.timeout = std::chrono::milliseconds(to_int(s, "gateway.timeout_ms"));
  c.gateway.temperature = to_double(s, "gateway.temperature");
  c.gateway.max_tokens = static_cast<int>(to_int(s, "gateway.max_tokens"));
  c.gateway.seed = c.seed;
  c.gateway.verbose = verbose;
  if (c.gateway.max_in_flight < 1) throw Error(ErrorCode::kConfigError, "max_in_flight must be >= 1");
  if (c.gateway.max_retries < 0) throw Error(ErrorCode::kConfigError, "max_retries must be >= 0");
  c.transport = s.at("gateway.transport");
  if (c.transport != "http" && c.transport != "mock") {
    throw Error(ErrorCode::kConfigError, "gateway.transport must be http or mock");
  }

  c.generators = {s.at("generation.model_a"), s.at("generation.model_b")};
  c.candidates_per_model = static_cast<int>(to_int(s, "generation.candidates_per_model"));
  if (c.candidates_per_model < 1) throw Error(ErrorCode::kConfigError, "candidates_per_model must be >= 1");

  c.retrieval.mode = parse_retrieval_mode(s.at("retrieval.mode"));
  c.retrieval.top_k = static_cast<int>(to_int(s, "retrieval.top_k"));
  if (c.retrieval.top_k < 1) throw Error(ErrorCode::kConfigError, "top_k must be >= 1");
  c.retrieval.seed = c.seed;
  c.retrieval.embedding_model = s.at("retrieval.embedding_model");
  c.embedder = s.at("retrieval.embedder");
  if (c.embedder != "http" && c.embedder != "mock") {
    throw Error(ErrorCode::kConfigError, "retrieval.embedder must be http or mock");
  }
  if (c.retrieval.mode == RetrievalMode::kDense && c.retrieval.embedding_model.empty()) {
    throw Error(ErrorCode::kConfigError, "dense retrieval requires --embedding-model");
  }
  c.query_mode = distill::parse_query_mode(s.at("retrieval.query"));

  c.scorer.kind = scoring::parse_scorer_kind(s.at("scoring.scorer"));
  c.scorer.tie_margin = to_double(s, "scoring.tie_margin");
  if (!(c.scorer.tie_margin >= 0.0) || !std::isfinite(c.scorer.tie_margin)) {
    throw Error(ErrorCode::kConfigError, "tie_margin must be finite and >= 0");
  }
  c.scorer.term.metric = scoring::parse_term_metric(s.at("scoring.metric"));
  c.scorer.term.aggregation = scoring::parse_aggregation(s.at("scoring.aggregation"));
  c.setting = eval::parse_setting(s.at("eval.setting"));
  return c;
}

// ---------------------------------------------------------------------------
// Manifest

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Run record written next to the outputs. Everything except the "timing"
/// block is a function of the inputs and configuration.
class Manifest {
 public:
  Manifest(std::string subcommand, const RunConfig& cfg)
      : started_(std::chrono::steady_clock::now()), started_at_(utc_now()) {
    body_["subcommand"] = std::move(subcommand);
    body_["status"] = "running";
    const std::string canonical = canonical_settings(cfg.settings);
    body_["config_digest"] = sha256_hex(canonical);
    ordered_json config = ordered_json::object();
    for (const auto& [k, v] : cfg.settings) config[k] = v;
    body_["config"] = config;
    body_["inputs"] = ordered_json::object();
    body_["outputs"] = ordered_json::object();
    body_["stats"] = ordered_json::object();
  }

  void input(const std::string& name, const fs::path& path) {
    body_["inputs"][name] = {{"path", path.string()}, {"sha256", file_sha256_hex(path)}};
  }
  void output(const std::string& name, const fs::path& path) {
    body_["outputs"][name] = {{"path", path.filename().string()}, {"sha256", file_sha256_hex(path)}};
  }
  ordered_json& stats() { return body_["stats"]; }
  ordered_json& field(const std::string& key) { return body_[key]; }

  void write(const fs::path& dir, const std::string& status) {
    body_["status"] = status;
    ordered_json doc = body_;
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started_);
    doc["timing"] = {{"started_at", started_at_},
                     {"finished_at", utc_now()},
                     {"elapsed_ms", elapsed.count()}};
    fs::create_directories(dir);
    std::ofstream out(dir / ("manifest_" + body_["subcommand"].get<std::string>() + ".json"),
                      std::ios::trunc);
    out << doc.dump(2) << '\n';
  }

 private:
  ordered_json body_;
  std::chrono::steady_clock::time_point started_;
  std::string started_at_;
};

// ---------------------------------------------------------------------------
// Stage helpers

template <typename F>
void write_file(const fs::path& path, F&& writer) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  writer(out);
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

fs::path require_path(const RunConfig& c, const std::string& key, const char* flag) {
  const fs::path p = c.path(key);
  if (p.empty()) throw Error(ErrorCode::kConfigError, std::string(flag) + " is required");
  if (!fs::exists(p)) throw Error(ErrorCode::kIoError, p.string() + " does not exist");
  return p;
}

DocumentStore load_corpus(const RunConfig& c, Manifest& m) {
  const fs::path p = require_path(c, "corpus", "--corpus");
  m.input("corpus", p);
  return ingest_file(p);
}

CorpusIndex load_or_build_index(const RunConfig& c, const DocumentStore& store, Manifest& m) {
  const fs::path p = c.path("index");
  if (!p.empty() && fs::exists(p)) {
    m.input("index", p);
    return load_index_file(p);
  }
  return build_index(store);
}

llm::PromptTemplate question_template(const RunConfig& c, Manifest& m) {
  if (!c.has("paths.question_template")) return llm::default_question_template();
  const fs::path p = require_path(c, "question_template", "--question-template");
  m.input("question_template", p);
  return llm::PromptTemplate::load(p);
}

std::unique_ptr<llm::Gateway> make_gateway(const RunConfig& c) {
  std::shared_ptr<Transport> transport;
  if (c.transport == "mock") {
    transport = std::make_shared<llm::MockChatTransport>();
  } else {
    transport = make_http_transport(c.gateway.base_url);
  }
  return std::make_unique<llm::Gateway>(c.gateway, std::move(transport));
}

struct RetrievalStack {
  std::unique_ptr<EmbeddingClient> embedder;
  std::unique_ptr<EmbeddingCache> cache;
  std::unique_ptr<Retriever> retriever;
};

RetrievalStack make_retrieval(const RunConfig& c, const DocumentStore& store, const CorpusIndex& index) {
  RetrievalStack r;
  if (c.retrieval.mode == RetrievalMode::kDense) {
    if (c.embedder == "mock") {
      r.embedder = std::make_unique<MockEmbedder>(64);
    } else {
      const char* key = std::getenv(c.gateway.api_key_env.c_str());
      r.embedder = std::make_unique<HttpEmbeddingClient>(
          std::shared_ptr<Transport>(make_http_transport(c.gateway.base_url)), key ? key : "",
          c.gateway.timeout);
    }
    r.cache = c.has("paths.cache") ? std::make_unique<EmbeddingCache>(c.path("cache"))
                                   : std::make_unique<EmbeddingCache>();
  }
  r.retriever = std::make_unique<Retriever>(store, &index, r.embedder.get(), r.cache.get());
  return r;
}

void record_retrieval(Manifest& m, const RunConfig& c) {
  m.field("retriever") = to_string(c.retrieval.mode);
  m.field("top_k") = c.retrieval.top_k;
  m.field("seed") = c.seed;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_ingest(const RunConfig& c, Manifest& m, std::ostream& out) {
  const DocumentStore store = load_corpus(c, m);
  const fs::path dest = c.out / "corpus.jsonl";
  write_file(dest, [&](std::ostream& o) { write_corpus_jsonl(store, o); });
  m.output("corpus", dest);
  m.stats()["documents"] = store.size();
  out << "ingested " << store.size() << " documents -> " << dest.string() << '\n';
  return kExitOk;
}

int cmd_index(const RunConfig& c, Manifest& m, std::ostream& out) {
  const DocumentStore store = load_corpus(c, m);
  const CorpusIndex index = build_index(store);
  const fs::path dest = c.has("paths.index") ? c.path("index") : c.out / "index.tsv";
  if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
  save_index_file(index, dest);
  m.output("index", dest);
  m.stats()["documents"] = index.doc_count();
  m.stats()["vocabulary"] = index.vocabulary().size();
  out << "indexed " << index.doc_count() << " documents, " << index.vocabulary().size()
      << " terms -> " << dest.string() << '\n';
  return kExitOk;
}

std::vector<llm::QuestionCandidate> generate_questions(const DocumentStore& store, llm::Gateway& gw,
                                                       const llm::PromptTemplate& tmpl,
                                                       const std::vector<std::string>& models,
                                                       int per_model, std::size_t& failures,
                                                       std::ostream& err) {
  std::vector<llm::ChatRequest> requests;
  std::vector<const Document*> owners;
  for (const auto& doc : store.documents()) {
    const std::string prompt = llm::render_question_prompt(doc, tmpl);
    for (const auto& model : models) {
      for (int i = 0; i < per_model; ++i) {
        llm::ChatRequest req{model, prompt, std::nullopt};
        if (i > 0) req.seed = gw.config().seed.value_or(0) + static_cast<std::uint64_t>(i);
        requests.push_back(std::move(req));
        owners.push_back(&doc);
      }
    }
  }
  const auto results = gw.batch(requests);
  std::vector<llm::QuestionCandidate> out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].ok()) {
      ++failures;
      err << "warning: " << owners[i]->pmid << ": " << results[i].error->what() << '\n';
      continue;
    }
    std::string text = *results[i].text;
    const auto b = text.find_first_not_of(" \t\r\n");
    const auto e = text.find_last_not_of(" \t\r\n");
    out.push_back({owners[i]->pmid, requests[i].model, text.substr(b, e - b + 1), tmpl.id});
  }
  return out;
}

int cmd_questions(const RunConfig& c, Manifest& m, std::ostream& out, std::ostream& err) {
  const DocumentStore store = load_corpus(c, m);
  if (c.generators[0].empty()) throw Error(ErrorCode::kConfigError, "--model-a is required");
  std::vector<std::string> models{c.generators[0]};
  if (!c.generators[1].empty()) models.push_back(c.generators[1]);
  const auto tmpl = question_template(c, m);
  auto gw = make_gateway(c);
  std::size_t failures = 0;
  const auto questions = generate_questions(store, *gw, tmpl, models, c.candidates_per_model, failures, err);
  const fs::path dest = c.out / "questions.jsonl";
  write_file(dest, [&](std::ostream& o) { distill::write_questions(questions, o); });
  m.output("questions", dest);
  m.stats()["documents"] = store.size();
  m.stats()["questions"] = questions.size();
  m.stats()["failures"] = failures;
  out << "generated " << questions.size() << " questions (" << failures << " failures) -> "
      << dest.string() << '\n';
  if (questions.empty() && failures > 0) return kExitService;
  return kExitOk;
}

int cmd_prefs(const RunConfig& c, Manifest& m, std::ostream& out, const std::atomic<bool>* cancel) {
  const DocumentStore store = load_corpus(c, m);
  if (store.empty()) throw Error(ErrorCode::kEmptyStore, "corpus has no documents");
  std::optional<mesh::MeshOntology> ontology;
  if (c.has("paths.mesh")) {
    const fs::path p = require_path(c, "mesh", "--mesh");
    m.input("mesh", p);
    const std::string fmt = c.settings.at("paths.mesh_format");
    ontology = mesh::parse_mesh_file(
        p, fmt == "auto" ? std::nullopt : std::optional(mesh::parse_format_name(fmt)));
    m.field("ontology_source") = ontology->source();
  } else if (c.scorer.kind == scoring::ScorerKind::kMeshHierarchy) {
    throw Error(ErrorCode::kConfigError, "--mesh is required for the mesh scorer");
  }
  const CorpusIndex index = load_or_build_index(c, store, m);
  std::optional<mesh::InformationContent> ic;
  if (ontology && c.scorer.term.metric != scoring::TermMetric::kWuPalmer) {
    ic.emplace(*ontology, annotation_frequencies(store));
  }
  auto stack = make_retrieval(c, store, index);
  auto gw = make_gateway(c);

  distill::PreferenceOptions opts;
  opts.generators = c.generators;
  opts.candidates_per_model = c.candidates_per_model;
  opts.retrieval = c.retrieval;
  opts.scorer = c.scorer;
  opts.question_template = question_template(c, m);
  opts.query_mode = c.query_mode;
  opts.cancel = cancel;
  const distill::ScoringContext ctx{ontology ? &*ontology : nullptr, ic ? &*ic : nullptr, &index};

  m.field("scorer") = scoring::to_string(c.scorer.kind);
  record_retrieval(m, c);
  const auto run = distill::build_preference_pairs(store, ctx, *stack.retriever, *gw, opts);

  const fs::path dest = c.out / "preferences.jsonl";
  write_file(dest, [&](std::ostream& o) { distill::write_pairs(run.pairs, o); });
  m.output("preferences", dest);
  auto& st = m.stats();
  st["documents_processed"] = run.stats.documents_processed;
  st["pairs_emitted"] = run.stats.pairs_emitted;
  st["pairs_skipped_tie"] = run.stats.pairs_skipped_tie;
  st["failures"] = run.stats.failures;
  st["mean_margin"] = run.stats.mean_margin;
  st["wins"] = run.stats.wins;
  st["failure_reasons"] = run.stats.failure_reasons;
  out << "documents " << run.stats.documents_processed << ", pairs " << run.stats.pairs_emitted
      << ", ties " << run.stats.pairs_skipped_tie << ", failures " << run.stats.failures << " -> "
      << dest.string() << '\n';
  // Nothing succeeded at all: the generators were unreachable.
  if (run.stats.failures > 0 && run.stats.failures == run.stats.documents_processed) return kExitService;
  return kExitOk;
}

int cmd_distill(const RunConfig& c, Manifest& m, std::ostream& out, std::ostream& err,
                const std::atomic<bool>* cancel) {
  const DocumentStore store = load_corpus(c, m);
  if (store.empty()) throw Error(ErrorCode::kEmptyStore, "corpus has no documents");
  const CorpusIndex index = load_or_build_index(c, store, m);
  auto stack = make_retrieval(c, store, index);

  std::vector<distill::QuestionRecord> questions;
  std::size_t generation_failures = 0;
  if (c.has("paths.questions")) {
    const fs::path p = require_path(c, "questions", "--questions");
    m.input("questions", p);
    std::ifstream in(p, std::ios::binary);
    for (auto& q : distill::read_questions(in)) questions.push_back({q.source_pmid, q.text});
  } else {
    if (c.generators[0].empty()) {
      throw Error(ErrorCode::kConfigError, "--questions or --model-a is required");
    }
    auto gw = make_gateway(c);
    for (auto& q : generate_questions(store, *gw, question_template(c, m), {c.generators[0]},
                                      c.candidates_per_model, generation_failures, err)) {
      questions.push_back({q.source_pmid, q.text});
    }
  }
  llm::PromptTemplate tmpl = llm::default_distill_template();
  if (c.has("paths.distill_template")) {
    const fs::path p = require_path(c, "distill_template", "--distill-template");
    m.input("distill_template", p);
    tmpl = llm::PromptTemplate::load(p);
  }
  record_retrieval(m, c);
  const auto run = distill::assemble_distilled(questions, store, *stack.retriever, c.retrieval, tmpl, cancel);

  const fs::path dest = c.out / "distilled.jsonl";
  write_file(dest, [&](std::ostream& o) { distill::write_distilled(run.examples, o); });
  m.output("distilled", dest);
  auto& st = m.stats();
  st["questions_processed"] = run.questions_processed;
  st["examples_emitted"] = run.examples.size();
  st["skipped_empty_retrieval"] = run.skipped_empty_retrieval;
  st["generation_failures"] = generation_failures;
  out << "questions " << run.questions_processed << ", examples " << run.examples.size()
      << ", skipped " << run.skipped_empty_retrieval << " -> " << dest.string() << '\n';
  return kExitOk;
}

int cmd_eval(const RunConfig& c, Manifest& m, std::ostream& out) {
  const fs::path bench = require_path(c, "benchmark", "--benchmark");
  m.input("benchmark", bench);
  const auto items = eval::load_benchmark_file(bench);

  eval::EvalConfig cfg{c.setting, c.settings.at("eval.model")};
  eval::EvalReport report;
  if (c.has("paths.answers")) {
    const fs::path p = require_path(c, "answers", "--answers");
    m.input("answers", p);
    auto stubs = eval::StubAnswers::load_file(p);
    if (cfg.model.empty()) cfg.model = "stub";
    report = eval::evaluate(items, cfg, stubs);
  } else {
    if (cfg.model.empty()) throw Error(ErrorCode::kConfigError, "--answers or --model is required");
    auto gw = make_gateway(c);
    eval::GatewayAnswers answers(*gw, cfg.model);
    report = eval::evaluate(items, cfg, answers);
  }
  if (const auto terms = split_list(c.settings.at("eval.slice_mesh")); !terms.empty()) {
    eval::add_slices(report, items, eval::MeshSlice{terms});
  }
  if (const auto& years = c.settings.at("eval.slice_years"); !years.empty()) {
    eval::add_slices(report, items, eval::YearSlice{eval::parse_year_ranges(years)});
  }

  const fs::path dest = c.out / "eval_report.json";
  const fs::path csv = c.out / "eval_items.csv";
  write_file(dest, [&](std::ostream& o) { eval::write_report_json(report, o); });
  write_file(csv, [&](std::ostream& o) { eval::write_items_csv(report, o); });
  m.output("report", dest);
  m.output("items", csv);
  m.field("setting") = eval::to_string(c.setting);
  m.stats()["n"] = report.n;
  m.stats()["correct"] = report.correct;
  m.stats()["accuracy"] = report.accuracy;
  m.stats()["unparseable"] = report.unparseable;
  char acc[32];
  std::snprintf(acc, sizeof(acc), "%.3f", report.accuracy);
  out << "accuracy " << acc << " (" << report.correct << "/" << report.n << ", unparseable "
      << report.unparseable << ") -> " << dest.string() << '\n';
  if (report.n > 0 && report.errors == report.n && !c.has("paths.answers")) return kExitService;
  return kExitOk;
}

int cmd_report(const RunConfig& c, const std::vector<std::string>& checks, std::ostream& out) {
  std::vector<fs::path> files(checks.begin(), checks.end());
  if (files.empty() && fs::exists(c.out / "preferences.jsonl")) files.push_back(c.out / "preferences.jsonl");
  bool ok = true;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open " + f.string());
    const auto check = distill::check_pair_file(in);
    out << f.string() << ": " << check.records << " records, " << check.schema_errors
        << " schema errors, " << check.margin_violations << " margin violations, "
        << (check.sorted ? "sorted" : "UNSORTED") << (check.ok() ? " [ok]" : " [FAIL]") << '\n';
    for (const auto& p : check.problems) out << "  " << p << '\n';
    ok = ok && check.ok();
  }
  if (fs::is_directory(c.out)) {
    std::vector<fs::path> manifests;
    for (const auto& entry : fs::directory_iterator(c.out)) {
      const auto name = entry.path().filename().string();
      if (name.starts_with("manifest_") && name.ends_with(".json") && name != "manifest_report.json") {
        manifests.push_back(entry.path());
      }
    }
    std::sort(manifests.begin(), manifests.end());
    for (const auto& p : manifests) {
      std::ifstream in(p);
      try {
        const auto j = nlohmann::json::parse(in);
        out << p.filename().string() << ": " << j.value("status", "?") << " "
            << j.value("stats", nlohmann::json::object()).dump() << '\n';
      } catch (const nlohmann::json::exception&) {
        out << p.filename().string() << ": unreadable\n";
      }
    }
  }
  return ok ? kExitOk : kExitData;
}

}  // namespace

// ---------------------------------------------------------------------------

Settings default_settings() {
  return {
      {"paths.corpus", ""},
      {"paths.mesh", ""},
      {"paths.mesh_format", "auto"},
      {"paths.index", ""},
      {"paths.out", "out"},
      {"paths.cache", ""},
      {"paths.questions", ""},
      {"paths.question_template", ""},
      {"paths.distill_template", ""},
      {"paths.benchmark", ""},
      {"paths.answers", ""},
      {"gateway.base_url", "http://localhost:8000/v1"},
      {"gateway.api_key_env", "KAILIN_API_KEY"},
      {"gateway.max_in_flight", "4"},
      {"gateway.max_retries", "3"},
      {"gateway.retry_base_delay_ms", "1000"},
      {"gateway.timeout_ms", "60000"},
      {"gateway.temperature", "0"},
      {"gateway.max_tokens", "256"},
      {"gateway.transport", "http"},
      {"generation.model_a", ""},
      {"generation.model_b", ""},
      {"generation.candidates_per_model", "1"},
      {"retrieval.mode", "tfidf"},
      {"retrieval.top_k", "4"},
      {"retrieval.embedding_model", ""},
      {"retrieval.embedder", "http"},
      {"retrieval.query", "question"},
      {"scoring.scorer", "mesh"},
      {"scoring.metric", "wu-palmer"},
      {"scoring.tie_margin", "0"},
      {"scoring.aggregation", "mean"},
      {"eval.setting", "reasoning-required"},
      {"eval.model", ""},
      {"eval.slice_mesh", ""},
      {"eval.slice_years", ""},
      {"run.seed", "42"},
  };
}

Settings read_config_file(const fs::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  const Settings defaults = default_settings();
  Settings out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw Error(ErrorCode::kConfigError, "key '" + section + "' outside a [section] in " + path.string());
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      if (!defaults.contains(full)) {
        throw Error(ErrorCode::kConfigError, "unknown config key '" + full + "' in " + path.string());
      }
      out[full] = value.data();
    }
  }
  return out;
}

Settings environment_settings() {
  Settings out;
  if (const char* url = std::getenv("KAILIN_BASE_URL"); url && *url) out["gateway.base_url"] = url;
  return out;
}

std::string canonical_settings(const Settings& settings) {
  std::string out;
  for (const auto& [k, v] : settings) out += k + "=" + v + "\n";
  return out;
}

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err,
        const std::atomic<bool>* cancel) {
  CLI::App app{"Knowledge-hierarchy guided dataset distillation pipeline", "kailin"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  bool verbose = false;
  app.add_option("--config", config_path, "INI config file ([section] key = value)");
  app.add_flag("--verbose", verbose, "Log gateway requests and responses (API key redacted)");

  std::map<std::string, std::string> flag_values;
  std::map<std::string, std::vector<std::pair<CLI::Option*, std::string>>> bound;
  std::vector<std::string> checks;
  for (const auto& [name, flags] : subcommand_flags()) {
    CLI::App* sub = app.add_subcommand(name, description(name));
    for (const auto& spec : kFlags) {
      const bool always = std::string_view(spec.flag) == "--out" || std::string_view(spec.flag) == "--seed";
      if (!always && std::find(flags.begin(), flags.end(), spec.flag) == flags.end()) continue;
      CLI::Option* opt = sub->add_option(spec.flag, flag_values[spec.flag], spec.help);
      bound[name].emplace_back(opt, spec.key);
    }
    if (name == "report") sub->add_option("--check", checks, "Preference files to validate");
  }

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    std::string message = e.what();
    if (subs.empty()) {
      for (std::size_t i = 1; i < argv.size(); ++i) {
        if (argv[i] == "--config") {
          ++i;
        } else if (!argv[i].starts_with("-")) {
          message = "unknown subcommand '" + argv[i] + "'";
          break;
        }
      }
    }
    err << "error: " << message << "\n\n";
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();

  std::optional<RunConfig> cfg;
  try {
    Settings settings = default_settings();
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) throw Error(ErrorCode::kConfigError, "config file " + config_path + " not found");
      for (auto& [k, v] : read_config_file(config_path)) settings[k] = v;
    }
    for (auto& [k, v] : environment_settings()) settings[k] = v;
    for (const auto& [opt, key] : bound[name]) {
      if (opt->count() > 0) settings[key] = flag_values[opt->get_name()];
    }
    cfg = build_config(std::move(settings), verbose);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n\n" << sub->help();
    return kExitUsage;
  }

  Manifest manifest(name, *cfg);
  auto fail = [&](const Error& e, const std::string& status) {
    manifest.field("error") = e.what();
    try {
      manifest.write(cfg->out, status);
    } catch (const std::exception&) {
    }
  };
  try {
    int code = kExitOk;
    if (name == "ingest") code = cmd_ingest(*cfg, manifest, out);
    else if (name == "index") code = cmd_index(*cfg, manifest, out);
    else if (name == "questions") code = cmd_questions(*cfg, manifest, out, err);
    else if (name == "prefs") code = cmd_prefs(*cfg, manifest, out, cancel);
    else if (name == "distill") code = cmd_distill(*cfg, manifest, out, err, cancel);
    else if (name == "eval") code = cmd_eval(*cfg, manifest, out);
    else return cmd_report(*cfg, checks, out);
    manifest.write(cfg->out, code == kExitOk ? "ok" : "failed");
    return code;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    if (e.code() == ErrorCode::kCancelled) {
      fail(e, "interrupted");
      return kExitService;
    }
    if (e.code() == ErrorCode::kConfigError) {
      fail(e, "failed");
      err << '\n' << sub->help();
      return kExitUsage;
    }
    fail(e, "failed");
    return is_external_service_error(e.code()) ? kExitService : kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    fail(Error(ErrorCode::kIoError, e.what()), "failed");
    return kExitData;
  }
}

}  // namespace kailin::cli
