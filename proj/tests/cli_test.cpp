// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kailin/cli.hpp"
#include "kailin/distill.hpp"
#include "support.hpp"

namespace kailin::cli {
namespace {

using kailin::testing::fixture;
using kailin::testing::scratch_dir;
using kailin::testing::slurp;
namespace fs = std::filesystem;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args, const std::atomic<bool>* cancel = nullptr) {
  args.insert(args.begin(), "kailin");
  std::ostringstream out, err;
  Outcome o;
  o.code = run(args, out, err, cancel);
  o.out = out.str();
  o.err = err.str();
  return o;
}

nlohmann::json manifest(const fs::path& dir, const std::string& sub) {
  std::ifstream in(dir / ("manifest_" + sub + ".json"));
  return nlohmann::json::parse(in);
}

TEST(Cli, UnknownSubcommand) {
  const auto o = invoke({"frobnicate"});
  EXPECT_EQ(o.code, kExitUsage);
  EXPECT_NE(o.err.find("unknown subcommand 'frobnicate'"), std::string::npos);
  EXPECT_NE(o.err.find("prefs"), std::string::npos);
}

TEST(Cli, MissingSubcommand) {
  EXPECT_EQ(invoke({}).code, kExitUsage);
}

TEST(Cli, HelpExitsZero) {
  const auto o = invoke({"--help"});
  EXPECT_EQ(o.code, kExitOk);
  EXPECT_NE(o.out.find("distill"), std::string::npos);
}

TEST(Cli, FlagNotValidForSubcommand) {
  const auto o = invoke({"ingest", "--corpus", fixture("mini_corpus.jsonl").string(), "--top-k", "2"});
  EXPECT_EQ(o.code, kExitUsage);
}

TEST(Cli, BadFlagValue) {
  const auto dir = scratch_dir("cli_badvalue");
  const auto o = invoke({"prefs", "--corpus", fixture("mini_corpus.jsonl").string(), "--top-k", "two",
                         "--out", dir.string()});
  EXPECT_EQ(o.code, kExitUsage);
  EXPECT_NE(o.err.find("retrieval.top_k"), std::string::npos);
  EXPECT_NE(o.err.find("--top-k"), std::string::npos);  // subcommand help follows
}

TEST(Cli, DenseWithoutEmbeddingModel) {
  const auto dir = scratch_dir("cli_dense_nomodel");
  const auto o = invoke({"distill", "--corpus", fixture("mini_corpus.jsonl").string(), "--retriever",
                         "dense", "--out", dir.string()});
  EXPECT_EQ(o.code, kExitUsage);
}

TEST(Cli, UnknownConfigKey) {
  const auto dir = scratch_dir("cli_badkey");
  std::ofstream(dir / "k.ini") << "[retrieval]\ntop_kk = 3\n";
  const auto o = invoke({"--config", (dir / "k.ini").string(), "ingest", "--corpus",
                         fixture("mini_corpus.jsonl").string(), "--out", dir.string()});
  EXPECT_EQ(o.code, kExitUsage);
  EXPECT_NE(o.err.find("retrieval.top_kk"), std::string::npos);
}

TEST(Cli, MissingCorpusIsDataError) {
  const auto dir = scratch_dir("cli_missing");
  const auto o = invoke({"ingest", "--corpus", (dir / "nope.jsonl").string(), "--out", dir.string()});
  EXPECT_EQ(o.code, kExitData);
  EXPECT_EQ(manifest(dir, "ingest")["status"], "failed");
}

TEST(Cli, MalformedCorpusIsDataError) {
  const auto dir = scratch_dir("cli_malformed");
  std::ofstream(dir / "c.jsonl") << "{\"pmid\":\"1\",\"title\":\"a\",\"abstract\":\"b\",\"mesh_uis\":[]}\nnot json\n";
  const auto o = invoke({"ingest", "--corpus", (dir / "c.jsonl").string(), "--out", dir.string()});
  EXPECT_EQ(o.code, kExitData);
  EXPECT_NE(o.err.find("line 2"), std::string::npos);
}

TEST(Cli, UnreachableServiceExitsThree) {
  const auto dir = scratch_dir("cli_unreachable");
  std::ofstream(dir / "c.jsonl") << "{\"pmid\":\"1\",\"title\":\"lung tumor\",\"abstract\":\"airway cells\",\"mesh_uis\":[]}\n";
  const auto o = invoke({"questions", "--corpus", (dir / "c.jsonl").string(), "--model-a", "m",
                         "--base-url", "http://127.0.0.1:1/v1", "--max-retries", "0", "--out",
                         dir.string()});
  EXPECT_EQ(o.code, kExitService);
}

TEST(Cli, IngestAndIndex) {
  const auto dir = scratch_dir("cli_index");
  const auto corpus = fixture("mini_corpus.jsonl").string();
  ASSERT_EQ(invoke({"ingest", "--corpus", corpus, "--out", dir.string()}).code, kExitOk);
  EXPECT_TRUE(fs::exists(dir / "corpus.jsonl"));
  ASSERT_EQ(invoke({"index", "--corpus", corpus, "--out", dir.string()}).code, kExitOk);
  const std::string first = slurp(dir / "index.tsv");
  ASSERT_EQ(invoke({"index", "--corpus", corpus, "--out", dir.string()}).code, kExitOk);
  EXPECT_EQ(slurp(dir / "index.tsv"), first);
  EXPECT_EQ(manifest(dir, "index")["stats"]["documents"], 50);
}

TEST(Cli, PrefsTfidfMock) {
  const auto dir = scratch_dir("cli_prefs");
  const auto o = invoke({"prefs", "--corpus", fixture("mini_corpus.jsonl").string(), "--scorer", "tfidf",
                         "--model-a", "gen-a", "--model-b", "gen-b", "--transport", "mock", "--out",
                         dir.string()});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  std::ifstream in(dir / "preferences.jsonl");
  const auto check = distill::check_pair_file(in);
  EXPECT_TRUE(check.ok());
  EXPECT_GT(check.records, 0u);
  const auto m = manifest(dir, "prefs");
  EXPECT_EQ(m["status"], "ok");
  EXPECT_EQ(m["scorer"], "tfidf");
  EXPECT_EQ(m["retriever"], "tfidf");
  EXPECT_EQ(m["config_digest"].get<std::string>().size(), 64u);
  EXPECT_TRUE(m.contains("timing"));
  EXPECT_EQ(m["stats"]["documents_processed"], 50);
}

TEST(Cli, MeshScorerNeedsOntology) {
  const auto dir = scratch_dir("cli_nomesh");
  const auto o = invoke({"prefs", "--corpus", fixture("mini_corpus.jsonl").string(), "--model-a", "a",
                         "--model-b", "b", "--transport", "mock", "--out", dir.string()});
  EXPECT_EQ(o.code, kExitUsage);
}

TEST(Cli, EvalWithStubAnswers) {
  const auto dir = scratch_dir("cli_eval");
  const auto o = invoke({"eval", "--benchmark", fixture("bench10.json").string(), "--answers",
                         fixture("bench10_stub_answers.jsonl").string(), "--setting", "question-only",
                         "--slice-years", "2001-2004,2005-2007", "--out", dir.string()});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  EXPECT_NE(o.out.find("accuracy 0.700"), std::string::npos);
  std::ifstream in(dir / "eval_report.json");
  const auto report = nlohmann::json::parse(in);
  EXPECT_EQ(report["correct"], 7);
  EXPECT_TRUE(fs::exists(dir / "eval_items.csv"));
}

TEST(Cli, EvalOverlappingYearsIsDataError) {
  const auto dir = scratch_dir("cli_eval_overlap");
  const auto o = invoke({"eval", "--benchmark", fixture("bench10.json").string(), "--answers",
                         fixture("bench10_stub_answers.jsonl").string(), "--slice-years",
                         "2001-2005,2005-2007", "--out", dir.string()});
  EXPECT_EQ(o.code, kExitData);
}

TEST(Cli, ConfigPrecedence) {
  const auto dir = scratch_dir("cli_precedence");
  std::ofstream(dir / "c.ini") << "[retrieval]\ntop_k = 2\n[gateway]\nbase_url = http://file/v1\n";
  ::setenv("KAILIN_BASE_URL", "http://env/v1", 1);
  const auto corpus = fixture("mini_corpus.jsonl").string();
  const auto common = std::vector<std::string>{"--config", (dir / "c.ini").string(), "distill",
                                               "--corpus", corpus, "--model-a", "q",
                                               "--transport", "mock", "--out", dir.string()};
  ASSERT_EQ(invoke(common).code, kExitOk);
  auto m = manifest(dir, "distill");
  EXPECT_EQ(m["config"]["retrieval.top_k"], "2");
  EXPECT_EQ(m["config"]["gateway.base_url"], "http://env/v1");
  const std::string digest = m["config_digest"];

  auto with_flags = common;
  with_flags.insert(with_flags.end(), {"--top-k", "3", "--base-url", "http://flag/v1"});
  ASSERT_EQ(invoke(with_flags).code, kExitOk);
  m = manifest(dir, "distill");
  EXPECT_EQ(m["config"]["retrieval.top_k"], "3");
  EXPECT_EQ(m["config"]["gateway.base_url"], "http://flag/v1");
  EXPECT_NE(m["config_digest"], digest);
  ::unsetenv("KAILIN_BASE_URL");
}

TEST(Cli, ReportFlagsBadPairFile) {
  const auto dir = scratch_dir("cli_report");
  std::ofstream(dir / "bad.jsonl")
      << R"({"prompt":"q","chosen":"a","rejected":"b","score_chosen":0.2,"score_rejected":0.5,)"
      << R"("meta":{"source_pmid":"1","generator_chosen":"x","generator_rejected":"y",)"
      << R"("scorer_kind":"tfidf","template_id":"question-v1","tie_margin":0.0}})"
      << '\n';
  const auto o = invoke({"report", "--check", (dir / "bad.jsonl").string(), "--out", dir.string()});
  EXPECT_EQ(o.code, kExitData);
  EXPECT_NE(o.out.find("[FAIL]"), std::string::npos);
}

TEST(Cli, ReportMissingFile) {
  const auto dir = scratch_dir("cli_report_missing");
  EXPECT_EQ(invoke({"report", "--check", (dir / "none.jsonl").string(), "--out", dir.string()}).code,
            kExitData);
}

TEST(Cli, CancelledRunWritesInterruptedManifest) {
  const auto dir = scratch_dir("cli_cancel");
  std::atomic<bool> cancel{true};
  const auto o = invoke({"prefs", "--corpus", fixture("mini_corpus.jsonl").string(), "--scorer", "tfidf",
                         "--model-a", "a", "--model-b", "b", "--transport", "mock", "--out",
                         dir.string()},
                        &cancel);
  EXPECT_EQ(o.code, kExitService);
  EXPECT_EQ(manifest(dir, "prefs")["status"], "interrupted");
}

TEST(Cli, CanonicalSettingsOrder) {
  EXPECT_EQ(canonical_settings({{"b.x", "2"}, {"a.y", "1"}}), "a.y=1\nb.x=2\n");
}

}  // namespace
}  // namespace kailin::cli
