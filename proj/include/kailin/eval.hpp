// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "kailin/llm.hpp"

namespace kailin::eval {

enum class Label { kYes, kNo, kMaybe };
enum class Setting { kReasoningRequired, kQuestionOnly };

std::string_view to_string(Label label);
std::string_view to_string(Setting setting);
Setting parse_setting(std::string_view name);  // throws kConfigError

struct BenchmarkItem {
  std::string id;
  std::string question;
  std::vector<std::string> contexts;
  Label label = Label::kYes;
  std::vector<std::string> mesh_terms;
  std::optional<int> year;
};

/// PubMedQA layout: a JSON object mapping id -> {QUESTION, CONTEXTS,
/// final_decision, MESHES?, YEAR?}. Items come back in ascending id order.
/// Throws kMalformedBenchmark naming the offending id.
std::vector<BenchmarkItem> load_benchmark(std::istream& in);
std::vector<BenchmarkItem> load_benchmark_file(const std::filesystem::path& path);

inline constexpr std::string_view kAnswerInstruction = "Answer yes, no, or maybe.";

/// question-only: "Question: ...\n" + instruction. reasoning-required: the
/// same text preceded by a "Context:" section holding every context block.
std::string render_prompt(const BenchmarkItem& item, Setting setting);

/// Earliest standalone "yes", "no" or "maybe" token (case-insensitive, word
/// boundaries at non-alphanumerics); nullopt when none occurs.
std::optional<Label> parse_answer(std::string_view text);

/// Where raw model answers come from.
class AnswerSource {
 public:
  virtual ~AnswerSource() = default;
  /// One result per item, in item order.
  virtual std::vector<llm::ChatResult> answer_all(const std::vector<BenchmarkItem>& items,
                                                  const std::vector<std::string>& prompts) = 0;
};

/// Replays answers from a line-delimited {id, text} file.
class StubAnswers final : public AnswerSource {
 public:
  explicit StubAnswers(std::unordered_map<std::string, std::string> answers)
      : answers_(std::move(answers)) {}
  static StubAnswers load(std::istream& in);
  static StubAnswers load_file(const std::filesystem::path& path);

  std::vector<llm::ChatResult> answer_all(const std::vector<BenchmarkItem>& items,
                                          const std::vector<std::string>& prompts) override;

 private:
  std::unordered_map<std::string, std::string> answers_;
};

/// Asks a model through the gateway, concurrently up to its in-flight bound.
class GatewayAnswers final : public AnswerSource {
 public:
  GatewayAnswers(llm::Gateway& gateway, std::string model)
      : gateway_(&gateway), model_(std::move(model)) {}
  std::vector<llm::ChatResult> answer_all(const std::vector<BenchmarkItem>& items,
                                          const std::vector<std::string>& prompts) override;

 private:
  llm::Gateway* gateway_;
  std::string model_;
};

struct EvalConfig {
  Setting setting = Setting::kReasoningRequired;
  std::string model;
};

struct ItemResult {
  std::string id;
  Label label = Label::kYes;
  std::optional<Label> predicted;
  bool correct = false;
  std::string error;  // non-empty when the answer could not be obtained
};

struct SliceStats {
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  friend bool operator==(const SliceStats&, const SliceStats&) = default;
};

struct EvalReport {
  Setting setting = Setting::kReasoningRequired;
  std::string model;
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  std::size_t unparseable = 0;  // includes items whose answer failed
  std::size_t errors = 0;
  std::map<std::string, SliceStats> slices;
  std::vector<ItemResult> items;  // input order
};

/// Render, answer, parse, compare. Unparseable and failed answers count as
/// incorrect.
EvalReport evaluate(const std::vector<BenchmarkItem>& items, const EvalConfig& cfg,
                    AnswerSource& answers);

struct MeshSlice {
  std::vector<std::string> terms;
};
struct YearRange {
  int first = 0;
  int last = 0;  // inclusive
};
struct YearSlice {
  std::vector<YearRange> ranges;
};
using SliceSpec = std::variant<MeshSlice, YearSlice>;

/// "2001-2004,2005-2007" -> ranges. Throws kConfigError.
std::vector<YearRange> parse_year_ranges(std::string_view text);

/// Adds slices to `report` (which must come from evaluate over `items`).
/// Mesh slices may overlap; year ranges must be disjoint (kOverlappingYearRanges).
/// Items without the attribute, or outside every range, land in
/// "<kind>:unattributed".
void add_slices(EvalReport& report, const std::vector<BenchmarkItem>& items, const SliceSpec& spec);

void write_report_json(const EvalReport& report, std::ostream& out);
void write_items_csv(const EvalReport& report, std::ostream& out);

}  // namespace kailin::eval
