// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#include "kailin/eval.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>

#include <nlohmann/json.hpp>

#include "kailin/error.hpp"

namespace kailin::eval {
namespace {

Error malformed(const std::string& id, const std::string& what) {
  return Error(ErrorCode::kMalformedBenchmark, "item '" + id + "': " + what);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

void finish(SliceStats& s) {
  s.accuracy = s.n ? static_cast<double>(s.correct) / static_cast<double>(s.n) : 0.0;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string_view to_string(Label label) {
  switch (label) {
    case Label::kYes: return "yes";
    case Label::kNo: return "no";
    case Label::kMaybe: return "maybe";
  }
  return "?";
}

std::string_view to_string(Setting setting) {
  return setting == Setting::kReasoningRequired ? "reasoning-required" : "question-only";
}

Setting parse_setting(std::string_view name) {
  if (name == "reasoning-required") return Setting::kReasoningRequired;
  if (name == "question-only") return Setting::kQuestionOnly;
  throw Error(ErrorCode::kConfigError, "unknown setting '" + std::string(name) + "'");
}

std::vector<BenchmarkItem> load_benchmark(std::istream& in) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedBenchmark, e.what());
  }
  if (!root.is_object()) throw Error(ErrorCode::kMalformedBenchmark, "top level is not an object");
  std::vector<BenchmarkItem> items;
  for (const auto& [id, rec] : root.items()) {  // nlohmann objects iterate in key order
    if (!rec.is_object()) throw malformed(id, "record is not an object");
    BenchmarkItem item;
    item.id = id;
    if (!rec.contains("QUESTION") || !rec["QUESTION"].is_string()) throw malformed(id, "missing QUESTION");
    item.question = rec["QUESTION"].get<std::string>();
    if (item.question.empty()) throw malformed(id, "empty QUESTION");
    if (!rec.contains("CONTEXTS") || !rec["CONTEXTS"].is_array()) throw malformed(id, "missing CONTEXTS");
    for (const auto& c : rec["CONTEXTS"]) {
      if (!c.is_string()) throw malformed(id, "non-string context");
      item.contexts.push_back(c.get<std::string>());
    }
    if (!rec.contains("final_decision") || !rec["final_decision"].is_string()) {
      throw malformed(id, "missing final_decision");
    }
    const std::string decision = lower(rec["final_decision"].get<std::string>());
    if (decision == "yes") {
      item.label = Label::kYes;
    } else if (decision == "no") {
      item.label = Label::kNo;
    } else if (decision == "maybe") {
      item.label = Label::kMaybe;
    } else {
      throw malformed(id, "unknown final_decision '" + decision + "'");
    }
    if (rec.contains("MESHES") && rec["MESHES"].is_array()) {
      for (const auto& m : rec["MESHES"]) {
        if (m.is_string()) item.mesh_terms.push_back(m.get<std::string>());
      }
    }
    if (rec.contains("YEAR")) {
      const auto& y = rec["YEAR"];
      if (y.is_number_integer()) {
        item.year = y.get<int>();
      } else if (y.is_string()) {
        item.year = to_int(y.get<std::string>());
      }
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<BenchmarkItem> load_benchmark_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open benchmark " + path.string());
  return load_benchmark(in);
}

std::string render_prompt(const BenchmarkItem& item, Setting setting) {
  std::string question_part = "Question: " + item.question + "\n" + std::string(kAnswerInstruction) + "\n";
  if (setting == Setting::kQuestionOnly) return question_part;
  std::string out = "Context:\n";
  for (std::size_t i = 0; i < item.contexts.size(); ++i) {
    if (i > 0) out += "\n----\n";
    out += item.contexts[i];
  }
  out += "\n\n";
  return out + question_part;
}

std::optional<Label> parse_answer(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
    if (start == i) break;
    const std::string word = lower(text.substr(start, i - start));
    if (word == "yes") return Label::kYes;
    if (word == "no") return Label::kNo;
    if (word == "maybe") return Label::kMaybe;
  }
  return std::nullopt;
}

StubAnswers StubAnswers::load(std::istream& in) {
  std::unordered_map<std::string, std::string> answers;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      answers[j.at("id").get<std::string>()] = j.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord,
                  "stub answers line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return StubAnswers(std::move(answers));
}

StubAnswers StubAnswers::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open answers " + path.string());
  return load(in);
}

std::vector<llm::ChatResult> StubAnswers::answer_all(const std::vector<BenchmarkItem>& items,
                                                     const std::vector<std::string>&) {
  std::vector<llm::ChatResult> out(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (const auto it = answers_.find(items[i].id); it != answers_.end()) {
      out[i].text = it->second;
    } else {
      out[i].error = Error(ErrorCode::kMalformedRecord, "no stub answer for '" + items[i].id + "'");
    }
  }
  return out;
}

std::vector<llm::ChatResult> GatewayAnswers::answer_all(const std::vector<BenchmarkItem>&,
                                                        const std::vector<std::string>& prompts) {
  std::vector<llm::ChatRequest> requests;
  requests.reserve(prompts.size());
  for (const auto& p : prompts) requests.push_back({model_, p, std::nullopt});
  return gateway_->batch(requests);
}

EvalReport evaluate(const std::vector<BenchmarkItem>& items, const EvalConfig& cfg,
                    AnswerSource& answers) {
  std::vector<std::string> prompts;
  prompts.reserve(items.size());
  for (const auto& item : items) prompts.push_back(render_prompt(item, cfg.setting));
  const auto raw = answers.answer_all(items, prompts);

  EvalReport report;
  report.setting = cfg.setting;
  report.model = cfg.model;
  report.n = items.size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    ItemResult r;
    r.id = items[i].id;
    r.label = items[i].label;
    if (raw[i].ok()) {
      r.predicted = parse_answer(*raw[i].text);
    } else {
      r.error = raw[i].error ? raw[i].error->what() : "no answer";
      ++report.errors;
    }
    r.correct = r.predicted && *r.predicted == r.label;
    if (!r.predicted) ++report.unparseable;
    if (r.correct) ++report.correct;
    report.items.push_back(std::move(r));
  }
  report.accuracy = report.n ? static_cast<double>(report.correct) / static_cast<double>(report.n) : 0.0;
  return report;
}

std::vector<YearRange> parse_year_ranges(std::string_view text) {
  std::vector<YearRange> ranges;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view part = text.substr(start, comma - start);
    if (!part.empty()) {
      const auto dash = part.find('-');
      std::optional<int> first, last;
      if (dash == std::string_view::npos) {
        first = last = to_int(part);
      } else {
        first = to_int(part.substr(0, dash));
        last = to_int(part.substr(dash + 1));
      }
      if (!first || !last || *first > *last) {
        throw Error(ErrorCode::kConfigError, "bad year range '" + std::string(part) + "'");
      }
      ranges.push_back({*first, *last});
    }
    start = comma + 1;
  }
  return ranges;
}

void add_slices(EvalReport& report, const std::vector<BenchmarkItem>& items, const SliceSpec& spec) {
  if (items.size() != report.items.size()) {
    throw Error(ErrorCode::kConfigError, "report does not match the item list");
  }
  if (const auto* mesh = std::get_if<MeshSlice>(&spec)) {
    std::map<std::string, SliceStats> slices;
    for (const auto& term : mesh->terms) slices["mesh:" + term];
    SliceStats unattributed;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].mesh_terms.empty()) {
        ++unattributed.n;
        unattributed.correct += report.items[i].correct;
        continue;
      }
      for (const auto& term : mesh->terms) {
        if (std::find(items[i].mesh_terms.begin(), items[i].mesh_terms.end(), term) !=
            items[i].mesh_terms.end()) {
          auto& s = slices["mesh:" + term];
          ++s.n;
          s.correct += report.items[i].correct;
        }
      }
    }
    slices["mesh:unattributed"] = unattributed;
    for (auto& [key, s] : slices) {
      finish(s);
      report.slices[key] = s;
    }
    return;
  }

  auto ranges = std::get<YearSlice>(spec).ranges;
  std::sort(ranges.begin(), ranges.end(),
            [](const YearRange& a, const YearRange& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < ranges.size(); ++i) {
    if (ranges[i].first <= ranges[i - 1].last) {
      throw Error(ErrorCode::kOverlappingYearRanges,
                  std::to_string(ranges[i - 1].first) + "-" + std::to_string(ranges[i - 1].last) +
                      " overlaps " + std::to_string(ranges[i].first) + "-" +
                      std::to_string(ranges[i].last));
    }
  }
  auto key_of = [](const YearRange& r) {
    return "year:" + std::to_string(r.first) + "-" + std::to_string(r.last);
  };
  std::map<std::string, SliceStats> slices;
  for (const auto& r : ranges) slices[key_of(r)];
  SliceStats unattributed;
  for (std::size_t i = 0; i < items.size(); ++i) {
    SliceStats* target = &unattributed;
    if (items[i].year) {
      for (const auto& r : ranges) {
        if (*items[i].year >= r.first && *items[i].year <= r.last) target = &slices[key_of(r)];
      }
    }
    ++target->n;
    target->correct += report.items[i].correct;
  }
  slices["year:unattributed"] = unattributed;
  for (auto& [key, s] : slices) {
    finish(s);
    report.slices[key] = s;
  }
}

void write_report_json(const EvalReport& report, std::ostream& out) {
  nlohmann::ordered_json j;
  j["setting"] = to_string(report.setting);
  j["model"] = report.model;
  j["n"] = report.n;
  j["correct"] = report.correct;
  j["accuracy"] = report.accuracy;
  j["unparseable"] = report.unparseable;
  j["errors"] = report.errors;
  nlohmann::ordered_json slices = nlohmann::ordered_json::object();
  for (const auto& [key, s] : report.slices) {
    slices[key] = {{"n", s.n}, {"correct", s.correct}, {"accuracy", s.accuracy}};
  }
  j["slices"] = slices;
  out << j.dump(2) << '\n';
}

void write_items_csv(const EvalReport& report, std::ostream& out) {
  out << "id,label,predicted,correct,error\n";
  for (const auto& r : report.items) {
    out << csv_field(r.id) << ',' << to_string(r.label) << ','
        << (r.predicted ? to_string(*r.predicted) : std::string_view("unparseable")) << ','
        << (r.correct ? 1 : 0) << ',' << csv_field(r.error) << '\n';
  }
}

}  // namespace kailin::eval
