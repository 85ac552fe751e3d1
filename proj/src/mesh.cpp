// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#include "kailin/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

#include "kailin/error.hpp"

namespace kailin::mesh {
namespace {

bool is_alnum(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

void require_valid(std::string_view tree_number) {
  if (!is_valid_tree_number(tree_number)) {
    throw Error(ErrorCode::kInvalidTreeNumber, "'" + std::string(tree_number) + "'");
  }
}

std::vector<std::string_view> segments(std::string_view tree_number) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = tree_number.find('.', start);
    if (dot == std::string_view::npos) {
      out.push_back(tree_number.substr(start));
      return out;
    }
    out.push_back(tree_number.substr(start, dot - start));
    start = dot + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void push_unique(std::vector<std::string>& v, std::string value) {
  if (std::find(v.begin(), v.end(), value) == v.end()) v.push_back(std::move(value));
}

// ascii-bin: "*NEWRECORD" separates records; each field is "KEY = value".
std::vector<MeshDescriptor> read_ascii_bin(std::istream& in) {
  std::vector<MeshDescriptor> out;
  std::optional<MeshDescriptor> current;
  std::size_t record_line = 0;
  std::size_t line_no = 0;

  auto finish = [&]() {
    if (!current) return;
    if (current->ui.empty() || current->name.empty()) {
      throw Error(ErrorCode::kMalformedRecord,
                  "record starting at line " + std::to_string(record_line) +
                      " lacks " + (current->ui.empty() ? "UI" : "MH"));
    }
    out.push_back(std::move(*current));
    current.reset();
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view == "*NEWRECORD") {
      finish();
      current.emplace();
      record_line = line_no;
      continue;
    }
    if (!current) continue;  // preamble before the first record
    const std::size_t eq = view.find(" = ");
    if (eq == std::string_view::npos) continue;
    const std::string_view key = trim(view.substr(0, eq));
    const std::string_view value = trim(view.substr(eq + 3));
    if (key == "MH") {
      current->name = std::string(value);
    } else if (key == "UI") {
      current->ui = std::string(value);
    } else if (key == "MN") {
      push_unique(current->tree_numbers, std::string(value));
    }
  }
  finish();
  return out;
}

std::vector<MeshDescriptor> read_xml(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("xml: ") + e.what());
  }
  std::vector<MeshDescriptor> out;
  const auto root = tree.get_child_optional("DescriptorRecordSet");
  if (!root) {
    throw Error(ErrorCode::kMalformedRecord, "xml: missing DescriptorRecordSet");
  }
  std::size_t ordinal = 0;
  for (const auto& [tag, record] : *root) {
    if (tag != "DescriptorRecord") continue;
    ++ordinal;
    MeshDescriptor d;
    d.ui = std::string(trim(record.get<std::string>("DescriptorUI", "")));
    d.name = std::string(trim(record.get<std::string>("DescriptorName.String", "")));
    if (d.ui.empty() || d.name.empty()) {
      throw Error(ErrorCode::kMalformedRecord,
                  "xml DescriptorRecord #" + std::to_string(ordinal) + " lacks " +
                      (d.ui.empty() ? "DescriptorUI" : "DescriptorName"));
    }
    if (const auto list = record.get_child_optional("TreeNumberList")) {
      for (const auto& [ttag, tn] : *list) {
        if (ttag == "TreeNumber") push_unique(d.tree_numbers, std::string(trim(tn.data())));
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<MeshDescriptor> read_jsonl(std::istream& in) {
  std::vector<MeshDescriptor> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord, where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("ui") || !j.contains("name") ||
        !j["ui"].is_string() || !j["name"].is_string()) {
      throw Error(ErrorCode::kMalformedRecord, where + ": missing ui or name");
    }
    MeshDescriptor d;
    d.ui = j["ui"].get<std::string>();
    d.name = j["name"].get<std::string>();
    if (j.contains("tree_numbers")) {
      for (const auto& t : j["tree_numbers"]) {
        if (!t.is_string()) throw Error(ErrorCode::kMalformedRecord, where + ": bad tree number");
        push_unique(d.tree_numbers, t.get<std::string>());
      }
    }
    if (d.ui.empty() || d.name.empty()) {
      throw Error(ErrorCode::kMalformedRecord, where + ": empty ui or name");
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace

bool is_valid_tree_number(std::string_view tree_number) noexcept {
  if (tree_number.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(tree_number.front()))) return false;
  bool segment_empty = true;
  for (char c : tree_number) {
    if (c == '.') {
      if (segment_empty) return false;
      segment_empty = true;
    } else if (is_alnum(c)) {
      segment_empty = false;
    } else {
      return false;
    }
  }
  return !segment_empty;
}

int depth(std::string_view tree_number) {
  require_valid(tree_number);
  return static_cast<int>(std::count(tree_number.begin(), tree_number.end(), '.')) + 1;
}

std::vector<std::string> ancestors(std::string_view tree_number) {
  require_valid(tree_number);
  std::vector<std::string> out;
  std::size_t pos = tree_number.size();
  while ((pos = tree_number.rfind('.', pos - 1)) != std::string_view::npos) {
    out.emplace_back(tree_number.substr(0, pos));
    if (pos == 0) break;
  }
  return out;
}

int lcp_depth(std::string_view a, std::string_view b) {
  require_valid(a);
  require_valid(b);
  const auto sa = segments(a);
  const auto sb = segments(b);
  const std::size_t n = std::min(sa.size(), sb.size());
  int shared = 0;
  for (std::size_t i = 0; i < n && sa[i] == sb[i]; ++i) ++shared;
  return shared;
}

std::optional<std::string_view> parent_of(std::string_view tree_number) noexcept {
  const std::size_t dot = tree_number.rfind('.');
  if (dot == std::string_view::npos) return std::nullopt;
  return tree_number.substr(0, dot);
}

MeshFormat parse_format_name(std::string_view name) {
  if (name == "ascii-bin" || name == "bin" || name == "ascii") return MeshFormat::kAsciiBin;
  if (name == "xml") return MeshFormat::kXml;
  if (name == "jsonl") return MeshFormat::kJsonl;
  throw Error(ErrorCode::kUnknownFormat, "'" + std::string(name) + "'");
}

MeshFormat detect_format(std::string_view head) {
  head = trim(head);
  // UTF-8 byte order mark
  if (head.size() >= 3 && head.substr(0, 3) == "\xEF\xBB\xBF") head = trim(head.substr(3));
  if (head.starts_with('<')) return MeshFormat::kXml;
  if (head.starts_with("*NEWRECORD")) return MeshFormat::kAsciiBin;
  if (head.starts_with('{')) return MeshFormat::kJsonl;
  throw Error(ErrorCode::kUnknownFormat, "unrecognized MeSH file contents");
}

const MeshDescriptor* MeshOntology::find(std::string_view ui) const {
  const auto it = descriptors_.find(ui);
  return it == descriptors_.end() ? nullptr : &it->second;
}

const MeshDescriptor& MeshOntology::at(std::string_view ui) const {
  if (const auto* d = find(ui)) return *d;
  throw Error(ErrorCode::kUnknownUi, "'" + std::string(ui) + "'");
}

std::optional<std::string_view> MeshOntology::owner_of(std::string_view tree_number) const {
  const auto it = tree_index_.find(tree_number);
  if (it == tree_index_.end()) return std::nullopt;
  return std::string_view(it->second);
}

std::optional<std::string_view> MeshOntology::ui_for_name(std::string_view name) const {
  const auto it = name_index_.find(lowercase(name));
  if (it == name_index_.end()) return std::nullopt;
  return std::string_view(it->second);
}

MeshOntology MeshOntology::from_descriptors(std::vector<MeshDescriptor> descriptors,
                                            std::string source) {
  MeshOntology onto;
  onto.source_ = std::move(source);
  for (auto& d : descriptors) {
    if (d.ui.empty() || d.name.empty()) {
      throw Error(ErrorCode::kMalformedRecord, "descriptor lacks UI or MH");
    }
    for (const auto& t : d.tree_numbers) {
      if (!is_valid_tree_number(t)) {
        throw Error(ErrorCode::kMalformedRecord,
                    d.ui + ": invalid tree number '" + t + "'");
      }
      const auto [it, inserted] = onto.tree_index_.emplace(t, d.ui);
      if (!inserted && it->second != d.ui) {
        throw Error(ErrorCode::kMalformedRecord,
                    "tree number " + t + " claimed by " + it->second + " and " + d.ui);
      }
    }
    onto.name_index_.emplace(lowercase(d.name), d.ui);
    std::string ui = d.ui;
    if (!onto.descriptors_.emplace(ui, std::move(d)).second) {
      throw Error(ErrorCode::kDuplicateUi, "'" + ui + "'");
    }
  }
  for (const auto& [tree_number, ui] : onto.tree_index_) {
    const auto parent = parent_of(tree_number);
    if (parent && !onto.tree_index_.contains(*parent)) onto.orphans_.push_back(tree_number);
  }
  return onto;
}

MeshOntology parse_mesh(std::istream& source, MeshFormat format, std::string source_label) {
  std::vector<MeshDescriptor> records;
  switch (format) {
    case MeshFormat::kAsciiBin: records = read_ascii_bin(source); break;
    case MeshFormat::kXml: records = read_xml(source); break;
    case MeshFormat::kJsonl: records = read_jsonl(source); break;
  }
  return MeshOntology::from_descriptors(std::move(records), std::move(source_label));
}

MeshOntology parse_mesh_file(const std::filesystem::path& path, std::optional<MeshFormat> format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  if (!format) {
    std::string head(256, '\0');
    in.read(head.data(), static_cast<std::streamsize>(head.size()));
    head.resize(static_cast<std::size_t>(in.gcount()));
    format = detect_format(head);
    in.clear();
    in.seekg(0);
  }
  return parse_mesh(in, *format, path.filename().string());
}

void write_jsonl(const MeshOntology& ontology, std::ostream& out) {
  for (const auto& [ui, d] : ontology.descriptors()) {
    nlohmann::ordered_json j;
    j["ui"] = d.ui;
    j["name"] = d.name;
    j["tree_numbers"] = d.tree_numbers;
    out << j.dump() << '\n';
  }
}

InformationContent::InformationContent(const MeshOntology& ontology, const FrequencyMap& freq)
    : ontology_(&ontology) {
  for (const auto& [ui, count] : freq) {
    if (ontology.contains(ui)) total_ += count;
  }
  auto freq_of = [&](std::string_view ui) -> std::uint64_t {
    const auto it = freq.find(ui);
    return it == freq.end() ? 0 : it->second;
  };
  // direct[u]: descriptors owning a tree number strictly below one of u's.
  const auto& index = ontology.tree_index();
  std::unordered_map<std::string_view, std::vector<std::string_view>> direct;
  for (const auto& [ui, d] : ontology.descriptors()) {
    auto& below = direct[ui];
    for (const auto& t : d.tree_numbers) {
      // Keys with prefix "t." sort in ["t.", "t/") since '.' + 1 == '/'.
      const std::string lo = t + ".";
      const std::string hi = t + "/";
      for (auto it = index.lower_bound(lo); it != index.end() && it->first < hi; ++it) {
        if (it->second != ui) below.push_back(it->second);
      }
    }
  }
  // Subtree = everything reachable through `direct`, so a descendant's other
  // tree-number branches are included and IC stays antitone along ancestors.
  for (const auto& [ui, d] : ontology.descriptors()) {
    std::unordered_set<std::string_view> seen{ui};
    std::vector<std::string_view> stack{ui};
    std::uint64_t sum = 0;
    while (!stack.empty()) {
      const std::string_view u = stack.back();
      stack.pop_back();
      sum += freq_of(u);
      for (auto v : direct[u]) {
        if (seen.insert(v).second) stack.push_back(v);
      }
    }
    subtree_.emplace(ui, sum);
  }
}

std::uint64_t InformationContent::subtree_count(std::string_view ui) const {
  const auto it = subtree_.find(std::string(ui));
  if (it == subtree_.end()) throw Error(ErrorCode::kUnknownUi, "'" + std::string(ui) + "'");
  return it->second;
}

double InformationContent::ic(std::string_view ui) const {
  const double count = static_cast<double>(subtree_count(ui));
  const double total = static_cast<double>(total_);
  const double value = -std::log((count + 1.0) / (total + 1.0));
  return value == 0.0 ? 0.0 : value;  // no -0.0
}

double InformationContent::ic_of_prefix(std::string_view prefix) const {
  std::optional<std::string_view> node = prefix;
  while (node) {
    if (const auto owner = ontology_->owner_of(*node)) return ic(*owner);
    node = parent_of(*node);
  }
  return 0.0;
}

double InformationContent::max_ic() const {
  return std::log(static_cast<double>(total_) + 1.0);
}

double term_ic(std::string_view ui, const MeshOntology& ontology, const FrequencyMap& freq) {
  ontology.at(ui);
  return InformationContent(ontology, freq).ic(ui);
}

}  // namespace kailin::mesh
