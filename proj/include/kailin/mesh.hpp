// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kailin::mesh {

// ---------------------------------------------------------------------------
// Tree numbers
//
// A tree number is a dot-separated path such as "C01.252.400". The first
// segment names a top-level category and starts with a letter; the others are
// alphanumeric. The tree numbers form a forest: there is no shared super-root.
// ---------------------------------------------------------------------------

bool is_valid_tree_number(std::string_view tree_number) noexcept;

/// Number of segments. Throws Error(kInvalidTreeNumber).
int depth(std::string_view tree_number);

/// Strict prefixes at segment boundaries, nearest first.
std::vector<std::string> ancestors(std::string_view tree_number);

/// Length of the longest common segment prefix; 0 when the roots differ.
int lcp_depth(std::string_view a, std::string_view b);

/// Immediate parent, or nullopt for a root segment. Assumes a valid input.
std::optional<std::string_view> parent_of(std::string_view tree_number) noexcept;

struct MeshDescriptor {
  std::string ui;
  std::string name;
  std::vector<std::string> tree_numbers;

  friend bool operator==(const MeshDescriptor&, const MeshDescriptor&) = default;
};

enum class MeshFormat { kAsciiBin, kXml, kJsonl };

/// "ascii-bin" | "bin" | "xml" | "jsonl". Throws Error(kUnknownFormat).
MeshFormat parse_format_name(std::string_view name);

/// Sniffs the first meaningful bytes: '<' means XML, "*NEWRECORD" means
/// ascii-bin, '{' means jsonl. Throws Error(kUnknownFormat) otherwise.
MeshFormat detect_format(std::string_view head);

class MeshOntology {
 public:
  MeshOntology() = default;

  const MeshDescriptor* find(std::string_view ui) const;
  const MeshDescriptor& at(std::string_view ui) const;  // throws kUnknownUi
  bool contains(std::string_view ui) const { return find(ui) != nullptr; }

  /// Descriptor ui owning a tree number, if any.
  std::optional<std::string_view> owner_of(std::string_view tree_number) const;
  std::optional<std::string_view> ui_for_name(std::string_view name) const;

  const std::map<std::string, MeshDescriptor, std::less<>>& descriptors() const {
    return descriptors_;
  }
  const std::map<std::string, std::string, std::less<>>& tree_index() const {
    return tree_index_;
  }
  std::size_t size() const { return descriptors_.size(); }

  /// Tree numbers whose parent prefix is absent from the ontology, sorted.
  const std::vector<std::string>& orphan_tree_numbers() const { return orphans_; }

  /// Name of the file (or stream label) the ontology was read from.
  const std::string& source() const { return source_; }

  /// Builds an ontology from already-parsed descriptors. Throws
  /// kMalformedRecord (bad tree number, shared tree number) or kDuplicateUi.
  static MeshOntology from_descriptors(std::vector<MeshDescriptor> descriptors,
                                       std::string source = {});

 private:
  std::map<std::string, MeshDescriptor, std::less<>> descriptors_;
  // Sorted so a prefix scan enumerates a subtree.
  std::map<std::string, std::string, std::less<>> tree_index_;
  std::unordered_map<std::string, std::string> name_index_;
  std::vector<std::string> orphans_;
  std::string source_;
};

MeshOntology parse_mesh(std::istream& source, MeshFormat format,
                        std::string source_label = {});
MeshOntology parse_mesh_file(const std::filesystem::path& path,
                             std::optional<MeshFormat> format = std::nullopt);

/// Canonical line-delimited serialization, one {ui, name, tree_numbers}
/// object per line in ui order. Readable back with MeshFormat::kJsonl.
void write_jsonl(const MeshOntology& ontology, std::ostream& out);

// ---------------------------------------------------------------------------
// Information content
// ---------------------------------------------------------------------------

using FrequencyMap = std::map<std::string, std::uint64_t, std::less<>>;

/// Smoothed information content over an annotation frequency table:
///   IC(u) = -ln((subtree_count(u) + 1) / (total + 1))
/// where subtree_count(u) sums the frequency of every descriptor that owns u
/// or any descendant of one of u's tree numbers (each descriptor once).
class InformationContent {
 public:
  InformationContent(const MeshOntology& ontology, const FrequencyMap& freq);

  double ic(std::string_view ui) const;  // throws kUnknownUi
  std::uint64_t subtree_count(std::string_view ui) const;
  std::uint64_t total() const { return total_; }

  /// IC of the descriptor owning `prefix`, walking up to the nearest existing
  /// ancestor prefix when it is absent; 0 when none exists.
  double ic_of_prefix(std::string_view prefix) const;

  /// ln(total + 1): the IC of a descriptor with no annotated subtree.
  double max_ic() const;

 private:
  const MeshOntology* ontology_;
  std::uint64_t total_ = 0;
  std::unordered_map<std::string, std::uint64_t> subtree_;
};

double term_ic(std::string_view ui, const MeshOntology& ontology, const FrequencyMap& freq);

}  // namespace kailin::mesh
