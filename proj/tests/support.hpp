// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kailin/corpus.hpp"
#include "kailin/mesh.hpp"

namespace kailin::testing {

inline std::filesystem::path source_dir() { return KAILIN_SOURCE_DIR; }
inline std::filesystem::path fixture(const std::string& name) {
  return source_dir() / "data" / "fixtures" / name;
}
inline std::filesystem::path test_data(const std::string& name) {
  return source_dir() / "tests" / "data" / name;
}
inline std::filesystem::path golden(const std::string& name) {
  return source_dir() / "tests" / "golden" / name;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Fresh empty directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("kailin_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Random ontology: up to `max_desc` descriptors with 0..max_trees tree
/// numbers each. Tree numbers are unique; most extend an existing one, some
/// skip a level (orphans) and some start a new root.
inline std::vector<mesh::MeshDescriptor> random_descriptors(std::mt19937_64& rng, int max_desc,
                                                            int max_trees) {
  std::uniform_int_distribution<int> n_desc(1, max_desc);
  std::uniform_int_distribution<int> n_tree(0, max_trees);
  std::uniform_int_distribution<int> pct(0, 99);
  std::uniform_int_distribution<int> seg(0, 30);
  std::vector<std::string> used;
  std::set<std::string> seen;
  auto fresh = [&](std::string t) {
    while (seen.contains(t)) t += "." + std::to_string(seg(rng));
    seen.insert(t);
    used.push_back(t);
    return t;
  };
  const int n = n_desc(rng);
  std::vector<mesh::MeshDescriptor> out;
  for (int i = 0; i < n; ++i) {
    mesh::MeshDescriptor d;
    d.ui = "D" + std::to_string(100000 + i);
    d.name = "Term " + std::to_string(i);
    const int k = n_tree(rng);
    for (int j = 0; j < k; ++j) {
      const int roll = pct(rng);
      std::string t;
      if (used.empty() || roll < 15) {
        t = std::string(1, static_cast<char>('A' + seg(rng) % 4)) + std::to_string(seg(rng) % 5);
      } else {
        t = used[std::uniform_int_distribution<std::size_t>(0, used.size() - 1)(rng)] + "." +
            std::to_string(seg(rng) % 6);
        if (roll < 25) t += "." + std::to_string(seg(rng) % 6);
      }
      d.tree_numbers.push_back(fresh(t));
    }
    out.push_back(std::move(d));
  }
  return out;
}

inline std::vector<std::string> random_ui_set(std::mt19937_64& rng,
                                              const std::vector<mesh::MeshDescriptor>& descs,
                                              int max_terms) {
  std::uniform_int_distribution<int> count(0, max_terms);
  std::uniform_int_distribution<std::size_t> pick(0, descs.size() - 1);
  std::vector<std::string> out;
  const int k = count(rng);
  for (int i = 0; i < k; ++i) {
    const std::string& ui = descs[pick(rng)].ui;
    if (std::find(out.begin(), out.end(), ui) == out.end()) out.push_back(ui);
  }
  return out;
}

inline const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> pool = {
      "enzyme", "protein", "kinase", "tumor", "lung", "cardiac", "insulin", "receptor",
      "binding", "ligand", "cell", "therapy", "dose", "risk", "gene", "mutation",
      "airway", "glucose", "plasma", "serum", "cohort", "trial", "assay", "marker",
      "signal", "pathway", "membrane", "channel", "vessel", "muscle", "bone", "liver",
      "kidney", "brain", "neuron", "immune", "viral", "bacterial", "drug", "response",
      "clinical", "patient", "outcome", "survival", "imaging", "biopsy", "surgery", "lesion",
      "dimer", "fold"};
  return pool;
}

/// Random corpus over a `vocab`-word slice of the pool. Pmids are drawn so
/// that lexicographic and numeric order disagree.
inline DocumentStore random_corpus(std::mt19937_64& rng, int max_docs, int vocab) {
  std::uniform_int_distribution<int> n_docs(1, max_docs);
  std::uniform_int_distribution<int> n_words(0, 12);
  std::uniform_int_distribution<int> word(0, vocab - 1);
  std::uniform_int_distribution<int> id(1, 99999);
  std::set<std::string> pmids;
  std::vector<Document> docs;
  const int n = n_docs(rng);
  while (static_cast<int>(docs.size()) < n) {
    std::string pmid = std::to_string(id(rng));
    if (!pmids.insert(pmid).second) continue;
    Document d;
    d.pmid = pmid;
    if (!docs.empty() && n_words(rng) < 3) {  // exact duplicates force score ties
      d.title = docs.back().title;
      d.abstract = docs.back().abstract;
      docs.push_back(std::move(d));
      continue;
    }
    const int words = n_words(rng);
    for (int i = 0; i < words; ++i) {
      (i < 3 ? d.title : d.abstract) += word_pool()[word(rng)] + " ";
    }
    docs.push_back(std::move(d));
  }
  return DocumentStore(std::move(docs));
}

}  // namespace kailin::testing
