// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

// Brute-force reference computations. Deliberately naive: string splitting,
// pairwise reachability and dense vectors, sharing no code with the library.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kailin/mesh.hpp"

namespace kailin::oracle {

inline std::vector<std::string> segments(const std::string& t) {
  std::vector<std::string> out(1);
  for (char c : t) {
    if (c == '.') out.emplace_back();
    else out.back() += c;
  }
  return out;
}

inline int shared_prefix(const std::string& a, const std::string& b) {
  const auto sa = segments(a), sb = segments(b);
  int n = 0;
  while (n < static_cast<int>(std::min(sa.size(), sb.size())) && sa[n] == sb[n]) ++n;
  return n;
}

inline bool strictly_below(const std::string& t, const std::string& ancestor) {
  const auto st = segments(t), sa = segments(ancestor);
  return st.size() > sa.size() && shared_prefix(t, ancestor) == static_cast<int>(sa.size());
}

struct Ontology {
  std::map<std::string, std::vector<std::string>> trees;  // ui -> tree numbers
  std::map<std::string, std::set<std::string>> below;     // ui -> uis with a tree number under one of its own
  std::map<std::string, std::string> owners;               // tree number -> ui

  explicit Ontology(const std::vector<mesh::MeshDescriptor>& descs) {
    std::map<std::string, std::vector<std::string>> segs;
    for (const auto& d : descs) {
      trees[d.ui] = d.tree_numbers;
      for (const auto& t : d.tree_numbers) segs[t] = segments(t);
    }
    auto under = [&](const std::string& t, const std::string& a) {
      const auto& st = segs.at(t);
      const auto& sa = segs.at(a);
      return st.size() > sa.size() && std::equal(sa.begin(), sa.end(), st.begin());
    };
    for (const auto& [u, ut] : trees) {
      for (const auto& t : ut) owners[t] = u;
      auto& b = below[u];
      for (const auto& [v, vt] : trees) {
        for (const auto& x : vt) {
          for (const auto& y : ut) {
            if (under(x, y)) b.insert(v);
          }
        }
      }
    }
  }

  std::string owner(const std::string& tree) const {
    const auto it = owners.find(tree);
    return it == owners.end() ? std::string() : it->second;
  }

  /// `ui` and every descriptor reachable through `below`.
  const std::set<std::string>& closure(const std::string& ui) const {
    if (auto it = closures.find(ui); it != closures.end()) return it->second;
    std::set<std::string> members{ui};
    std::vector<std::string> stack{ui};
    while (!stack.empty()) {
      const std::string u = stack.back();
      stack.pop_back();
      for (const auto& v : below.at(u)) {
        if (members.insert(v).second) stack.push_back(v);
      }
    }
    return closures.emplace(ui, std::move(members)).first->second;
  }

  mutable std::map<std::string, std::set<std::string>> closures;
  mutable std::map<std::pair<const void*, std::string>, std::uint64_t> counts;  // keyed by frequency map
};

/// Annotation mass under `ui`: every descriptor reachable through pairwise
/// "some tree number strictly below" edges.
inline std::uint64_t subtree_count(const Ontology& o, const std::string& ui,
                                   const std::map<std::string, std::uint64_t>& freq) {
  const std::pair<const void*, std::string> key{&freq, ui};
  if (auto it = o.counts.find(key); it != o.counts.end()) return it->second;
  std::uint64_t sum = 0;
  for (const auto& m : o.closure(ui)) {
    if (auto it = freq.find(m); it != freq.end()) sum += it->second;
  }
  o.counts[key] = sum;
  return sum;
}

inline std::uint64_t total(const Ontology& o, const std::map<std::string, std::uint64_t>& freq) {
  std::uint64_t sum = 0;
  for (const auto& [ui, c] : freq) {
    if (o.trees.contains(ui)) sum += c;
  }
  return sum;
}

inline double ic(const Ontology& o, const std::string& ui,
                 const std::map<std::string, std::uint64_t>& freq) {
  const double n = static_cast<double>(total(o, freq));
  return -std::log((static_cast<double>(subtree_count(o, ui, freq)) + 1.0) / (n + 1.0));
}

/// IC of a tree-number prefix: its owner, else the nearest owned ancestor.
inline double ic_of_prefix(const Ontology& o, std::vector<std::string> segs,
                           const std::map<std::string, std::uint64_t>& freq) {
  while (!segs.empty()) {
    std::string t = segs[0];
    for (std::size_t i = 1; i < segs.size(); ++i) t += "." + segs[i];
    if (const auto u = o.owner(t); !u.empty()) return ic(o, u, freq);
    segs.pop_back();
  }
  return 0.0;
}

enum class Metric { kWuPalmer, kLin, kResnik };

inline double term_similarity(const Ontology& o, const std::string& a, const std::string& b,
                              Metric metric, const std::map<std::string, std::uint64_t>& freq) {
  const auto& ta = o.trees.at(a);
  const auto& tb = o.trees.at(b);
  if (ta.empty() || tb.empty()) return 0.0;
  if (a == b) return 1.0;
  double best = 0.0;
  for (const auto& x : ta) {
    for (const auto& y : tb) {
      const int lcp = shared_prefix(x, y);
      double s = 0.0;
      if (metric == Metric::kWuPalmer) {
        s = 2.0 * lcp / static_cast<double>(segments(x).size() + segments(y).size());
      } else if (lcp > 0) {
        auto segs = segments(x);
        segs.resize(static_cast<std::size_t>(lcp));
        const double lca = ic_of_prefix(o, segs, freq);
        if (metric == Metric::kLin) {
          const double denom = ic(o, a, freq) + ic(o, b, freq);
          s = denom > 0.0 ? 2.0 * lca / denom : 0.0;
        } else {
          const double max_ic = std::log(static_cast<double>(total(o, freq)) + 1.0);
          s = max_ic > 0.0 ? lca / max_ic : 0.0;
        }
      }
      best = std::max(best, s);
    }
  }
  return std::min(best, 1.0);
}

inline double set_similarity(const Ontology& o, const std::vector<std::string>& A,
                             const std::vector<std::string>& B, Metric metric,
                             const std::map<std::string, std::uint64_t>& freq) {
  if (A.empty() || B.empty()) return 0.0;
  double left = 0.0;
  for (const auto& a : A) {
    double m = 0.0;
    for (const auto& b : B) m = std::max(m, term_similarity(o, a, b, metric, freq));
    left += m;
  }
  double right = 0.0;
  for (const auto& b : B) {
    double m = 0.0;
    for (const auto& a : A) m = std::max(m, term_similarity(o, a, b, metric, freq));
    right += m;
  }
  return 0.5 * (left / static_cast<double>(A.size()) + right / static_cast<double>(B.size()));
}

// ---------------------------------------------------------------------------
// TF-IDF over dense vectors

inline std::vector<std::string> words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text + " ") {
    const auto u = static_cast<unsigned char>(c);
    if (u < 128 && std::isalnum(u)) {
      cur += static_cast<char>(std::tolower(u));
    } else {
      if (cur.size() >= 2) out.push_back(cur);
      cur.clear();
    }
  }
  return out;
}

struct DenseModel {
  std::vector<std::string> vocab;
  std::vector<std::string> pmids;
  std::vector<std::vector<double>> rows;
  std::vector<double> idf;

  int column(const std::string& w) const {
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      if (vocab[i] == w) return static_cast<int>(i);
    }
    return -1;
  }

  /// texts: (pmid, full text) in any order.
  explicit DenseModel(const std::vector<std::pair<std::string, std::string>>& texts) {
    std::set<std::string> all;
    for (const auto& [p, t] : texts) {
      for (const auto& w : words(t)) all.insert(w);
    }
    vocab.assign(all.begin(), all.end());
    const double n = static_cast<double>(texts.size());
    std::vector<std::vector<double>> tf;
    for (const auto& [p, t] : texts) {
      pmids.push_back(p);
      std::vector<double> row(vocab.size(), 0.0);
      for (const auto& w : words(t)) row[column(w)] += 1.0;
      tf.push_back(row);
    }
    for (std::size_t j = 0; j < vocab.size(); ++j) {
      double df = 0.0;
      for (const auto& row : tf) df += row[j] > 0.0 ? 1.0 : 0.0;
      idf.push_back(std::log((n + 1.0) / (df + 1.0)) + 1.0);
    }
    for (auto& row : tf) {
      for (std::size_t j = 0; j < vocab.size(); ++j) row[j] *= idf[j];
    }
    rows = std::move(tf);
  }

  std::vector<double> query(const std::string& text) const {
    std::vector<double> q(vocab.size(), 0.0);
    for (const auto& w : words(text)) {
      if (const int c = column(w); c >= 0) q[c] += idf[c];
    }
    return q;
  }

  const std::vector<double>& row(const std::string& pmid) const {
    for (std::size_t i = 0; i < pmids.size(); ++i) {
      if (pmids[i] == pmid) return rows[i];
    }
    throw std::out_of_range(pmid);
  }
};

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return d / (std::sqrt(na) * std::sqrt(nb));
}

/// Every document scored, best first; equal scores (1e-12 resolution)
/// ordered by pmid. Empty when the query shares no vocabulary.
inline std::vector<std::pair<std::string, double>> ranking(const DenseModel& m,
                                                           const std::string& query, int k) {
  const auto q = m.query(query);
  if (std::all_of(q.begin(), q.end(), [](double x) { return x == 0.0; })) return {};
  std::vector<std::pair<std::string, double>> all;
  for (std::size_t i = 0; i < m.pmids.size(); ++i) all.emplace_back(m.pmids[i], cosine(q, m.rows[i]));
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
    const long long kx = std::llround(x.second * 1e12), ky = std::llround(y.second * 1e12);
    if (kx != ky) return kx > ky;
    return x.first < y.first;
  });
  if (static_cast<int>(all.size()) > k) all.resize(static_cast<std::size_t>(k));
  return all;
}

}  // namespace kailin::oracle
