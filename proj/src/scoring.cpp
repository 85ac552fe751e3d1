// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#include "kailin/scoring.hpp"

#include <algorithm>
#include <map>

#include "kailin/error.hpp"

namespace kailin::scoring {

std::string_view to_string(TermMetric metric) {
  switch (metric) {
    case TermMetric::kWuPalmer: return "wu-palmer";
    case TermMetric::kLin: return "lin";
    case TermMetric::kResnikNormalized: return "resnik-normalized";
  }
  return "?";
}

TermMetric parse_term_metric(std::string_view name) {
  if (name == "wu-palmer") return TermMetric::kWuPalmer;
  if (name == "lin") return TermMetric::kLin;
  if (name == "resnik-normalized" || name == "resnik") return TermMetric::kResnikNormalized;
  throw Error(ErrorCode::kConfigError, "unknown term metric '" + std::string(name) + "'");
}

std::string_view to_string(CollectionAggregation agg) {
  return agg == CollectionAggregation::kMean ? "mean" : "union";
}

CollectionAggregation parse_aggregation(std::string_view name) {
  if (name == "mean") return CollectionAggregation::kMean;
  if (name == "union") return CollectionAggregation::kUnion;
  throw Error(ErrorCode::kConfigError, "unknown aggregation '" + std::string(name) + "'");
}

std::string_view to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kMeshHierarchy: return "mesh";
    case ScorerKind::kTfidf: return "tfidf";
    case ScorerKind::kNull: return "null";
  }
  return "?";
}

ScorerKind parse_scorer_kind(std::string_view name) {
  if (name == "mesh" || name == "mesh-hierarchy") return ScorerKind::kMeshHierarchy;
  if (name == "tfidf") return ScorerKind::kTfidf;
  if (name == "null") return ScorerKind::kNull;
  throw Error(ErrorCode::kConfigError, "unknown scorer '" + std::string(name) + "'");
}

HierarchyScorer::HierarchyScorer(const mesh::MeshOntology& ontology, TermSimConfig cfg,
                                 const mesh::InformationContent* ic)
    : ontology_(&ontology), cfg_(cfg), ic_(ic) {}

double HierarchyScorer::pair_similarity(const mesh::MeshDescriptor& a,
                                        const mesh::MeshDescriptor& b) const {
  if (a.tree_numbers.empty() || b.tree_numbers.empty()) return 0.0;
  if (a.ui == b.ui) return 1.0;

  double best = 0.0;
  switch (cfg_.metric) {
    case TermMetric::kWuPalmer:
      for (const auto& ta : a.tree_numbers) {
        const int da = mesh::depth(ta);
        for (const auto& tb : b.tree_numbers) {
          const int shared = mesh::lcp_depth(ta, tb);
          best = std::max(best, 2.0 * shared / (da + mesh::depth(tb)));
        }
      }
      return best;
    case TermMetric::kLin:
    case TermMetric::kResnikNormalized: {
      if (!ic_) return 0.0;
      const double ic_a = ic_->ic(a.ui);
      const double ic_b = ic_->ic(b.ui);
      const double denom =
          cfg_.metric == TermMetric::kLin ? ic_a + ic_b : ic_->max_ic();
      if (denom <= 0.0) return 0.0;
      for (const auto& ta : a.tree_numbers) {
        for (const auto& tb : b.tree_numbers) {
          const int shared = mesh::lcp_depth(ta, tb);
          if (shared == 0) continue;
          std::string_view lca(ta);
          for (int cut = mesh::depth(ta); cut > shared; --cut) lca = *mesh::parent_of(lca);
          const double ic_lca = ic_->ic_of_prefix(lca);
          const double num = cfg_.metric == TermMetric::kLin ? 2.0 * ic_lca : ic_lca;
          best = std::max(best, num / denom);
        }
      }
      return std::min(best, 1.0);
    }
  }
  return best;
}

double HierarchyScorer::term_similarity(std::string_view a, std::string_view b) const {
  return pair_similarity(ontology_->at(a), ontology_->at(b));
}

double HierarchyScorer::set_similarity(std::span<const std::string> a,
                                       std::span<const std::string> b) const {
  std::vector<const mesh::MeshDescriptor*> da, db;
  for (const auto& ui : a) da.push_back(&ontology_->at(ui));
  for (const auto& ui : b) db.push_back(&ontology_->at(ui));
  if (da.empty() || db.empty()) return 0.0;

  std::vector<double> best_a(da.size(), 0.0), best_b(db.size(), 0.0);
  for (std::size_t i = 0; i < da.size(); ++i) {
    for (std::size_t j = 0; j < db.size(); ++j) {
      const double s = pair_similarity(*da[i], *db[j]);
      best_a[i] = std::max(best_a[i], s);
      best_b[j] = std::max(best_b[j], s);
    }
  }
  double sum_a = 0.0, sum_b = 0.0;
  for (double s : best_a) sum_a += s;
  for (double s : best_b) sum_b += s;
  return 0.5 * (sum_a / static_cast<double>(da.size()) + sum_b / static_cast<double>(db.size()));
}

double HierarchyScorer::collection_score(const Document& source,
                                         std::span<const Document* const> retrieved) const {
  if (retrieved.empty()) throw Error(ErrorCode::kEmptyCollection, "no retrieved documents");
  if (cfg_.aggregation == CollectionAggregation::kUnion) {
    std::vector<std::string> merged;
    for (const Document* d : retrieved) {
      for (const auto& ui : d->mesh_uis) {
        if (std::find(merged.begin(), merged.end(), ui) == merged.end()) merged.push_back(ui);
      }
    }
    return set_similarity(source.mesh_uis, merged);
  }
  double sum = 0.0;
  for (const Document* d : retrieved) sum += set_similarity(source.mesh_uis, d->mesh_uis);
  return sum / static_cast<double>(retrieved.size());
}

double tfidf_collection_score(const Document& source, std::span<const Document* const> retrieved,
                              const CorpusIndex& index) {
  if (retrieved.empty()) throw Error(ErrorCode::kEmptyCollection, "no retrieved documents");
  const SparseVector src = index.document_vector(source.pmid);
  std::map<std::string, double> centroid;
  for (const Document* d : retrieved) {
    for (const auto& [term, w] : index.document_vector(d->pmid)) centroid[term] += w;
  }
  SparseVector c;
  c.reserve(centroid.size());
  const double inv = 1.0 / static_cast<double>(retrieved.size());
  for (const auto& [term, w] : centroid) c.emplace_back(term, w * inv);
  const double ns = l2_norm(src);
  const double nc = l2_norm(c);
  if (ns == 0.0 || nc == 0.0) return 0.0;
  return std::clamp(dot(src, c) / (ns * nc), 0.0, 1.0);
}

}  // namespace kailin::scoring
