// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kailin/corpus.hpp"
#include "kailin/mesh.hpp"

namespace kailin::scoring {

enum class TermMetric { kWuPalmer, kLin, kResnikNormalized };
enum class CollectionAggregation { kMean, kUnion };

std::string_view to_string(TermMetric metric);
TermMetric parse_term_metric(std::string_view name);  // throws kConfigError
std::string_view to_string(CollectionAggregation agg);
CollectionAggregation parse_aggregation(std::string_view name);

struct TermSimConfig {
  TermMetric metric = TermMetric::kWuPalmer;
  CollectionAggregation aggregation = CollectionAggregation::kMean;
};

enum class ScorerKind { kMeshHierarchy, kTfidf, kNull };

std::string_view to_string(ScorerKind kind);
/// Accepts "mesh" / "mesh-hierarchy", "tfidf", "null".
ScorerKind parse_scorer_kind(std::string_view name);

struct ScorerConfig {
  ScorerKind kind = ScorerKind::kMeshHierarchy;
  double tie_margin = 0.0;
  TermSimConfig term;
};

/// Similarity between MeSH descriptors, term sets and document collections.
///
/// Wu-Palmer needs only the ontology. Lin and Resnik-normalized read
/// information content from `ic`; without one every IC is 0 and those
/// metrics score 0 except for identical terms.
///
/// Holds references; the ontology and IC model must outlive the scorer.
class HierarchyScorer {
 public:
  HierarchyScorer(const mesh::MeshOntology& ontology, TermSimConfig cfg,
                  const mesh::InformationContent* ic = nullptr);

  /// In [0, 1]; 1 for a == b with tree numbers; 0 if either has none.
  /// Throws kUnknownUi.
  double term_similarity(std::string_view a, std::string_view b) const;

  /// Symmetric best-match average; 0 if either set is empty.
  double set_similarity(std::span<const std::string> a, std::span<const std::string> b) const;

  /// Mean over retrieved documents of set_similarity(source, doc), or with
  /// kUnion the similarity against the union of their annotations.
  /// Throws kEmptyCollection.
  double collection_score(const Document& source, std::span<const Document* const> retrieved) const;

  const TermSimConfig& config() const { return cfg_; }

 private:
  double pair_similarity(const mesh::MeshDescriptor& a, const mesh::MeshDescriptor& b) const;

  const mesh::MeshOntology* ontology_;
  TermSimConfig cfg_;
  const mesh::InformationContent* ic_;
};

/// Cosine between the source's TF-IDF vector and the centroid of the
/// retrieved documents' vectors, both L2-normalized. Throws kEmptyCollection
/// or kDocumentNotIndexed.
double tfidf_collection_score(const Document& source, std::span<const Document* const> retrieved,
                              const CorpusIndex& index);

}  // namespace kailin::scoring
