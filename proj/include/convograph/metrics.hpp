#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "convograph/clustering.hpp"
#include "convograph/embedding.hpp"
#include "convograph/flowgraph.hpp"

namespace convograph {

// Which vector represents a cluster when scoring semantic coherence: its
// centroid, or the embedding of its intent label.
enum class MuSource { centroid, label_embedding };

const char* to_string(MuSource m);
std::optional<MuSource> mu_source_from_string(std::string_view s);

struct MetricsReport {
  double branching_factor = 0.0;
  std::int64_t n_cycles = 0;
  double delta_hyperbolicity = 0.0;
  // Unset when embeddings are not available (metrics recomputed from
  // exported artifacts alone).
  std::optional<double> semantic_coherence;
  double coverage = 0.0;
  std::vector<double> per_flow_tas;
  std::int64_t excluded_flows = 0;  // flows of length 1, skipped by coverage
};

// Directed edge count over vertex count, self-loops included.
double branching_factor(const FlowGraph& g);

std::int64_t count_simple_cycles(const FlowGraph& g);

// Four-point condition on the undirected underlying simple graph with unit
// edge lengths, evaluated per connected component and maximized across
// components. Components with fewer than 4 vertices contribute 0.
double delta_hyperbolicity(const FlowGraph& g);

// Mean cosine similarity between each utterance vector and its cluster
// representative. label_vectors is required iff mu_source is
// label_embedding.
double semantic_coherence(const Clustering& clustering,
                          const EmbeddingMatrix& embeddings,
                          MuSource mu_source = MuSource::centroid,
                          const EmbeddingMatrix* label_vectors = nullptr);

// Fraction of a flow's adjacent pairs present as directed edges; the flow
// must have length >= 2.
double transition_alignment_score(const std::vector<int>& flow,
                                  const FlowGraph& g);

struct CoverageDetail {
  double coverage = 0.0;
  std::vector<double> per_flow_tas;
  std::int64_t excluded_flows = 0;
};

// Mean alignment score over flows of length >= 2; shorter flows are counted
// in excluded_flows. Throws when no flow is eligible.
CoverageDetail coverage_detail(const FlowSet& flows, const FlowGraph& g);
double coverage(const FlowSet& flows, const FlowGraph& g);

MetricsReport compute_metrics(const FlowGraph& g, const FlowSet& flows,
                              const Clustering* clustering = nullptr,
                              const EmbeddingMatrix* embeddings = nullptr,
                              MuSource mu_source = MuSource::centroid,
                              const EmbeddingMatrix* label_vectors = nullptr);

// One comparison-row JSON object:
//   {branching_factor, n_cycles, delta, semantic_coherence, coverage,
//    excluded_flows, method, tau, k, n_clusters, seed}
std::string metrics_to_json(const MetricsReport& r, SimplifyMethod method,
                            double tau, int k, std::size_t n_clusters,
                            std::uint64_t seed);
MetricsReport metrics_from_json(const std::string& text);

}  // namespace convograph
