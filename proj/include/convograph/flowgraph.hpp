#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "convograph/clustering.hpp"
#include "convograph/corpus.hpp"

namespace convograph {

// Cluster-id sequences, one per conversation, in corpus order. Transitions
// never cross conversation boundaries.
struct FlowSet {
  std::vector<std::vector<int>> flows;
  std::vector<std::string> conversation_ids;  // aligned with flows
};

struct TransitionMatrix {
  int n_clusters = 0;
  std::vector<std::vector<std::int64_t>> counts;
  // Row-normalized counts; a row with no observed transitions stays all-zero.
  std::vector<std::vector<double>> probs;
};

enum class SimplifyMethod { none, threshold, topk, filter_reconnect };

const char* to_string(SimplifyMethod m);
std::optional<SimplifyMethod> simplify_method_from_string(std::string_view s);

struct GraphNode {
  int cluster_id = 0;
  std::string label;
};

struct GraphEdge {
  int src = 0;
  int dst = 0;
  double weight = 0.0;  // original transition probability, never rescaled
};

struct Provenance {
  SimplifyMethod method = SimplifyMethod::none;
  double tau = 0.0;
  int k = 0;
};

struct FlowGraph {
  std::vector<GraphNode> nodes;  // ascending cluster_id, one per cluster
  std::vector<GraphEdge> edges;  // ascending (src, dst), weights in (0, 1]
  Provenance provenance;

  bool has_edge(int src, int dst) const;
};

FlowSet build_flows(const Corpus& corpus, const Clustering& clustering);

// Counts accumulate adjacent pairs within each flow; probabilities are
// per-row normalized counts.
TransitionMatrix build_transition_matrix(const FlowSet& flows, int n_clusters);

// labels must have one entry per cluster (see display_labels /
// default_labels).
FlowGraph simplify_none(const TransitionMatrix& tm,
                        const std::vector<std::string>& labels);
// Keeps edges with weight >= tau (boundary inclusive).
FlowGraph simplify_threshold(const TransitionMatrix& tm,
                             const std::vector<std::string>& labels,
                             double tau);
// Threshold first, then each node keeps its k heaviest outgoing edges
// (ties toward the lower destination id).
FlowGraph simplify_topk(const TransitionMatrix& tm,
                        const std::vector<std::string>& labels, int k,
                        double tau);
// Three stages: (1) drop sub-tau edges and self-loops, keep each node's k
// strongest incoming edges; (2) while a directed cycle exists, delete its
// minimum-weight edge; (3) greedily restore the strongest removed edges
// that bridge distinct weak components. The result has no self-loops and
// no directed cycles.
FlowGraph simplify_filter_reconnect(const TransitionMatrix& tm,
                                    const std::vector<std::string>& labels,
                                    int k, double tau);

// All simple directed cycles, one vertex sequence per cycle, rotated so the
// smallest vertex comes first; self-loops are length-1 cycles.
std::vector<std::vector<int>> find_directed_cycles(const FlowGraph& g);

std::vector<std::string> default_labels(int n_clusters);

// Canonical key-sorted JSON:
//   {nodes:[{id,label}], edges:[{src,dst,weight}],
//    provenance:{method,tau,k,seed}}
std::string graph_to_json(const FlowGraph& g, std::uint64_t seed);
FlowGraph graph_from_json(const std::string& text,
                          std::uint64_t* seed = nullptr);

std::string flows_to_json(const FlowSet& flows);
FlowSet flows_from_json(const std::string& text);

namespace detail {

// Stage 1 of filter & reconnect; exposed for property tests. Appends every
// dropped edge to *removed when given.
std::vector<GraphEdge> filter_incoming_topk(const TransitionMatrix& tm, int k,
                                            double tau,
                                            std::vector<GraphEdge>* removed);

// One directed cycle as a vertex sequence, or empty when acyclic.
// Deterministic: vertices and neighbors are scanned in ascending order.
std::vector<int> find_one_cycle(int n_nodes,
                                const std::vector<GraphEdge>& edges);

// Component label per node (undirected reachability).
std::vector<int> weak_components(int n_nodes,
                                 const std::vector<GraphEdge>& edges);

}  // namespace detail

}  // namespace convograph
