#pragma once

#include <cstdint>
#include <filesystem>

#include "convograph/clustering.hpp"
#include "convograph/corpus.hpp"
#include "convograph/embedding.hpp"
#include "convograph/flowgraph.hpp"
#include "convograph/intent.hpp"
#include "convograph/metrics.hpp"

namespace convograph {

struct PipelineConfig {
  std::filesystem::path input_path;
  std::filesystem::path output_dir;
  EmbeddingProviderConfig embedding;
  LabelerConfig labeler;
  std::size_t n_clusters = 20;
  std::uint64_t seed = 42;
  SimplifyMethod method = SimplifyMethod::filter_reconnect;
  double tau = 0.1;
  int k = 1;
  MuSource mu_source = MuSource::centroid;
  SpeakerFilter speaker_filter;
  int max_iters = 300;
  double tol = 1e-4;
  bool drop_isolated_nodes = false;  // affects DOT export only
};

// Throws ConfigError on out-of-range parameters.
void validate(const PipelineConfig& config);

// Runs ingest -> embed -> cluster -> label -> graph -> metrics and writes
// embeddings.bin, clustering.json, labels.json, flows.json, graph.json,
// graph.dot and metrics.json into output_dir, plus a manifest.json of stage
// content keys. Stages whose key matches the manifest are reloaded from
// their artifact instead of recomputed; artifacts of completed stages
// survive a later stage failure.
MetricsReport run_pipeline(const PipelineConfig& config);

// Deterministic DOT rendering: nodes and edges in ascending id order, edge
// labels are weights to two decimals.
std::string to_dot(const FlowGraph& g, bool drop_isolated = false);
void export_dot(const FlowGraph& g, const std::filesystem::path& path,
                bool drop_isolated = false);

}  // namespace convograph
