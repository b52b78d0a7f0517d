#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace convograph {

enum class PlantedShape { chain, ring, tree, random_graph };

const char* to_string(PlantedShape s);
std::optional<PlantedShape> planted_shape_from_string(std::string_view s);

// Directed edge list for a planted intent-transition structure.
std::vector<std::pair<int, int>> planted_edges(PlantedShape shape,
                                               int n_intents,
                                               std::uint64_t seed);

struct SyntheticSpec {
  int n_intents = 10;
  int n_conversations = 200;
  std::vector<std::pair<int, int>> ground_truth_edges;
  double noise_rate = 0.0;  // probability of an off-graph jump per step
  std::uint64_t seed = 0;
  int min_turns = 4;
  int max_turns = 12;
};

struct SyntheticResult {
  std::string corpus_jsonl;
  std::vector<std::vector<int>> true_flows;  // intent-id walk per conversation
  std::vector<std::pair<int, int>> edges;    // planted edges actually used
  std::vector<int> unvisited_intents;  // never appeared in any flow (warning)
};

// Conversations are random walks on the planted graph. Each step jumps to a
// uniformly random off-graph successor with probability noise_rate and
// otherwise follows a uniformly random planted outgoing edge; a walk ends
// early at a node with no planted outgoing edge unless the noise jump
// fires. Utterance texts are a fixed template per intent (three
// intent-specific keywords) so the deterministic embedder separates intents
// cleanly.
SyntheticResult generate_synthetic(const SyntheticSpec& spec);

// corpus_path gets the JSONL corpus; truth_path gets one
// {"id": ..., "intents": [...]} object per line.
void write_synthetic(const SyntheticResult& result,
                     const std::filesystem::path& corpus_path,
                     const std::filesystem::path& truth_path);

}  // namespace convograph
