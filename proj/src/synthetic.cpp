#include "convograph/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "convograph/errors.hpp"
#include "convograph/rng.hpp"

namespace convograph {

const char* to_string(PlantedShape s) {
  switch (s) {
    case PlantedShape::chain:
      return "chain";
    case PlantedShape::ring:
      return "ring";
    case PlantedShape::tree:
      return "tree";
    case PlantedShape::random_graph:
      return "random";
  }
  return "chain";
}

std::optional<PlantedShape> planted_shape_from_string(std::string_view s) {
  if (s == "chain") return PlantedShape::chain;
  if (s == "ring") return PlantedShape::ring;
  if (s == "tree") return PlantedShape::tree;
  if (s == "random") return PlantedShape::random_graph;
  return std::nullopt;
}

std::vector<std::pair<int, int>> planted_edges(PlantedShape shape,
                                               int n_intents,
                                               std::uint64_t seed) {
  if (n_intents < 2)
    throw ConfigError("planted_edges: need at least 2 intents");
  SplitMix64 rng(seed);
  std::vector<std::pair<int, int>> edges;
  switch (shape) {
    case PlantedShape::chain:
      for (int i = 0; i + 1 < n_intents; ++i) edges.emplace_back(i, i + 1);
      break;
    case PlantedShape::ring:
      for (int i = 0; i < n_intents; ++i)
        edges.emplace_back(i, (i + 1) % n_intents);
      break;
    case PlantedShape::tree:
      // Node v attaches below a uniformly random earlier node.
      for (int v = 1; v < n_intents; ++v)
        edges.emplace_back(static_cast<int>(rng.next_below(v)), v);
      break;
    case PlantedShape::random_graph: {
      for (int u = 0; u < n_intents; ++u) {
        const int deg =
            std::min(n_intents - 1, 1 + static_cast<int>(rng.next_below(2)));
        std::set<int> targets;
        while (static_cast<int>(targets.size()) < deg) {
          const int v = static_cast<int>(rng.next_below(n_intents));
          if (v != u) targets.insert(v);
        }
        for (int v : targets) edges.emplace_back(u, v);
      }
      break;
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

namespace {

std::string random_word(SplitMix64& rng, std::size_t len) {
  std::string w(len, 'a');
  for (char& ch : w) ch = static_cast<char>('a' + rng.next_below(26));
  return w;
}

}  // namespace

SyntheticResult generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_intents < 1)
    throw ConfigError("generate_synthetic: n_intents must be >= 1");
  if (spec.n_conversations < 1)
    throw ConfigError("generate_synthetic: n_conversations must be >= 1");
  if (!(spec.noise_rate >= 0.0 && spec.noise_rate < 1.0))
    throw ConfigError("generate_synthetic: noise_rate must be in [0, 1)");
  if (spec.min_turns < 1 || spec.max_turns < spec.min_turns)
    throw ConfigError("generate_synthetic: bad turn range");

  const int n = spec.n_intents;
  std::vector<std::vector<int>> out_edges(n);
  for (const auto& [u, v] : spec.ground_truth_edges) {
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw ConfigError("generate_synthetic: planted edge out of range");
    if (u == v)
      throw ConfigError("generate_synthetic: planted self-loop not allowed");
    out_edges[u].push_back(v);
  }
  for (auto& o : out_edges) {
    std::sort(o.begin(), o.end());
    o.erase(std::unique(o.begin(), o.end()), o.end());
  }
  // Off-graph successors per node: every other node that is not a planted
  // target of it.
  std::vector<std::vector<int>> off_edges(n);
  for (int u = 0; u < n; ++u) {
    std::set<int> planted(out_edges[u].begin(), out_edges[u].end());
    for (int v = 0; v < n; ++v)
      if (v != u && !planted.contains(v)) off_edges[u].push_back(v);
  }

  const SplitMix64 root(spec.seed);
  SplitMix64 vocab_rng = root.split(0);
  SplitMix64 walk_rng = root.split(1);

  // One fixed text template per intent (three distinctive keywords). Exact
  // repetition keeps the within-intent embedding spread at zero, so k-means++
  // seeding cannot burn two seeds on one intent and the planted partition is
  // always recoverable.
  std::vector<std::string> templates(n);
  for (auto& t : templates)
    t = random_word(vocab_rng, 7) + " " + random_word(vocab_rng, 7) + " " +
        random_word(vocab_rng, 7);

  SyntheticResult res;
  res.edges = spec.ground_truth_edges;
  std::sort(res.edges.begin(), res.edges.end());
  res.edges.erase(std::unique(res.edges.begin(), res.edges.end()),
                  res.edges.end());

  std::vector<char> visited(n, 0);
  std::string jsonl;
  for (int c = 0; c < spec.n_conversations; ++c) {
    const int len_target =
        spec.min_turns +
        static_cast<int>(walk_rng.next_below(
            static_cast<std::uint64_t>(spec.max_turns - spec.min_turns + 1)));
    int cur = static_cast<int>(walk_rng.next_below(n));
    std::vector<int> flow{cur};
    while (static_cast<int>(flow.size()) < len_target) {
      const bool noise = walk_rng.next_double() < spec.noise_rate;
      int next;
      if (noise && !off_edges[cur].empty()) {
        next = off_edges[cur][walk_rng.next_below(off_edges[cur].size())];
      } else if (!out_edges[cur].empty()) {
        next = out_edges[cur][walk_rng.next_below(out_edges[cur].size())];
      } else {
        break;  // sink reached and the noise jump did not fire
      }
      flow.push_back(next);
      cur = next;
    }

    nlohmann::json turns = nlohmann::json::array();
    for (std::size_t t = 0; t < flow.size(); ++t) {
      turns.push_back({{"speaker", t % 2 == 0 ? "customer" : "agent"},
                       {"text", templates[flow[t]]}});
      visited[flow[t]] = 1;
    }
    const nlohmann::json line = {{"id", "synth-" + std::to_string(c)},
                                 {"turns", std::move(turns)}};
    jsonl += line.dump();
    jsonl += '\n';
    res.true_flows.push_back(std::move(flow));
  }
  res.corpus_jsonl = std::move(jsonl);
  for (int i = 0; i < n; ++i)
    if (!visited[i]) res.unvisited_intents.push_back(i);
  return res;
}

void write_synthetic(const SyntheticResult& result,
                     const std::filesystem::path& corpus_path,
                     const std::filesystem::path& truth_path) {
  {
    std::ofstream out(corpus_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + corpus_path.string());
    out << result.corpus_jsonl;
    if (!out) throw IoError("failed writing " + corpus_path.string());
  }
  std::ofstream out(truth_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + truth_path.string());
  for (std::size_t i = 0; i < result.true_flows.size(); ++i) {
    const nlohmann::json line = {{"id", "synth-" + std::to_string(i)},
                                 {"intents", result.true_flows[i]}};
    out << line.dump() << '\n';
  }
  if (!out) throw IoError("failed writing " + truth_path.string());
}

}  // namespace convograph
