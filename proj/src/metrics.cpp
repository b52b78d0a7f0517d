#include "convograph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

#include <json.hpp>

#include "convograph/errors.hpp"

namespace convograph {

const char* to_string(MuSource m) {
  return m == MuSource::centroid ? "centroid" : "label_embedding";
}

std::optional<MuSource> mu_source_from_string(std::string_view s) {
  if (s == "centroid") return MuSource::centroid;
  if (s == "label_embedding") return MuSource::label_embedding;
  return std::nullopt;
}

double branching_factor(const FlowGraph& g) {
  if (g.nodes.empty()) throw ConfigError("branching_factor: graph has no nodes");
  return static_cast<double>(g.edges.size()) /
         static_cast<double>(g.nodes.size());
}

std::int64_t count_simple_cycles(const FlowGraph& g) {
  return static_cast<std::int64_t>(find_directed_cycles(g).size());
}

double delta_hyperbolicity(const FlowGraph& g) {
  const int n = static_cast<int>(g.nodes.size());
  if (n < 4) return 0.0;

  std::map<int, int> index;
  for (int i = 0; i < n; ++i) index[g.nodes[i].cluster_id] = i;

  // Undirected underlying simple graph: directions collapsed, self-loops
  // dropped.
  std::vector<std::set<int>> und(n);
  for (const auto& e : g.edges) {
    if (e.src == e.dst) continue;
    const auto si = index.find(e.src);
    const auto di = index.find(e.dst);
    if (si == index.end() || di == index.end())
      throw ConfigError("delta_hyperbolicity: edge references unknown node");
    und[si->second].insert(di->second);
    und[di->second].insert(si->second);
  }

  // All-pairs BFS with unit edge lengths; -1 marks unreachable.
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
  for (int s = 0; s < n; ++s) {
    dist[s][s] = 0;
    std::deque<int> queue{s};
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int v : und[u]) {
        if (dist[s][v] >= 0) continue;
        dist[s][v] = dist[s][u] + 1;
        queue.push_back(v);
      }
    }
  }

  // Connected components; quadruples never span two components.
  std::vector<int> comp(n, -1);
  int n_comp = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    const int c = n_comp++;
    std::deque<int> queue{s};
    comp[s] = c;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int v : und[u])
        if (comp[v] < 0) {
          comp[v] = c;
          queue.push_back(v);
        }
    }
  }
  std::vector<std::vector<int>> members(n_comp);
  for (int v = 0; v < n; ++v) members[comp[v]].push_back(v);

  int best = 0;
  for (const auto& vs : members) {
    const std::size_t m = vs.size();
    if (m < 4) continue;  // contributes 0
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a + 1; b < m; ++b)
        for (std::size_t c = b + 1; c < m; ++c)
          for (std::size_t d = c + 1; d < m; ++d) {
            const int u = vs[a], v = vs[b], w = vs[c], x = vs[d];
            const int s1 = dist[u][v] + dist[w][x];
            const int s2 = dist[u][w] + dist[v][x];
            const int s3 = dist[u][x] + dist[v][w];
            const int hi = std::max({s1, s2, s3});
            const int lo = std::min({s1, s2, s3});
            const int mid = s1 + s2 + s3 - hi - lo;
            best = std::max(best, hi - mid);
          }
  }
  return static_cast<double>(best) / 2.0;
}

double semantic_coherence(const Clustering& clustering,
                          const EmbeddingMatrix& embeddings,
                          MuSource mu_source,
                          const EmbeddingMatrix* label_vectors) {
  if (embeddings.rows() != clustering.assignments.size())
    throw ConfigError("semantic_coherence: misaligned inputs");
  if (embeddings.rows() == 0)
    throw ConfigError("semantic_coherence: empty inputs");
  if (mu_source == MuSource::label_embedding) {
    if (!label_vectors)
      throw ConfigError("semantic_coherence: label_embedding requires label vectors");
    if (label_vectors->rows() != clustering.n_clusters)
      throw ConfigError("semantic_coherence: label vectors misaligned");
  }

  // Pre-check representative norms so the error names the cluster.
  const std::size_t k = clustering.n_clusters;
  for (std::size_t c = 0; c < k; ++c) {
    const auto mu = mu_source == MuSource::centroid ? clustering.centroid(c)
                                                    : label_vectors->row(c);
    double sq = 0.0;
    for (double v : mu) sq += v * v;
    if (sq == 0.0)
      throw ConfigError("semantic_coherence: zero-norm centroid for cluster " +
                        std::to_string(c));
  }

  double sum = 0.0;
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    const auto c = static_cast<std::size_t>(clustering.assignments[i]);
    const auto mu = mu_source == MuSource::centroid ? clustering.centroid(c)
                                                    : label_vectors->row(c);
    sum += cosine_similarity(embeddings.row(i), mu);
  }
  return sum / static_cast<double>(embeddings.rows());
}

double transition_alignment_score(const std::vector<int>& flow,
                                  const FlowGraph& g) {
  if (flow.size() < 2)
    throw ConfigError("transition_alignment_score: flow shorter than 2");
  std::size_t hits = 0;
  for (std::size_t j = 0; j + 1 < flow.size(); ++j)
    if (g.has_edge(flow[j], flow[j + 1])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(flow.size() - 1);
}

CoverageDetail coverage_detail(const FlowSet& flows, const FlowGraph& g) {
  CoverageDetail out;
  double sum = 0.0;
  for (const auto& f : flows.flows) {
    if (f.size() < 2) {
      ++out.excluded_flows;
      continue;
    }
    const double tas = transition_alignment_score(f, g);
    out.per_flow_tas.push_back(tas);
    sum += tas;
  }
  if (out.per_flow_tas.empty())
    throw ConfigError("coverage: no flows of length >= 2");
  out.coverage = sum / static_cast<double>(out.per_flow_tas.size());
  return out;
}

double coverage(const FlowSet& flows, const FlowGraph& g) {
  return coverage_detail(flows, g).coverage;
}

MetricsReport compute_metrics(const FlowGraph& g, const FlowSet& flows,
                              const Clustering* clustering,
                              const EmbeddingMatrix* embeddings,
                              MuSource mu_source,
                              const EmbeddingMatrix* label_vectors) {
  MetricsReport r;
  r.branching_factor = branching_factor(g);
  r.n_cycles = count_simple_cycles(g);
  r.delta_hyperbolicity = delta_hyperbolicity(g);
  CoverageDetail cov = coverage_detail(flows, g);
  r.coverage = cov.coverage;
  r.per_flow_tas = std::move(cov.per_flow_tas);
  r.excluded_flows = cov.excluded_flows;
  if (clustering && embeddings)
    r.semantic_coherence =
        semantic_coherence(*clustering, *embeddings, mu_source, label_vectors);
  return r;
}

std::string metrics_to_json(const MetricsReport& r, SimplifyMethod method,
                            double tau, int k, std::size_t n_clusters,
                            std::uint64_t seed) {
  nlohmann::json j;
  j["branching_factor"] = r.branching_factor;
  j["n_cycles"] = r.n_cycles;
  j["delta"] = r.delta_hyperbolicity;
  if (r.semantic_coherence)
    j["semantic_coherence"] = *r.semantic_coherence;
  else
    j["semantic_coherence"] = nullptr;
  j["coverage"] = r.coverage;
  j["excluded_flows"] = r.excluded_flows;
  j["method"] = to_string(method);
  j["tau"] = tau;
  j["k"] = k;
  j["n_clusters"] = n_clusters;
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

MetricsReport metrics_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("metrics JSON: ") + e.what());
  }
  MetricsReport r;
  try {
    r.branching_factor = j.at("branching_factor").get<double>();
    r.n_cycles = j.at("n_cycles").get<std::int64_t>();
    r.delta_hyperbolicity = j.at("delta").get<double>();
    if (!j.at("semantic_coherence").is_null())
      r.semantic_coherence = j.at("semantic_coherence").get<double>();
    r.coverage = j.at("coverage").get<double>();
    r.excluded_flows = j.at("excluded_flows").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("metrics JSON: ") + e.what());
  }
  return r;
}

}  // namespace convograph
