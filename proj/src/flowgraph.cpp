#include "convograph/flowgraph.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <utility>

#include <json.hpp>

#include "convograph/errors.hpp"

namespace convograph {

const char* to_string(SimplifyMethod m) {
  switch (m) {
    case SimplifyMethod::none:
      return "none";
    case SimplifyMethod::threshold:
      return "threshold";
    case SimplifyMethod::topk:
      return "topk";
    case SimplifyMethod::filter_reconnect:
      return "filter_reconnect";
  }
  return "none";
}

std::optional<SimplifyMethod> simplify_method_from_string(std::string_view s) {
  if (s == "none") return SimplifyMethod::none;
  if (s == "threshold") return SimplifyMethod::threshold;
  if (s == "topk") return SimplifyMethod::topk;
  if (s == "filter_reconnect") return SimplifyMethod::filter_reconnect;
  return std::nullopt;
}

bool FlowGraph::has_edge(int src, int dst) const {
  const auto key = std::pair{src, dst};
  auto it = std::lower_bound(edges.begin(), edges.end(), key,
                             [](const GraphEdge& e, const std::pair<int, int>& p) {
                               return std::pair{e.src, e.dst} < p;
                             });
  return it != edges.end() && it->src == src && it->dst == dst;
}

FlowSet build_flows(const Corpus& corpus, const Clustering& clustering) {
  if (clustering.assignments.size() != corpus.total_utterances)
    throw ConfigError("build_flows: clustering and corpus are misaligned");
  FlowSet fs;
  fs.flows.reserve(corpus.conversations.size());
  fs.conversation_ids.reserve(corpus.conversations.size());
  std::size_t idx = 0;
  for (const auto& conv : corpus.conversations) {
    std::vector<int> flow;
    flow.reserve(conv.utterances.size());
    for (std::size_t t = 0; t < conv.utterances.size(); ++t)
      flow.push_back(clustering.assignments[idx++]);
    fs.conversation_ids.push_back(conv.id);
    fs.flows.push_back(std::move(flow));
  }
  return fs;
}

TransitionMatrix build_transition_matrix(const FlowSet& flows, int n_clusters) {
  if (n_clusters < 1)
    throw ConfigError("build_transition_matrix: n_clusters must be >= 1");
  TransitionMatrix tm;
  tm.n_clusters = n_clusters;
  tm.counts.assign(n_clusters, std::vector<std::int64_t>(n_clusters, 0));
  tm.probs.assign(n_clusters, std::vector<double>(n_clusters, 0.0));
  for (const auto& flow : flows.flows) {
    for (int id : flow)
      if (id < 0 || id >= n_clusters)
        throw ConfigError("build_transition_matrix: cluster id out of range: " +
                          std::to_string(id));
    for (std::size_t j = 0; j + 1 < flow.size(); ++j)
      ++tm.counts[flow[j]][flow[j + 1]];
  }
  for (int i = 0; i < n_clusters; ++i) {
    std::int64_t total = 0;
    for (int j = 0; j < n_clusters; ++j) total += tm.counts[i][j];
    if (total == 0) continue;  // row stays all-zero
    for (int j = 0; j < n_clusters; ++j)
      tm.probs[i][j] = static_cast<double>(tm.counts[i][j]) /
                       static_cast<double>(total);
  }
  return tm;
}

std::vector<std::string> default_labels(int n_clusters) {
  std::vector<std::string> out;
  out.reserve(n_clusters);
  for (int i = 0; i < n_clusters; ++i)
    out.push_back("cluster " + std::to_string(i));
  return out;
}

namespace {

void check_tau(double tau) {
  if (!(tau >= 0.0 && tau <= 1.0))
    throw ConfigError("tau must be in [0, 1]");
}

void check_k(int k) {
  if (k < 1) throw ConfigError("k must be >= 1");
}

bool edge_order(const GraphEdge& a, const GraphEdge& b) {
  return std::pair{a.src, a.dst} < std::pair{b.src, b.dst};
}

std::vector<GraphEdge> positive_edges(const TransitionMatrix& tm) {
  std::vector<GraphEdge> out;
  for (int i = 0; i < tm.n_clusters; ++i)
    for (int j = 0; j < tm.n_clusters; ++j)
      if (tm.probs[i][j] > 0.0) out.push_back({i, j, tm.probs[i][j]});
  return out;  // already ascending (src, dst)
}

FlowGraph make_graph(const TransitionMatrix& tm,
                     const std::vector<std::string>& labels,
                     std::vector<GraphEdge> edges, Provenance prov) {
  if (static_cast<int>(labels.size()) != tm.n_clusters)
    throw ConfigError("graph labels must have one entry per cluster");
  FlowGraph g;
  g.provenance = prov;
  g.nodes.reserve(tm.n_clusters);
  for (int i = 0; i < tm.n_clusters; ++i) g.nodes.push_back({i, labels[i]});
  std::sort(edges.begin(), edges.end(), edge_order);
  g.edges = std::move(edges);
  return g;
}

// Heavier first; weight ties resolved by the given id (ascending).
bool heavier(const GraphEdge& a, const GraphEdge& b, bool tie_on_src) {
  if (a.weight != b.weight) return a.weight > b.weight;
  return tie_on_src ? a.src < b.src : a.dst < b.dst;
}

}  // namespace

FlowGraph simplify_none(const TransitionMatrix& tm,
                        const std::vector<std::string>& labels) {
  return make_graph(tm, labels, positive_edges(tm),
                    {SimplifyMethod::none, 0.0, 0});
}

FlowGraph simplify_threshold(const TransitionMatrix& tm,
                             const std::vector<std::string>& labels,
                             double tau) {
  check_tau(tau);
  std::vector<GraphEdge> kept;
  for (const auto& e : positive_edges(tm))
    if (e.weight >= tau) kept.push_back(e);
  return make_graph(tm, labels, std::move(kept),
                    {SimplifyMethod::threshold, tau, 0});
}

FlowGraph simplify_topk(const TransitionMatrix& tm,
                        const std::vector<std::string>& labels, int k,
                        double tau) {
  check_tau(tau);
  check_k(k);
  std::vector<std::vector<GraphEdge>> by_src(tm.n_clusters);
  for (const auto& e : positive_edges(tm))
    if (e.weight >= tau) by_src[e.src].push_back(e);
  std::vector<GraphEdge> kept;
  for (auto& bucket : by_src) {
    std::sort(bucket.begin(), bucket.end(),
              [](const GraphEdge& a, const GraphEdge& b) {
                return heavier(a, b, /*tie_on_src=*/false);
              });
    for (std::size_t i = 0; i < bucket.size() && i < static_cast<std::size_t>(k);
         ++i)
      kept.push_back(bucket[i]);
  }
  return make_graph(tm, labels, std::move(kept),
                    {SimplifyMethod::topk, tau, k});
}

namespace detail {

std::vector<GraphEdge> filter_incoming_topk(const TransitionMatrix& tm, int k,
                                            double tau,
                                            std::vector<GraphEdge>* removed) {
  auto drop = [&](const GraphEdge& e) {
    if (removed) removed->push_back(e);
  };
  std::vector<std::vector<GraphEdge>> by_dst(tm.n_clusters);
  for (const auto& e : positive_edges(tm)) {
    if (e.src == e.dst || e.weight < tau)
      drop(e);
    else
      by_dst[e.dst].push_back(e);
  }
  std::vector<GraphEdge> kept;
  for (auto& bucket : by_dst) {
    std::sort(bucket.begin(), bucket.end(),
              [](const GraphEdge& a, const GraphEdge& b) {
                return heavier(a, b, /*tie_on_src=*/true);
              });
    for (std::size_t i = 0; i < bucket.size(); ++i) {
      if (i < static_cast<std::size_t>(k))
        kept.push_back(bucket[i]);
      else
        drop(bucket[i]);
    }
  }
  std::sort(kept.begin(), kept.end(), edge_order);
  return kept;
}

std::vector<int> find_one_cycle(int n_nodes,
                                const std::vector<GraphEdge>& edges) {
  std::vector<std::vector<int>> adj(n_nodes);
  for (const auto& e : edges) adj[e.src].push_back(e.dst);
  for (auto& a : adj) std::sort(a.begin(), a.end());

  enum : char { kWhite, kGray, kBlack };
  std::vector<char> color(n_nodes, kWhite);
  std::vector<int> path;
  std::vector<int> cycle;

  std::function<bool(int)> dfs = [&](int u) -> bool {
    color[u] = kGray;
    path.push_back(u);
    for (int v : adj[u]) {
      if (color[v] == kGray) {
        const auto it = std::find(path.begin(), path.end(), v);
        cycle.assign(it, path.end());
        return true;
      }
      if (color[v] == kWhite && dfs(v)) return true;
    }
    color[u] = kBlack;
    path.pop_back();
    return false;
  };

  for (int s = 0; s < n_nodes; ++s)
    if (color[s] == kWhite && dfs(s)) return cycle;
  return {};
}

std::vector<int> weak_components(int n_nodes,
                                 const std::vector<GraphEdge>& edges) {
  std::vector<int> parent(n_nodes);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& e : edges) {
    const int a = find(e.src);
    const int b = find(e.dst);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<int> comp(n_nodes);
  for (int i = 0; i < n_nodes; ++i) comp[i] = find(i);
  return comp;
}

}  // namespace detail

namespace {

bool reaches(int from, int to, int n_nodes,
             const std::vector<GraphEdge>& edges) {
  std::vector<std::vector<int>> adj(n_nodes);
  for (const auto& e : edges) adj[e.src].push_back(e.dst);
  std::vector<char> seen(n_nodes, 0);
  std::vector<int> stack{from};
  seen[from] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    if (u == to) return true;
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        stack.push_back(v);
      }
  }
  return false;
}

}  // namespace

FlowGraph simplify_filter_reconnect(const TransitionMatrix& tm,
                                    const std::vector<std::string>& labels,
                                    int k, double tau) {
  check_tau(tau);
  check_k(k);
  std::vector<GraphEdge> removed;
  std::vector<GraphEdge> edges =
      detail::filter_incoming_topk(tm, k, tau, &removed);

  // Cycle removal: delete the weakest edge of some cycle until acyclic.
  // Ties inside a cycle resolve to the lexicographically smallest (src, dst).
  for (;;) {
    const std::vector<int> cyc = detail::find_one_cycle(tm.n_clusters, edges);
    if (cyc.empty()) break;
    GraphEdge victim{};
    bool have = false;
    for (std::size_t i = 0; i < cyc.size(); ++i) {
      const int u = cyc[i];
      const int v = cyc[(i + 1) % cyc.size()];
      const auto it =
          std::find_if(edges.begin(), edges.end(), [&](const GraphEdge& e) {
            return e.src == u && e.dst == v;
          });
      const GraphEdge e = *it;
      if (!have || e.weight < victim.weight ||
          (e.weight == victim.weight &&
           std::pair{e.src, e.dst} < std::pair{victim.src, victim.dst})) {
        victim = e;
        have = true;
      }
    }
    std::erase_if(edges, [&](const GraphEdge& e) {
      return e.src == victim.src && e.dst == victim.dst;
    });
    removed.push_back(victim);
  }

  // Reconnection: repeatedly restore the single strongest removed edge whose
  // endpoints lie in different weak components. Such an edge cannot close a
  // directed cycle (there is no path between distinct weak components), but
  // the reachability guard stays as a hard invariant check.
  for (;;) {
    const std::vector<int> comp =
        detail::weak_components(tm.n_clusters, edges);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < removed.size(); ++i)
      if (comp[removed[i].src] != comp[removed[i].dst]) candidates.push_back(i);
    if (candidates.empty()) break;
    std::sort(candidates.begin(), candidates.end(),
              [&](std::size_t a, std::size_t b) {
                const GraphEdge& ea = removed[a];
                const GraphEdge& eb = removed[b];
                if (ea.weight != eb.weight) return ea.weight > eb.weight;
                return std::pair{ea.src, ea.dst} < std::pair{eb.src, eb.dst};
              });
    bool added = false;
    for (std::size_t idx : candidates) {
      const GraphEdge e = removed[idx];
      if (reaches(e.dst, e.src, tm.n_clusters, edges)) continue;
      edges.push_back(e);
      removed.erase(removed.begin() + static_cast<std::ptrdiff_t>(idx));
      added = true;
      break;
    }
    if (!added) break;
  }

  return make_graph(tm, labels, std::move(edges),
                    {SimplifyMethod::filter_reconnect, tau, k});
}

std::vector<std::vector<int>> find_directed_cycles(const FlowGraph& g) {
  // Dense reindex of node ids; edges must reference known nodes.
  std::vector<int> ids;
  ids.reserve(g.nodes.size());
  for (const auto& n : g.nodes) ids.push_back(n.cluster_id);
  std::sort(ids.begin(), ids.end());
  std::map<int, int> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = static_cast<int>(i);
  const int n = static_cast<int>(ids.size());

  std::vector<std::vector<int>> adj(n);
  for (const auto& e : g.edges) {
    const auto si = index.find(e.src);
    const auto di = index.find(e.dst);
    if (si == index.end() || di == index.end())
      throw ConfigError("find_directed_cycles: edge references unknown node");
    adj[si->second].push_back(di->second);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());

  // Johnson-style enumeration: for each start s in ascending order, emit the
  // cycles whose smallest vertex is s, restricted to the subgraph on
  // {s, ..., n-1}. The blocked/unblock bookkeeping guarantees each simple
  // cycle is produced exactly once.
  std::vector<std::vector<int>> cycles;
  std::vector<char> blocked(n, 0);
  std::vector<std::set<int>> block_map(n);
  std::vector<int> stack;
  int start = 0;

  std::function<void(int)> unblock = [&](int u) {
    blocked[u] = 0;
    std::set<int> pending = std::move(block_map[u]);
    block_map[u].clear();
    for (int w : pending)
      if (blocked[w]) unblock(w);
  };

  std::function<bool(int)> circuit = [&](int v) -> bool {
    bool found = false;
    stack.push_back(v);
    blocked[v] = 1;
    for (int w : adj[v]) {
      if (w < start) continue;
      if (w == start) {
        std::vector<int> cyc;
        cyc.reserve(stack.size());
        for (int u : stack) cyc.push_back(ids[u]);
        cycles.push_back(std::move(cyc));
        found = true;
      } else if (!blocked[w]) {
        if (circuit(w)) found = true;
      }
    }
    if (found) {
      unblock(v);
    } else {
      for (int w : adj[v])
        if (w >= start) block_map[w].insert(v);
    }
    stack.pop_back();
    return found;
  };

  for (start = 0; start < n; ++start) {
    std::fill(blocked.begin(), blocked.end(), 0);
    for (auto& s : block_map) s.clear();
    circuit(start);
  }
  std::sort(cycles.begin(), cycles.end());
  return cycles;
}

std::string graph_to_json(const FlowGraph& g, std::uint64_t seed) {
  nlohmann::json j;
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : g.nodes)
    nodes.push_back({{"id", n.cluster_id}, {"label", n.label}});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges)
    edges.push_back({{"src", e.src}, {"dst", e.dst}, {"weight", e.weight}});
  j["nodes"] = std::move(nodes);
  j["edges"] = std::move(edges);
  j["provenance"] = {{"method", to_string(g.provenance.method)},
                     {"tau", g.provenance.tau},
                     {"k", g.provenance.k},
                     {"seed", seed}};
  return j.dump(2) + "\n";
}

FlowGraph graph_from_json(const std::string& text, std::uint64_t* seed) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("graph JSON: ") + e.what());
  }
  FlowGraph g;
  try {
    for (const auto& n : j.at("nodes"))
      g.nodes.push_back(
          {n.at("id").get<int>(), n.at("label").get<std::string>()});
    for (const auto& e : j.at("edges"))
      g.edges.push_back({e.at("src").get<int>(), e.at("dst").get<int>(),
                         e.at("weight").get<double>()});
    const auto& prov = j.at("provenance");
    const auto method =
        simplify_method_from_string(prov.at("method").get<std::string>());
    if (!method) throw IoError("graph JSON: unknown simplify method");
    g.provenance.method = *method;
    g.provenance.tau = prov.at("tau").get<double>();
    g.provenance.k = prov.at("k").get<int>();
    if (seed) *seed = prov.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("graph JSON: ") + e.what());
  }
  std::sort(g.nodes.begin(), g.nodes.end(),
            [](const GraphNode& a, const GraphNode& b) {
              return a.cluster_id < b.cluster_id;
            });
  std::sort(g.edges.begin(), g.edges.end(), edge_order);
  return g;
}

std::string flows_to_json(const FlowSet& flows) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < flows.flows.size(); ++i) {
    const std::string id = i < flows.conversation_ids.size()
                               ? flows.conversation_ids[i]
                               : std::to_string(i);
    arr.push_back({{"id", id}, {"flow", flows.flows[i]}});
  }
  return arr.dump(2) + "\n";
}

FlowSet flows_from_json(const std::string& text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("flows JSON: ") + e.what());
  }
  if (!arr.is_array()) throw IoError("flows JSON: expected an array");
  FlowSet fs;
  try {
    for (const auto& j : arr) {
      fs.conversation_ids.push_back(j.at("id").get<std::string>());
      fs.flows.push_back(j.at("flow").get<std::vector<int>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("flows JSON: ") + e.what());
  }
  return fs;
}

}  // namespace convograph
