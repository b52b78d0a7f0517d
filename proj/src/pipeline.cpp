#include "convograph/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "convograph/errors.hpp"

namespace convograph {
namespace {

std::uint64_t fnv1a(std::string_view s,
                    std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& p, const std::string& contents) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << contents;
  if (!out) throw IoError("failed writing " + p.string());
}

// Stage keys recorded per artifact; a stage is reloaded from its artifact
// when its key matches.
struct Manifest {
  std::filesystem::path path;
  nlohmann::json j = nlohmann::json::object();

  static Manifest load(const std::filesystem::path& dir) {
    Manifest m;
    m.path = dir / "manifest.json";
    std::ifstream in(m.path);
    if (in) {
      try {
        in >> m.j;
      } catch (...) {
        m.j = nlohmann::json::object();
      }
    }
    if (!m.j.is_object()) m.j = nlohmann::json::object();
    return m;
  }

  bool fresh(const std::string& stage, const std::string& key) const {
    return j.contains(stage) && j[stage].is_string() &&
           j[stage].get<std::string>() == key;
  }

  void set(const std::string& stage, const std::string& key) {
    j[stage] = key;
    write_file(path, j.dump(2) + "\n");
  }
};

std::string embedding_params(const EmbeddingProviderConfig& e) {
  std::ostringstream s;
  s << static_cast<int>(e.kind) << '|' << e.endpoint_url << '|'
    << e.file_path.string() << '|' << e.model_name << '|' << e.batch_size
    << '|' << e.seed << '|' << e.dim;
  return s.str();
}

std::string labeler_params(const LabelerConfig& l) {
  std::ostringstream s;
  s << static_cast<int>(l.kind) << '|' << l.endpoint_url << '|' << l.model_name
    << '|' << l.n_exemplars << '|' << l.temperature << '|' << l.max_retries
    << '|' << l.allow_fallback << '|' << kLabelPromptVersion;
  return s.str();
}

std::string speaker_filter_repr(const SpeakerFilter& f) {
  if (!f) return "all";
  std::string out;
  for (Speaker s : *f) {
    out += to_string(s);
    out += ',';
  }
  return out;
}

std::string escape_dot(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out;
}

}  // namespace

void validate(const PipelineConfig& config) {
  if (config.input_path.empty()) throw ConfigError("input path is required");
  if (config.output_dir.empty()) throw ConfigError("output dir is required");
  if (config.n_clusters < 1) throw ConfigError("n_clusters must be >= 1");
  if (!(config.tau >= 0.0 && config.tau <= 1.0))
    throw ConfigError("tau must be in [0, 1]");
  if (config.k < 1) throw ConfigError("k must be >= 1");
  if (config.max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(config.tol > 0.0)) throw ConfigError("tol must be > 0");
  if (config.embedding.batch_size < 1)
    throw ConfigError("batch_size must be >= 1");
  if (config.embedding.kind == EmbedderKind::http_service &&
      config.embedding.endpoint_url.empty())
    throw ConfigError("http embedder requires an endpoint URL");
  if (config.embedding.kind == EmbedderKind::precomputed_file &&
      config.embedding.file_path.empty())
    throw ConfigError("precomputed embedder requires a file path");
  if (config.labeler.kind == LabelerKind::llm_http &&
      config.labeler.endpoint_url.empty())
    throw ConfigError("llm labeler requires an endpoint URL");
  if (config.labeler.n_exemplars < 1)
    throw ConfigError("n_exemplars must be >= 1");
  if (config.labeler.temperature < 0.0)
    throw ConfigError("temperature must be >= 0");
}

std::string to_dot(const FlowGraph& g, bool drop_isolated) {
  std::set<int> connected;
  for (const auto& e : g.edges) {
    connected.insert(e.src);
    connected.insert(e.dst);
  }
  std::string out = "digraph conversational_graph {\n  rankdir=LR;\n  node [shape=box];\n";
  for (const auto& n : g.nodes) {
    if (drop_isolated && !connected.contains(n.cluster_id)) continue;
    out += "  n" + std::to_string(n.cluster_id) + " [label=\"" +
           escape_dot(n.label) + "\"];\n";
  }
  char w[32];
  for (const auto& e : g.edges) {
    std::snprintf(w, sizeof w, "%.2f", e.weight);
    out += "  n" + std::to_string(e.src) + " -> n" + std::to_string(e.dst) +
           " [label=\"" + w + "\"];\n";
  }
  out += "}\n";
  return out;
}

void export_dot(const FlowGraph& g, const std::filesystem::path& path,
                bool drop_isolated) {
  write_file(path, to_dot(g, drop_isolated));
}

MetricsReport run_pipeline(const PipelineConfig& config) {
  validate(config);
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec)
    throw IoError("cannot create output dir: " + config.output_dir.string());
  Manifest manifest = Manifest::load(config.output_dir);

  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
  };

  // ingest
  std::string corpus_key;
  const Corpus corpus = stage("ingest", [&] {
    const std::string bytes = read_file(config.input_path);
    corpus_key =
        hex64(fnv1a(speaker_filter_repr(config.speaker_filter), fnv1a(bytes)));
    return parse_corpus_jsonl(bytes, config.speaker_filter);
  });

  // embed
  const auto embeddings_path = config.output_dir / "embeddings.bin";
  const std::string embed_key =
      hex64(fnv1a(embedding_params(config.embedding), fnv1a(corpus_key)));
  const EmbeddingMatrix embeddings = stage("embed", [&] {
    if (manifest.fresh("embeddings", embed_key) &&
        std::filesystem::exists(embeddings_path)) {
      EmbeddingMatrix m = read_embedding_cache(embeddings_path);
      if (m.rows() == corpus.total_utterances) return m;
    }
    EmbeddingMatrix m = embed_corpus(corpus, config.embedding);
    write_embedding_cache(embeddings_path, m);
    manifest.set("embeddings", embed_key);
    return m;
  });

  // cluster
  std::ostringstream cluster_params;
  cluster_params << config.n_clusters << '|' << config.seed << '|'
                 << config.max_iters << '|' << config.tol;
  const std::string cluster_key =
      hex64(fnv1a(cluster_params.str(), fnv1a(embed_key)));
  const auto clustering_path = config.output_dir / "clustering.json";
  const Clustering clustering = stage("cluster", [&] {
    if (manifest.fresh("clustering", cluster_key) &&
        std::filesystem::exists(clustering_path)) {
      Clustering c = clustering_from_json(read_file(clustering_path));
      if (c.assignments.size() == corpus.total_utterances &&
          c.n_clusters == config.n_clusters)
        return c;
    }
    Clustering c = kmeans_pp(embeddings, config.n_clusters, config.seed,
                             config.max_iters, config.tol);
    write_file(clustering_path, clustering_to_json(c));
    manifest.set("clustering", cluster_key);
    return c;
  });

  // label
  const std::string labels_key =
      hex64(fnv1a(labeler_params(config.labeler), fnv1a(cluster_key)));
  const auto labels_path = config.output_dir / "labels.json";
  const std::vector<IntentLabel> labels = stage("label", [&] {
    if (manifest.fresh("labels", labels_key) &&
        std::filesystem::exists(labels_path)) {
      auto ls = labels_from_json(read_file(labels_path));
      if (ls.size() == clustering.n_clusters) return ls;
    }
    auto ls = label_clusters(clustering, corpus, embeddings, config.labeler);
    write_file(labels_path, labels_to_json(ls));
    manifest.set("labels", labels_key);
    return ls;
  });

  // graph (flows are cheap and always recomputed from the clustering)
  const FlowSet flows = build_flows(corpus, clustering);
  std::ostringstream graph_params;
  graph_params << to_string(config.method) << '|' << config.tau << '|'
               << config.k << '|' << config.seed;
  const std::string graph_key =
      hex64(fnv1a(graph_params.str(), fnv1a(labels_key)));
  const auto graph_path = config.output_dir / "graph.json";
  const FlowGraph graph = stage("graph", [&] {
    write_file(config.output_dir / "flows.json", flows_to_json(flows));
    if (manifest.fresh("graph", graph_key) &&
        std::filesystem::exists(graph_path))
      return graph_from_json(read_file(graph_path));
    const TransitionMatrix tm =
        build_transition_matrix(flows, static_cast<int>(config.n_clusters));
    const std::vector<std::string> node_labels = display_labels(labels);
    FlowGraph g;
    switch (config.method) {
      case SimplifyMethod::none:
        g = simplify_none(tm, node_labels);
        break;
      case SimplifyMethod::threshold:
        g = simplify_threshold(tm, node_labels, config.tau);
        break;
      case SimplifyMethod::topk:
        g = simplify_topk(tm, node_labels, config.k, config.tau);
        break;
      case SimplifyMethod::filter_reconnect:
        g = simplify_filter_reconnect(tm, node_labels, config.k, config.tau);
        break;
    }
    write_file(graph_path, graph_to_json(g, config.seed));
    write_file(config.output_dir / "graph.dot",
               to_dot(g, config.drop_isolated_nodes));
    manifest.set("graph", graph_key);
    return g;
  });

  // metrics
  const std::string metrics_key =
      hex64(fnv1a(to_string(config.mu_source), fnv1a(graph_key)));
  const auto metrics_path = config.output_dir / "metrics.json";
  return stage("metrics", [&] {
    if (manifest.fresh("metrics", metrics_key) &&
        std::filesystem::exists(metrics_path)) {
      MetricsReport r = metrics_from_json(read_file(metrics_path));
      CoverageDetail cov = coverage_detail(flows, graph);
      r.per_flow_tas = std::move(cov.per_flow_tas);
      return r;
    }
    EmbeddingMatrix label_vectors;
    const EmbeddingMatrix* label_vectors_ptr = nullptr;
    if (config.mu_source == MuSource::label_embedding) {
      label_vectors = embed_labels(labels, config.embedding);
      label_vectors_ptr = &label_vectors;
    }
    const MetricsReport r =
        compute_metrics(graph, flows, &clustering, &embeddings,
                        config.mu_source, label_vectors_ptr);
    write_file(metrics_path,
               metrics_to_json(r, config.method, config.tau, config.k,
                               config.n_clusters, config.seed));
    manifest.set("metrics", metrics_key);
    return r;
  });
}

}  // namespace convograph
