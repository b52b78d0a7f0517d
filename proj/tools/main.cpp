#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "convograph/errors.hpp"
#include "convograph/pipeline.hpp"
#include "convograph/synthetic.hpp"

namespace {

using namespace convograph;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitStage = 2;

SpeakerFilter parse_speaker_filter(const std::string& spec) {
  if (spec.empty() || spec == "all") return std::nullopt;
  std::set<Speaker> speakers;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto s = speaker_from_string(trim_whitespace(part));
    if (!s)
      throw ConfigError("unknown speaker \"" + part +
                        "\" (expected customer, agent or other)");
    speakers.insert(*s);
  }
  if (speakers.empty()) throw ConfigError("empty speaker filter");
  return speakers;
}

std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << s;
  if (!out) throw IoError("failed writing " + p.string());
}

struct RunOptions {
  std::string input;
  std::string output_dir;
  std::size_t clusters = 20;
  std::uint64_t seed = 42;
  std::string method = "filter_reconnect";
  double tau = 0.1;
  int top_k = 1;
  std::string embedder = "test";
  std::string embedding_url;
  std::string embedding_file;
  std::string embed_model = "all-MiniLM-L12-v2";
  std::size_t embed_dim = 384;
  std::size_t batch_size = 64;
  std::string labeler = "fallback";
  std::string llm_url;
  std::string llm_model;
  std::size_t n_exemplars = 10;
  double temperature = 0.2;
  int max_retries = 2;
  bool no_fallback = false;
  std::string mu_source = "centroid";
  std::string speaker_filter;
  int max_iters = 300;
  double tol = 1e-4;
  bool drop_isolated = false;
};

PipelineConfig to_pipeline_config(const RunOptions& o) {
  PipelineConfig cfg;
  cfg.input_path = o.input;
  cfg.output_dir = o.output_dir;
  cfg.n_clusters = o.clusters;
  cfg.seed = o.seed;
  cfg.tau = o.tau;
  cfg.k = o.top_k;
  cfg.max_iters = o.max_iters;
  cfg.tol = o.tol;
  cfg.drop_isolated_nodes = o.drop_isolated;

  const auto method = simplify_method_from_string(o.method);
  if (!method)
    throw ConfigError("unknown method \"" + o.method +
                      "\" (expected none, threshold, topk or filter_reconnect)");
  cfg.method = *method;

  const auto mu = mu_source_from_string(o.mu_source);
  if (!mu)
    throw ConfigError("unknown mu-source \"" + o.mu_source +
                      "\" (expected centroid or label_embedding)");
  cfg.mu_source = *mu;

  if (o.embedder == "test") {
    cfg.embedding.kind = EmbedderKind::deterministic_test;
  } else if (o.embedder == "http") {
    cfg.embedding.kind = EmbedderKind::http_service;
  } else if (o.embedder == "precomputed") {
    cfg.embedding.kind = EmbedderKind::precomputed_file;
  } else {
    throw ConfigError("unknown embedder \"" + o.embedder +
                      "\" (expected test, http or precomputed)");
  }
  cfg.embedding.endpoint_url = o.embedding_url;
  cfg.embedding.file_path = o.embedding_file;
  cfg.embedding.model_name = o.embed_model;
  cfg.embedding.batch_size = o.batch_size;
  cfg.embedding.seed = o.seed;
  cfg.embedding.dim = o.embed_dim;

  if (o.labeler == "fallback") {
    cfg.labeler.kind = LabelerKind::medoid_fallback;
  } else if (o.labeler == "llm") {
    cfg.labeler.kind = LabelerKind::llm_http;
  } else {
    throw ConfigError("unknown labeler \"" + o.labeler +
                      "\" (expected fallback or llm)");
  }
  cfg.labeler.endpoint_url = o.llm_url;
  cfg.labeler.model_name = o.llm_model;
  cfg.labeler.n_exemplars = o.n_exemplars;
  cfg.labeler.temperature = o.temperature;
  cfg.labeler.max_retries = o.max_retries;
  cfg.labeler.allow_fallback = !o.no_fallback;

  cfg.speaker_filter = parse_speaker_filter(o.speaker_filter);
  return cfg;
}

int cmd_run(const RunOptions& o) {
  const PipelineConfig cfg = to_pipeline_config(o);
  const MetricsReport report = run_pipeline(cfg);
  std::cout << metrics_to_json(report, cfg.method, cfg.tau, cfg.k,
                               cfg.n_clusters, cfg.seed);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"convograph: conversational graph extraction from dialogue corpora"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value config file; flags override");

  // run
  RunOptions run;
  auto* run_cmd = app.add_subcommand(
      "run", "run the full pipeline: ingest, embed, cluster, label, graph, metrics");
  run_cmd->add_option("--input", run.input, "corpus JSONL path")->required();
  run_cmd->add_option("--output-dir", run.output_dir, "artifact directory")
      ->required();
  run_cmd->add_option("--clusters", run.clusters, "number of intent clusters");
  run_cmd->add_option("--seed", run.seed, "global seed");
  run_cmd->add_option("--method", run.method,
                      "none | threshold | topk | filter_reconnect");
  run_cmd->add_option("--tau", run.tau, "edge weight threshold in [0,1]");
  run_cmd->add_option("--top-k", run.top_k, "edges kept per node");
  run_cmd->add_option("--embedder", run.embedder,
                      "test | http | precomputed");
  run_cmd->add_option("--embedding-url", run.embedding_url,
                      "embedding service endpoint (http embedder)");
  run_cmd->add_option("--embedding-file", run.embedding_file,
                      "precomputed embedding file (precomputed embedder)");
  run_cmd->add_option("--embed-model", run.embed_model,
                      "model name sent to the embedding service");
  run_cmd->add_option("--embed-dim", run.embed_dim,
                      "vector width of the test embedder");
  run_cmd->add_option("--batch-size", run.batch_size,
                      "texts per embedding request");
  run_cmd->add_option("--labeler", run.labeler, "fallback | llm");
  run_cmd->add_option("--llm-url", run.llm_url, "LLM endpoint (llm labeler)");
  run_cmd->add_option("--llm-model", run.llm_model, "LLM model name");
  run_cmd->add_option("--n-exemplars", run.n_exemplars,
                      "utterances shown to the labeler per cluster");
  run_cmd->add_option("--temperature", run.temperature, "LLM temperature");
  run_cmd->add_option("--max-retries", run.max_retries,
                      "LLM attempts before falling back");
  run_cmd->add_flag("--no-fallback", run.no_fallback,
                    "fail instead of falling back to medoid labels");
  run_cmd->add_option("--mu-source", run.mu_source,
                      "centroid | label_embedding");
  run_cmd->add_option("--speaker-filter", run.speaker_filter,
                      "comma list of speakers to keep (default all)");
  run_cmd->add_option("--max-iters", run.max_iters, "k-means iteration cap");
  run_cmd->add_option("--tol", run.tol, "k-means centroid shift tolerance");
  run_cmd->add_flag("--drop-isolated", run.drop_isolated,
                    "omit isolated nodes from the DOT export");

  // synthesize
  struct {
    int intents = 10;
    int conversations = 200;
    double noise = 0.0;
    std::uint64_t seed = 0;
    std::string shape = "tree";
    int min_turns = 4;
    int max_turns = 12;
    std::string output;
    std::string truth;
  } synth;
  auto* synth_cmd = app.add_subcommand(
      "synthesize", "generate a synthetic corpus from a planted intent graph");
  synth_cmd->add_option("--intents", synth.intents, "planted intent count");
  synth_cmd->add_option("--conversations", synth.conversations,
                        "conversations to sample");
  synth_cmd->add_option("--noise", synth.noise,
                        "off-graph transition probability in [0,1)");
  synth_cmd->add_option("--seed", synth.seed, "generator seed");
  synth_cmd->add_option("--shape", synth.shape,
                        "chain | ring | tree | random");
  synth_cmd->add_option("--min-turns", synth.min_turns, "walk length minimum");
  synth_cmd->add_option("--max-turns", synth.max_turns, "walk length maximum");
  synth_cmd->add_option("--output", synth.output, "corpus JSONL path")
      ->required();
  synth_cmd->add_option("--truth", synth.truth,
                        "ground-truth intent flows path")
      ->required();

  // metrics
  struct {
    std::string graph;
    std::string flows;
    std::string output;
  } met;
  auto* metrics_cmd = app.add_subcommand(
      "metrics", "recompute structural metrics and coverage from graph.json + flows.json");
  metrics_cmd->add_option("--graph", met.graph, "graph.json path")->required();
  metrics_cmd->add_option("--flows", met.flows, "flows.json path")->required();
  metrics_cmd->add_option("--output", met.output,
                          "metrics JSON path (stdout when omitted)");

  // export
  struct {
    std::string graph;
    std::string output;
    bool drop_isolated = false;
  } exp;
  auto* export_cmd =
      app.add_subcommand("export", "render graph.json to Graphviz DOT");
  export_cmd->add_option("--graph", exp.graph, "graph.json path")->required();
  export_cmd->add_option("--output", exp.output, "DOT output path")
      ->required();
  export_cmd->add_flag("--drop-isolated", exp.drop_isolated,
                       "omit isolated nodes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run);

    if (synth_cmd->parsed()) {
      const auto shape = planted_shape_from_string(synth.shape);
      if (!shape)
        throw ConfigError("unknown shape \"" + synth.shape +
                          "\" (expected chain, ring, tree or random)");
      SyntheticSpec spec;
      spec.n_intents = synth.intents;
      spec.n_conversations = synth.conversations;
      spec.noise_rate = synth.noise;
      spec.seed = synth.seed;
      spec.min_turns = synth.min_turns;
      spec.max_turns = synth.max_turns;
      spec.ground_truth_edges =
          planted_edges(*shape, synth.intents, synth.seed);
      const SyntheticResult result = generate_synthetic(spec);
      write_synthetic(result, synth.output, synth.truth);
      for (int intent : result.unvisited_intents)
        std::cerr << "warning: planted intent " << intent
                  << " never appeared in a conversation\n";
      std::cout << "wrote " << result.true_flows.size() << " conversations to "
                << synth.output << "\n";
      return kExitOk;
    }

    if (metrics_cmd->parsed()) {
      std::uint64_t seed = 0;
      const FlowGraph graph =
          graph_from_json(read_text_file(met.graph), &seed);
      const FlowSet flows = flows_from_json(read_text_file(met.flows));
      const MetricsReport report = compute_metrics(graph, flows);
      const std::string json = metrics_to_json(
          report, graph.provenance.method, graph.provenance.tau,
          graph.provenance.k, graph.nodes.size(), seed);
      if (met.output.empty())
        std::cout << json;
      else
        write_text_file(met.output, json);
      return kExitOk;
    }

    if (export_cmd->parsed()) {
      const FlowGraph graph = graph_from_json(read_text_file(exp.graph));
      export_dot(graph, exp.output, exp.drop_isolated);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return kExitConfig;
}
