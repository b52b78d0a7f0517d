#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "convograph/errors.hpp"
#include "convograph/pipeline.hpp"
#include "convograph/synthetic.hpp"

using namespace convograph;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::filesystem::path write_corpus(const std::filesystem::path& dir,
                                   std::uint64_t seed, double noise = 0.1) {
  SyntheticSpec spec;
  spec.n_intents = 6;
  spec.n_conversations = 60;
  spec.ground_truth_edges = planted_edges(PlantedShape::tree, 6, seed);
  spec.noise_rate = noise;
  spec.seed = seed;
  const SyntheticResult result = generate_synthetic(spec);
  const auto corpus_path = dir / "corpus.jsonl";
  write_synthetic(result, corpus_path, dir / "truth.jsonl");
  return corpus_path;
}

PipelineConfig base_config(const std::filesystem::path& input,
                           const std::filesystem::path& out) {
  PipelineConfig cfg;
  cfg.input_path = input;
  cfg.output_dir = out;
  cfg.n_clusters = 6;
  cfg.seed = 11;
  cfg.embedding.kind = EmbedderKind::deterministic_test;
  cfg.embedding.seed = 11;
  cfg.embedding.dim = 48;
  return cfg;
}

FlowGraph tiny_graph(int n, const std::vector<GraphEdge>& edges,
                     std::vector<std::string> labels = {}) {
  TransitionMatrix tm;
  tm.n_clusters = n;
  tm.counts.assign(n, std::vector<std::int64_t>(n, 0));
  tm.probs.assign(n, std::vector<double>(n, 0.0));
  for (const auto& e : edges) tm.probs[e.src][e.dst] = e.weight;
  return simplify_none(tm, labels.empty() ? default_labels(n) : labels);
}

}  // namespace

TEST_CASE("pipeline writes all artifacts and reports filter&reconnect metrics") {
  const auto dir = fresh_dir("convograph_pipe_basic");
  const auto corpus = write_corpus(dir, 3);
  const PipelineConfig cfg = base_config(corpus, dir / "out");
  const MetricsReport report = run_pipeline(cfg);

  CHECK(report.n_cycles == 0);  // filter_reconnect output is acyclic
  CHECK(report.semantic_coherence.has_value());
  for (const char* artifact :
       {"embeddings.bin", "clustering.json", "labels.json", "flows.json",
        "graph.json", "graph.dot", "metrics.json", "manifest.json"})
    CHECK(std::filesystem::exists(dir / "out" / artifact));

  const FlowGraph g = graph_from_json(slurp(dir / "out" / "graph.json"));
  CHECK(g.provenance.method == SimplifyMethod::filter_reconnect);
  CHECK(find_directed_cycles(g).empty());
  CHECK(g.nodes.size() == 6);
}

TEST_CASE("method none yields full coverage") {
  const auto dir = fresh_dir("convograph_pipe_none");
  const auto corpus = write_corpus(dir, 5);
  PipelineConfig cfg = base_config(corpus, dir / "out");
  cfg.method = SimplifyMethod::none;
  const MetricsReport report = run_pipeline(cfg);
  CHECK(report.coverage == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rerunning an identical config reuses caches and keeps bytes stable") {
  const auto dir = fresh_dir("convograph_pipe_cache");
  const auto corpus = write_corpus(dir, 7);
  const PipelineConfig cfg = base_config(corpus, dir / "out");

  const MetricsReport first = run_pipeline(cfg);
  const std::string graph1 = slurp(dir / "out" / "graph.json");
  const std::string dot1 = slurp(dir / "out" / "graph.dot");
  const std::string metrics1 = slurp(dir / "out" / "metrics.json");
  const auto clustering_mtime =
      std::filesystem::last_write_time(dir / "out" / "clustering.json");

  const MetricsReport second = run_pipeline(cfg);
  CHECK(slurp(dir / "out" / "graph.json") == graph1);
  CHECK(slurp(dir / "out" / "graph.dot") == dot1);
  CHECK(slurp(dir / "out" / "metrics.json") == metrics1);
  // cached stage artifacts were not rewritten
  CHECK(std::filesystem::last_write_time(dir / "out" / "clustering.json") ==
        clustering_mtime);
  CHECK(first.coverage == second.coverage);
  CHECK(first.n_cycles == second.n_cycles);
  CHECK(first.semantic_coherence == second.semantic_coherence);
}

TEST_CASE("two fresh runs with the same seed are byte-identical") {
  const auto dir = fresh_dir("convograph_pipe_det");
  const auto corpus = write_corpus(dir, 13);
  PipelineConfig a = base_config(corpus, dir / "out_a");
  PipelineConfig b = base_config(corpus, dir / "out_b");
  run_pipeline(a);
  run_pipeline(b);
  for (const char* artifact : {"graph.json", "graph.dot", "metrics.json"})
    CHECK(slurp(dir / "out_a" / artifact) == slurp(dir / "out_b" / artifact));
}

TEST_CASE("changing the method invalidates only downstream stages") {
  const auto dir = fresh_dir("convograph_pipe_invalidate");
  const auto corpus = write_corpus(dir, 17);
  PipelineConfig cfg = base_config(corpus, dir / "out");
  run_pipeline(cfg);
  const auto embed_mtime =
      std::filesystem::last_write_time(dir / "out" / "embeddings.bin");
  const std::string graph1 = slurp(dir / "out" / "graph.json");

  cfg.method = SimplifyMethod::threshold;
  const MetricsReport report = run_pipeline(cfg);
  CHECK(std::filesystem::last_write_time(dir / "out" / "embeddings.bin") ==
        embed_mtime);
  const std::string graph2 = slurp(dir / "out" / "graph.json");
  CHECK(graph1 != graph2);
  const FlowGraph g = graph_from_json(graph2);
  CHECK(g.provenance.method == SimplifyMethod::threshold);
  CHECK(report.coverage > 0.0);
}

TEST_CASE("speaker filter flows through the pipeline") {
  const auto dir = fresh_dir("convograph_pipe_filter");
  const auto corpus_path = write_corpus(dir, 29);
  PipelineConfig cfg = base_config(corpus_path, dir / "out");
  cfg.speaker_filter = std::set<Speaker>{Speaker::customer};
  cfg.n_clusters = 4;
  const MetricsReport filtered = run_pipeline(cfg);

  // the graph stage only sees customer turns
  const FlowSet flows = flows_from_json(slurp(dir / "out" / "flows.json"));
  const Corpus full = load_corpus(corpus_path);
  const Corpus customers_only =
      load_corpus(corpus_path, std::set<Speaker>{Speaker::customer});
  std::size_t flow_total = 0;
  for (const auto& f : flows.flows) flow_total += f.size();
  CHECK(flow_total == customers_only.total_utterances);
  CHECK(flow_total < full.total_utterances);
  CHECK(filtered.n_cycles == 0);
}

TEST_CASE("mu_source label_embedding produces a coherence value too") {
  const auto dir = fresh_dir("convograph_pipe_mu");
  const auto corpus = write_corpus(dir, 19);
  PipelineConfig cfg = base_config(corpus, dir / "out");
  cfg.mu_source = MuSource::label_embedding;
  const MetricsReport report = run_pipeline(cfg);
  REQUIRE(report.semantic_coherence.has_value());
  CHECK(*report.semantic_coherence >= -1.0);
  CHECK(*report.semantic_coherence <= 1.0 + 1e-12);
}

TEST_CASE("artifacts of completed stages survive a later stage failure") {
  const auto dir = fresh_dir("convograph_pipe_partial");
  const auto corpus = write_corpus(dir, 37);
  PipelineConfig cfg = base_config(corpus, dir / "out");
  cfg.labeler.kind = LabelerKind::llm_http;
  cfg.labeler.endpoint_url = "http://127.0.0.1:1/chat";  // unreachable
  cfg.labeler.max_retries = 1;
  cfg.labeler.allow_fallback = false;

  CHECK_THROWS_WITH_AS(run_pipeline(cfg), doctest::Contains("stage label"),
                       StageError);
  CHECK(std::filesystem::exists(dir / "out" / "embeddings.bin"));
  CHECK(std::filesystem::exists(dir / "out" / "clustering.json"));
  CHECK_FALSE(std::filesystem::exists(dir / "out" / "labels.json"));

  // a corrected rerun resumes from the cached stages
  const auto embed_mtime =
      std::filesystem::last_write_time(dir / "out" / "embeddings.bin");
  cfg.labeler = LabelerConfig{};
  const MetricsReport report = run_pipeline(cfg);
  CHECK(report.n_cycles == 0);
  CHECK(std::filesystem::exists(dir / "out" / "labels.json"));
  CHECK(std::filesystem::last_write_time(dir / "out" / "embeddings.bin") ==
        embed_mtime);
}

TEST_CASE("stage errors carry the stage name; config errors are distinct") {
  PipelineConfig cfg;
  cfg.input_path = "/nonexistent/corpus.jsonl";
  cfg.output_dir = std::filesystem::temp_directory_path() / "convograph_pipe_err";
  CHECK_THROWS_WITH_AS(run_pipeline(cfg), doctest::Contains("stage ingest"),
                       StageError);

  PipelineConfig bad = cfg;
  bad.tau = 2.0;
  CHECK_THROWS_AS(run_pipeline(bad), ConfigError);
  bad = cfg;
  bad.k = 0;
  CHECK_THROWS_AS(run_pipeline(bad), ConfigError);
}

TEST_CASE("dot export is canonical and escapes labels") {
  const FlowGraph g =
      tiny_graph(2, {{0, 1, 0.421}}, {"say \"hi\"", "ask for help"});
  const std::string dot = to_dot(g);
  CHECK(dot.find("n0 -> n1 [label=\"0.42\"]") != std::string::npos);
  CHECK(dot.find("say \\\"hi\\\"") != std::string::npos);
  CHECK(dot == to_dot(g));  // byte-identical on repeat

  // empty edge set still lists the nodes
  const FlowGraph bare = tiny_graph(2, {});
  const std::string bare_dot = to_dot(bare);
  CHECK(bare_dot.find("->") == std::string::npos);
  CHECK(bare_dot.find("n0") != std::string::npos);
  CHECK(bare_dot.find("n1") != std::string::npos);

  // drop_isolated removes nodes without edges at export time only
  const FlowGraph mixed = tiny_graph(3, {{0, 1, 0.9}});
  const std::string pruned = to_dot(mixed, /*drop_isolated=*/true);
  CHECK(pruned.find("n2") == std::string::npos);
  CHECK(to_dot(mixed).find("n2") != std::string::npos);
}

#ifdef CONVOGRAPH_CLI_PATH
namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CONVOGRAPH_CLI_PATH) + " " + args +
                          " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli exit codes: 0 success, 1 config error, 2 stage failure") {
  const auto dir = fresh_dir("convograph_cli_exit");
  const auto corpus = write_corpus(dir, 23);

  CHECK(run_cli("run --input " + corpus.string() + " --output-dir " +
                (dir / "out").string() + " --clusters 6 --embed-dim 32") == 0);
  // unknown method -> config error
  CHECK(run_cli("run --input " + corpus.string() + " --output-dir " +
                (dir / "out2").string() + " --method bogus") == 1);
  // missing required flag -> config error
  CHECK(run_cli("run --input " + corpus.string()) == 1);
  // nonexistent input -> stage failure
  CHECK(run_cli("run --input /nonexistent.jsonl --output-dir " +
                (dir / "out3").string()) == 2);
}

TEST_CASE("cli reads flat key=value config files, flags override") {
  const auto dir = fresh_dir("convograph_cli_config");
  const auto corpus = write_corpus(dir, 31);
  {
    std::ofstream cfg(dir / "run.ini");
    cfg << "[run]\n"
        << "input=" << corpus.string() << "\n"
        << "output-dir=" << (dir / "out").string() << "\n"
        << "clusters=6\n"
        << "embed-dim=32\n"
        << "method=threshold\n";
  }
  CHECK(run_cli("--config " + (dir / "run.ini").string() + " run") == 0);
  const FlowGraph g = graph_from_json(slurp(dir / "out" / "graph.json"));
  CHECK(g.provenance.method == SimplifyMethod::threshold);
  CHECK(g.nodes.size() == 6);

  // an explicit flag wins over the config value
  CHECK(run_cli("--config " + (dir / "run.ini").string() +
                " run --method none --output-dir " + (dir / "out2").string()) ==
        0);
  const FlowGraph g2 = graph_from_json(slurp(dir / "out2" / "graph.json"));
  CHECK(g2.provenance.method == SimplifyMethod::none);
}

TEST_CASE("cli synthesize, metrics and export subcommands round-trip") {
  const auto dir = fresh_dir("convograph_cli_round");
  const auto corpus = (dir / "synth.jsonl").string();
  const auto truth = (dir / "truth.jsonl").string();
  CHECK(run_cli("synthesize --intents 5 --conversations 40 --noise 0.1 "
                "--seed 3 --shape tree --output " +
                corpus + " --truth " + truth) == 0);
  CHECK(run_cli("run --input " + corpus + " --output-dir " +
                (dir / "out").string() + " --clusters 5 --embed-dim 32") == 0);
  CHECK(run_cli("metrics --graph " + (dir / "out" / "graph.json").string() +
                " --flows " + (dir / "out" / "flows.json").string() +
                " --output " + (dir / "m2.json").string()) == 0);
  CHECK(run_cli("export --graph " + (dir / "out" / "graph.json").string() +
                " --output " + (dir / "g2.dot").string()) == 0);

  // structural numbers recomputed from artifacts match the pipeline's
  const MetricsReport original =
      metrics_from_json(slurp(dir / "out" / "metrics.json"));
  const MetricsReport recomputed = metrics_from_json(slurp(dir / "m2.json"));
  CHECK(recomputed.branching_factor == original.branching_factor);
  CHECK(recomputed.n_cycles == original.n_cycles);
  CHECK(recomputed.delta_hyperbolicity == original.delta_hyperbolicity);
  CHECK(recomputed.coverage == original.coverage);
  CHECK_FALSE(recomputed.semantic_coherence.has_value());

  // exported DOT matches the pipeline's graph.dot
  CHECK(slurp(dir / "g2.dot") == slurp(dir / "out" / "graph.dot"));
}
#endif
