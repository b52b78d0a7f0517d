#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "convograph/corpus.hpp"
#include "convograph/errors.hpp"
#include "convograph/synthetic.hpp"

using namespace convograph;

TEST_CASE("planted shapes have the expected edge sets") {
  CHECK(planted_edges(PlantedShape::chain, 4, 0) ==
        std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}});
  CHECK(planted_edges(PlantedShape::ring, 3, 0) ==
        std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 0}});

  const auto tree = planted_edges(PlantedShape::tree, 10, 5);
  CHECK(tree.size() == 9);
  std::set<int> children;
  for (const auto& [p, c] : tree) {
    CHECK(p < c);  // parents come earlier
    children.insert(c);
  }
  CHECK(children.size() == 9);  // every non-root has exactly one parent

  const auto rnd = planted_edges(PlantedShape::random_graph, 6, 5);
  for (const auto& [u, v] : rnd) {
    CHECK(u != v);
    CHECK(u >= 0);
    CHECK(v < 6);
  }
  CHECK_THROWS_AS(planted_edges(PlantedShape::chain, 1, 0), ConfigError);
}

TEST_CASE("noise-free chain walks are contiguous sub-walks") {
  SyntheticSpec spec;
  spec.n_intents = 4;
  spec.n_conversations = 50;
  spec.ground_truth_edges = planted_edges(PlantedShape::chain, 4, 0);
  spec.noise_rate = 0.0;
  spec.seed = 9;
  const SyntheticResult result = generate_synthetic(spec);
  REQUIRE(result.true_flows.size() == 50);
  for (const auto& flow : result.true_flows)
    for (std::size_t t = 1; t < flow.size(); ++t)
      CHECK(flow[t] == flow[t - 1] + 1);
}

TEST_CASE("same seed reproduces the corpus byte for byte") {
  SyntheticSpec spec;
  spec.n_intents = 6;
  spec.n_conversations = 30;
  spec.ground_truth_edges = planted_edges(PlantedShape::tree, 6, 3);
  spec.noise_rate = 0.1;
  spec.seed = 1234;
  const SyntheticResult a = generate_synthetic(spec);
  const SyntheticResult b = generate_synthetic(spec);
  CHECK(a.corpus_jsonl == b.corpus_jsonl);
  CHECK(a.true_flows == b.true_flows);

  spec.seed = 1235;
  const SyntheticResult c = generate_synthetic(spec);
  CHECK(a.corpus_jsonl != c.corpus_jsonl);
}

TEST_CASE("measured off-graph fraction tracks the configured noise rate") {
  // a ring has no sinks, so every step draws the same noise Bernoulli
  SyntheticSpec spec;
  spec.n_intents = 6;
  spec.n_conversations = 500;
  spec.ground_truth_edges = planted_edges(PlantedShape::ring, 6, 0);
  spec.noise_rate = 0.2;
  spec.seed = 77;
  spec.min_turns = 4;
  spec.max_turns = 12;
  const SyntheticResult result = generate_synthetic(spec);

  std::set<std::pair<int, int>> planted(spec.ground_truth_edges.begin(),
                                        spec.ground_truth_edges.end());
  std::size_t off = 0;
  std::size_t total = 0;
  for (const auto& flow : result.true_flows)
    for (std::size_t t = 1; t < flow.size(); ++t) {
      ++total;
      if (!planted.contains({flow[t - 1], flow[t]})) ++off;
    }
  REQUIRE(total > 0);
  const double fraction = static_cast<double>(off) / static_cast<double>(total);
  CHECK(fraction == doctest::Approx(0.2).epsilon(0.25));  // 0.2 +/- 0.05
  CHECK(fraction >= 0.15);
  CHECK(fraction <= 0.25);
}

TEST_CASE("generated corpus parses and aligns with the true flows") {
  SyntheticSpec spec;
  spec.n_intents = 5;
  spec.n_conversations = 40;
  spec.ground_truth_edges = planted_edges(PlantedShape::tree, 5, 2);
  spec.noise_rate = 0.15;
  spec.seed = 4;
  const SyntheticResult result = generate_synthetic(spec);
  const Corpus corpus = parse_corpus_jsonl(result.corpus_jsonl);
  REQUIRE(corpus.conversations.size() == result.true_flows.size());
  for (std::size_t i = 0; i < corpus.conversations.size(); ++i) {
    CHECK(corpus.conversations[i].utterances.size() ==
          result.true_flows[i].size());
    CHECK(corpus.conversations[i].id == "synth-" + std::to_string(i));
  }

  // same intent -> same template text; different intents differ
  std::vector<std::string> intent_text(spec.n_intents);
  for (std::size_t i = 0; i < corpus.conversations.size(); ++i)
    for (std::size_t t = 0; t < corpus.conversations[i].utterances.size(); ++t) {
      const int intent = result.true_flows[i][t];
      const std::string& text = corpus.conversations[i].utterances[t].text;
      if (intent_text[intent].empty())
        intent_text[intent] = text;
      else
        CHECK(intent_text[intent] == text);
    }
  std::set<std::string> distinct(intent_text.begin(), intent_text.end());
  CHECK(distinct.size() == static_cast<std::size_t>(spec.n_intents));
}

TEST_CASE("write_synthetic emits corpus and truth files") {
  SyntheticSpec spec;
  spec.n_intents = 3;
  spec.n_conversations = 5;
  spec.ground_truth_edges = planted_edges(PlantedShape::chain, 3, 0);
  spec.seed = 8;
  const SyntheticResult result = generate_synthetic(spec);
  const auto dir = std::filesystem::temp_directory_path();
  const auto corpus_path = dir / "convograph_synth_corpus.jsonl";
  const auto truth_path = dir / "convograph_synth_truth.jsonl";
  write_synthetic(result, corpus_path, truth_path);
  const Corpus corpus = load_corpus(corpus_path);
  CHECK(corpus.conversations.size() == 5);
  std::ifstream truth(truth_path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(truth, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 5);
}

TEST_CASE("intents that never appear are reported, not fatal") {
  SyntheticSpec spec;
  spec.n_intents = 12;
  spec.n_conversations = 1;  // one short walk cannot visit 12 intents
  spec.ground_truth_edges = planted_edges(PlantedShape::chain, 12, 0);
  spec.seed = 6;
  spec.min_turns = 2;
  spec.max_turns = 3;
  const SyntheticResult result = generate_synthetic(spec);
  CHECK_FALSE(result.unvisited_intents.empty());
  CHECK(result.true_flows.size() == 1);
}

TEST_CASE("invalid specs are rejected") {
  SyntheticSpec spec;
  spec.n_intents = 3;
  spec.ground_truth_edges = {{0, 5}};
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec.ground_truth_edges = {{1, 1}};
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec.ground_truth_edges = {{0, 1}};
  spec.noise_rate = 1.0;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec.noise_rate = 0.0;
  spec.min_turns = 5;
  spec.max_turns = 4;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
}
