#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <thread>

#include "convograph/clustering.hpp"
#include "convograph/corpus.hpp"
#include "convograph/errors.hpp"
#include "convograph/intent.hpp"

using namespace convograph;

namespace {

// A corpus whose clustering we fix by hand: cluster 0 = order-status texts,
// cluster 1 = refund texts.
struct Fixture {
  Corpus corpus;
  EmbeddingMatrix embeddings;
  Clustering clustering;

  Fixture() {
    const std::string jsonl =
        R"({"id": "c1", "turns": [)"
        R"({"speaker": "customer", "text": "i want to check my order status please thanks a lot again today"},)"
        R"({"speaker": "customer", "text": "order status please"},)"
        R"({"speaker": "customer", "text": "refund my purchase"},)"
        R"({"speaker": "customer", "text": "i would like a refund now"}]})"
        "\n";
    corpus = parse_corpus_jsonl(jsonl);

    embeddings.dim = 2;
    embeddings.data = {1.0, 0.0,   //
                       0.8, 0.2,   //
                       0.0, 1.0,   //
                       0.2, 0.8};

    clustering.n_clusters = 2;
    clustering.dim = 2;
    clustering.centroids = {1.0, 0.0, 0.0, 1.0};
    clustering.assignments = {0, 0, 1, 1};
  }
};

LabelerConfig llm_config(const std::string& url, int max_retries = 2) {
  LabelerConfig cfg;
  cfg.kind = LabelerKind::llm_http;
  cfg.endpoint_url = url;
  cfg.model_name = "test-llm";
  cfg.n_exemplars = 2;
  cfg.max_retries = max_retries;
  cfg.concurrency = 1;
  return cfg;
}

}  // namespace

TEST_CASE("truncate_words keeps the first n words") {
  CHECK(truncate_words("a b c d", 2) == "a b");
  CHECK(truncate_words("  spaced   out  ", 3) == "spaced out");
  CHECK(truncate_words("short", 12) == "short");
}

TEST_CASE("medoid fallback labels every cluster with a 12-word cap") {
  const Fixture f;
  LabelerConfig cfg;  // medoid_fallback defaults
  const auto labels = label_clusters(f.clustering, f.corpus, f.embeddings, cfg);
  REQUIRE(labels.size() == 2);
  CHECK(labels[0].cluster_id == 0);
  // 13-word utterance truncated to its first 12 words
  CHECK(labels[0].label ==
        "i want to check my order status please thanks a lot again");
  CHECK(labels[0].source == LabelSource::medoid_fallback);
  CHECK(labels[1].label == "refund my purchase");
  CHECK_FALSE(labels[0].exemplar_indices.empty());
  for (std::size_t idx : labels[0].exemplar_indices)
    CHECK(f.clustering.assignments[idx] == 0);

  // deterministic given the same inputs
  const auto again = label_clusters(f.clustering, f.corpus, f.embeddings, cfg);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    CHECK(labels[i].label == again[i].label);
    CHECK(labels[i].exemplar_indices == again[i].exemplar_indices);
  }
}

TEST_CASE("llm labels pass through, with failures falling back") {
  const Fixture f;
  httplib::Server server;
  std::atomic<int> calls{0};
  std::string seen_auth;
  server.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    if (req.has_header("Authorization"))
      seen_auth = req.get_header_value("Authorization");
    const auto body = nlohmann::json::parse(req.body);
    CHECK(body.at("model") == "test-llm");
    const std::string prompt = body.at("messages")[1].at("content");
    const char* reply = prompt.find("refund") != std::string::npos
                            ? "Customer requests refund"
                            : "Check order status";
    const nlohmann::json out = {
        {"choices", {{{"message", {{"content", reply}}}}}}};
    res.set_content(out.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat";

  setenv("CONVOGRAPH_LLM_API_KEY", "llm-secret", 1);
  const auto labels =
      label_clusters(f.clustering, f.corpus, f.embeddings, llm_config(url));
  unsetenv("CONVOGRAPH_LLM_API_KEY");
  REQUIRE(labels.size() == 2);
  CHECK(labels[0].label == "Check order status");
  CHECK(labels[0].source == LabelSource::llm);
  CHECK(labels[1].label == "Customer requests refund");
  CHECK(labels[1].source == LabelSource::llm);
  CHECK(calls.load() == 2);
  CHECK(seen_auth == "Bearer llm-secret");

  server.stop();
  worker.join();
}

TEST_CASE("llm outage falls back to medoid labels after max_retries") {
  const Fixture f;
  // nothing listens on this port
  const auto labels = label_clusters(f.clustering, f.corpus, f.embeddings,
                                     llm_config("http://127.0.0.1:1/chat", 3));
  REQUIRE(labels.size() == 2);
  for (const auto& l : labels) CHECK(l.source == LabelSource::medoid_fallback);
  CHECK(labels[1].label == "refund my purchase");

  // with fallback disabled the outage is an error
  auto strict = llm_config("http://127.0.0.1:1/chat", 1);
  strict.allow_fallback = false;
  CHECK_THROWS_AS(label_clusters(f.clustering, f.corpus, f.embeddings, strict),
                  ProviderError);
}

TEST_CASE("llm responses are sanitized: quotes stripped, 12-word cap") {
  const Fixture f;
  httplib::Server server;
  server.Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
    const nlohmann::json out = {
        {"choices",
         {{{"message",
            {{"content",
              "\"one two three four five six seven eight nine ten eleven "
              "twelve thirteen fourteen\"\n"}}}}}}};
    res.set_content(out.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const auto labels = label_clusters(
      f.clustering, f.corpus, f.embeddings,
      llm_config("http://127.0.0.1:" + std::to_string(port) + "/chat"));
  CHECK(labels[0].label ==
        "one two three four five six seven eight nine ten eleven twelve");
  CHECK(labels[0].source == LabelSource::llm);

  server.stop();
  worker.join();
}

TEST_CASE("embed_labels produces one aligned row per label") {
  EmbeddingProviderConfig cfg;
  cfg.kind = EmbedderKind::deterministic_test;
  cfg.seed = 4;
  cfg.dim = 24;

  std::vector<IntentLabel> labels(5);
  for (int i = 0; i < 5; ++i) {
    labels[i].cluster_id = i;
    labels[i].label = i < 2 ? "check order" : "label " + std::to_string(i);
  }
  const EmbeddingMatrix m = embed_labels(labels, cfg);
  CHECK(m.rows() == 5);
  CHECK(m.dim == 24);
  // identical labels embed identically
  const auto r0 = m.row(0);
  const auto r1 = m.row(1);
  CHECK(std::equal(r0.begin(), r0.end(), r1.begin()));

  CHECK_THROWS_AS(embed_labels({}, cfg), ConfigError);
}

TEST_CASE("display labels suffix duplicates and keep raw data intact") {
  std::vector<IntentLabel> labels(3);
  labels[0].label = "check order";
  labels[1].label = "check order";
  labels[2].label = "refund";
  const auto display = display_labels(labels);
  CHECK(display == std::vector<std::string>{"check order", "check order (2)",
                                            "refund"});
  CHECK(labels[1].label == "check order");
}

TEST_CASE("labels json round-trips") {
  std::vector<IntentLabel> labels(2);
  labels[0] = {0, "check order", LabelSource::llm, {3, 1}};
  labels[1] = {1, "refund", LabelSource::medoid_fallback, {2}};
  const auto back = labels_from_json(labels_to_json(labels));
  REQUIRE(back.size() == 2);
  CHECK(back[0].cluster_id == 0);
  CHECK(back[0].label == "check order");
  CHECK(back[0].source == LabelSource::llm);
  CHECK(back[0].exemplar_indices == std::vector<std::size_t>{3, 1});
  CHECK(back[1].source == LabelSource::medoid_fallback);
}
