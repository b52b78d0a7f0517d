#include "convograph/intent.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "convograph/errors.hpp"
#include "internal/http_util.hpp"

namespace convograph {

const char* to_string(LabelSource s) {
  return s == LabelSource::llm ? "llm" : "medoid_fallback";
}

std::string truncate_words(const std::string& text, std::size_t max_words) {
  std::istringstream in(text);
  std::string word;
  std::string out;
  std::size_t count = 0;
  while (count < max_words && in >> word) {
    if (!out.empty()) out += ' ';
    out += word;
    ++count;
  }
  return out;
}

namespace {

std::string sanitize_label(std::string s) {
  for (char& ch : s)
    if (ch == '\n' || ch == '\r' || ch == '\t') ch = ' ';
  s = trim_whitespace(s);
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    s = trim_whitespace(s.substr(1, s.size() - 2));
  return truncate_words(s, kMaxLabelWords);
}

// Fixed prompt; kLabelPromptVersion must be bumped whenever this changes.
std::string build_prompt(const std::vector<std::string>& exemplars) {
  std::string p =
      "These utterances come from one cluster of a conversation corpus. "
      "Reply with ONLY a short imperative phrase of at most 12 words naming "
      "the shared intent.\n\nUtterances:\n";
  for (const auto& e : exemplars) {
    p += "- ";
    p += e;
    p += '\n';
  }
  return p;
}

std::string llm_complete(const LabelerConfig& config,
                         const std::string& prompt) {
  const nlohmann::json body{
      {"model", config.model_name},
      {"messages",
       nlohmann::json::array(
           {nlohmann::json{{"role", "system"},
                           {"content",
                            "You name clusters of conversation utterances."}},
            nlohmann::json{{"role", "user"}, {"content", prompt}}})},
      {"temperature", config.temperature},
  };
  const nlohmann::json resp =
      internal::post_json(config.endpoint_url, body, kLlmApiKeyEnv,
                          "intent labeler");
  if (!resp.contains("choices") || !resp["choices"].is_array() ||
      resp["choices"].empty())
    throw ProviderError("intent labeler response has no choices");
  const auto& choice = resp["choices"][0];
  if (!choice.contains("message") || !choice["message"].contains("content") ||
      !choice["message"]["content"].is_string())
    throw ProviderError("intent labeler response has no message content");
  return choice["message"]["content"].get<std::string>();
}

}  // namespace

std::vector<IntentLabel> label_clusters(const Clustering& clustering,
                                        const Corpus& corpus,
                                        const EmbeddingMatrix& embeddings,
                                        const LabelerConfig& config) {
  if (clustering.assignments.size() != corpus.total_utterances ||
      embeddings.rows() != corpus.total_utterances)
    throw ConfigError(
        "label_clusters: corpus, clustering and embeddings are misaligned");
  if (config.kind == LabelerKind::llm_http && config.endpoint_url.empty())
    throw ConfigError("label_clusters: llm_http requires endpoint_url");
  if (config.n_exemplars < 1)
    throw ConfigError("label_clusters: n_exemplars must be >= 1");

  const std::vector<std::string> texts = flatten_texts(corpus);
  const std::size_t k = clustering.n_clusters;

  auto label_one = [&texts, &clustering, &embeddings,
                    &config](std::size_t c) -> IntentLabel {
    IntentLabel out;
    out.cluster_id = static_cast<int>(c);
    out.exemplar_indices =
        nearest_to_centroid(clustering, embeddings, c, config.n_exemplars);
    const std::string medoid =
        truncate_words(texts[out.exemplar_indices.front()], kMaxLabelWords);
    if (config.kind == LabelerKind::medoid_fallback) {
      out.label = medoid;
      out.source = LabelSource::medoid_fallback;
      return out;
    }

    std::vector<std::string> exemplar_texts;
    exemplar_texts.reserve(out.exemplar_indices.size());
    for (std::size_t idx : out.exemplar_indices)
      exemplar_texts.push_back(texts[idx]);
    const std::string prompt = build_prompt(exemplar_texts);

    const int attempts = std::max(1, config.max_retries);
    for (int attempt = 0; attempt < attempts; ++attempt) {
      try {
        const std::string cleaned = sanitize_label(llm_complete(config, prompt));
        if (!cleaned.empty()) {
          out.label = cleaned;
          out.source = LabelSource::llm;
          return out;
        }
      } catch (const ProviderError&) {
        // retry
      }
    }
    if (!config.allow_fallback)
      throw ProviderError("intent labeler failed for cluster " +
                          std::to_string(c) + " and fallback is disabled");
    out.label = medoid;
    out.source = LabelSource::medoid_fallback;
    return out;
  };

  std::vector<IntentLabel> labels(k);
  if (config.kind == LabelerKind::llm_http && config.concurrency > 1 && k > 1) {
    // Waves of at most `concurrency` requests; results land by cluster id so
    // completion order does not matter.
    std::size_t next = 0;
    while (next < k) {
      std::vector<std::pair<std::size_t, std::future<IntentLabel>>> wave;
      for (int j = 0; j < config.concurrency && next < k; ++j, ++next)
        wave.emplace_back(next,
                          std::async(std::launch::async, label_one, next));
      for (auto& [c, fut] : wave) labels[c] = fut.get();
    }
  } else {
    for (std::size_t c = 0; c < k; ++c) labels[c] = label_one(c);
  }
  return labels;
}

EmbeddingMatrix embed_labels(const std::vector<IntentLabel>& labels,
                             const EmbeddingProviderConfig& config) {
  if (labels.empty()) throw ConfigError("embed_labels: no labels given");
  std::vector<std::string> texts;
  texts.reserve(labels.size());
  for (const auto& l : labels) texts.push_back(l.label);
  return embed_texts(texts, config);
}

std::vector<std::string> display_labels(const std::vector<IntentLabel>& labels) {
  std::map<std::string, int> seen;
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    int& n = seen[l.label];
    ++n;
    out.push_back(n == 1 ? l.label
                         : l.label + " (" + std::to_string(n) + ")");
  }
  return out;
}

std::string labels_to_json(const std::vector<IntentLabel>& labels) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& l : labels) {
    arr.push_back({{"cluster_id", l.cluster_id},
                   {"label", l.label},
                   {"source", to_string(l.source)},
                   {"exemplar_indices", l.exemplar_indices}});
  }
  return arr.dump(2) + "\n";
}

std::vector<IntentLabel> labels_from_json(const std::string& text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("labels JSON: ") + e.what());
  }
  if (!arr.is_array()) throw IoError("labels JSON: expected an array");
  std::vector<IntentLabel> labels;
  labels.reserve(arr.size());
  try {
    for (const auto& j : arr) {
      IntentLabel l;
      l.cluster_id = j.at("cluster_id").get<int>();
      l.label = j.at("label").get<std::string>();
      const auto source = j.at("source").get<std::string>();
      if (source == "llm")
        l.source = LabelSource::llm;
      else if (source == "medoid_fallback")
        l.source = LabelSource::medoid_fallback;
      else
        throw IoError("labels JSON: unknown source \"" + source + "\"");
      l.exemplar_indices =
          j.at("exemplar_indices").get<std::vector<std::size_t>>();
      labels.push_back(std::move(l));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("labels JSON: ") + e.what());
  }
  return labels;
}

}  // namespace convograph
