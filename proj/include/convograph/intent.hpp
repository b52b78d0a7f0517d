#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "convograph/clustering.hpp"
#include "convograph/corpus.hpp"
#include "convograph/embedding.hpp"

namespace convograph {

enum class LabelSource { llm, medoid_fallback };

const char* to_string(LabelSource s);

struct IntentLabel {
  int cluster_id = 0;
  std::string label;  // raw label, at most 12 words, never empty
  LabelSource source = LabelSource::medoid_fallback;
  std::vector<std::size_t> exemplar_indices;  // utterances shown to the labeler
};

enum class LabelerKind { llm_http, medoid_fallback };

struct LabelerConfig {
  LabelerKind kind = LabelerKind::medoid_fallback;
  std::string endpoint_url;  // llm_http only
  std::string model_name;
  std::size_t n_exemplars = 10;
  double temperature = 0.2;
  int max_retries = 2;  // total attempts per cluster before falling back
  bool allow_fallback = true;
  int concurrency = 4;  // parallel labeling requests (llm_http only)
};

inline constexpr const char* kLlmApiKeyEnv = "CONVOGRAPH_LLM_API_KEY";
// Bump when the prompt text changes; part of the label stage cache key.
inline constexpr const char* kLabelPromptVersion = "label-prompt-v1";
inline constexpr std::size_t kMaxLabelWords = 12;

// Exactly one label per cluster. The llm_http path prompts with the
// n_exemplars utterances nearest the centroid and falls back to the medoid
// label (nearest utterance truncated to 12 words) after max_retries
// failures, unless allow_fallback is off.
std::vector<IntentLabel> label_clusters(const Clustering& clustering,
                                        const Corpus& corpus,
                                        const EmbeddingMatrix& embeddings,
                                        const LabelerConfig& config);

// One vector per label, same provider contract as utterance embedding.
EmbeddingMatrix embed_labels(const std::vector<IntentLabel>& labels,
                             const EmbeddingProviderConfig& config);

// Node-display variants: duplicate labels get " (2)", " (3)", ... suffixes.
// Raw labels stay untouched in the IntentLabel records.
std::vector<std::string> display_labels(const std::vector<IntentLabel>& labels);

std::string truncate_words(const std::string& text, std::size_t max_words);

std::string labels_to_json(const std::vector<IntentLabel>& labels);
std::vector<IntentLabel> labels_from_json(const std::string& text);

}  // namespace convograph
