#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "convograph/corpus.hpp"

namespace convograph {

// Dense row-major matrix; row i belongs to the i-th utterance in flattened
// corpus order. Rows are L2-normalized on ingestion.
struct EmbeddingMatrix {
  std::size_t dim = 0;
  std::vector<double> data;

  std::size_t rows() const { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * dim, dim};
  }
  std::span<double> row(std::size_t i) { return {data.data() + i * dim, dim}; }
};

enum class EmbedderKind { precomputed_file, http_service, deterministic_test };

struct EmbeddingProviderConfig {
  EmbedderKind kind = EmbedderKind::deterministic_test;
  std::string endpoint_url;         // http_service only
  std::filesystem::path file_path;  // precomputed_file only
  std::string model_name;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;  // deterministic_test only
  std::size_t dim = 384;   // deterministic_test output width
};

// Bearer token env var consulted by the HTTP provider.
inline constexpr const char* kEmbedApiKeyEnv = "CONVOGRAPH_EMBED_API_KEY";

// One vector per utterance in flattened corpus order.
EmbeddingMatrix embed_corpus(const Corpus& corpus,
                             const EmbeddingProviderConfig& config);
EmbeddingMatrix embed_texts(const std::vector<std::string>& texts,
                            const EmbeddingProviderConfig& config);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Throws on a zero or non-finite row.
void l2_normalize_rows(EmbeddingMatrix& m);

// Precomputed-file format: binary header {magic "EMB1", u32 N, u32 d}
// followed by N*d float32 values row-major, all little-endian; or a JSONL
// fallback with one {"vector": [...]} object per line.
EmbeddingMatrix read_embedding_file(const std::filesystem::path& path);
void write_embedding_file(const std::filesystem::path& path,
                          const EmbeddingMatrix& m);

// Lossless float64 variant (magic "EMBD") used for pipeline stage caching.
EmbeddingMatrix read_embedding_cache(const std::filesystem::path& path);
void write_embedding_cache(const std::filesystem::path& path,
                           const EmbeddingMatrix& m);

}  // namespace convograph
