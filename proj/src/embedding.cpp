#include "convograph/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "convograph/errors.hpp"
#include "internal/http_util.hpp"

namespace convograph {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ConfigError("cosine_similarity: dimension mismatch (" +
                      std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()) + ")");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0)
    throw ConfigError("cosine_similarity: zero-norm vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

void l2_normalize_rows(EmbeddingMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    double sq = 0.0;
    for (double v : r) sq += v * v;
    if (!(sq > 0.0) || !std::isfinite(sq))
      throw IoError("embedding row " + std::to_string(i) +
                    " is zero or non-finite");
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : r) v *= inv;
  }
}

namespace {

std::uint64_t hash_bytes(const char* data, std::size_t len,
                         std::uint64_t seed) {
  // FNV-1a folded with the seed, then a splitmix finalizer so the high bits
  // (used for the sign) are well mixed.
  std::uint64_t h = 1469598103934665603ULL ^ (seed * 0x9e3779b97f4a7c15ULL);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ULL;
  }
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

// Character-trigram counts hashed into dim signed buckets. Texts shorter
// than a trigram hash as one whole-text token.
void trigram_embed(const std::string& text, std::uint64_t seed,
                   std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const std::uint64_t dim = out.size();
  auto add_token = [&](const char* p, std::size_t len) {
    const std::uint64_t h = hash_bytes(p, len, seed);
    out[h % dim] += (h >> 63) ? -1.0 : 1.0;
  };
  if (text.size() < 3) {
    add_token(text.data(), text.size());
  } else {
    for (std::size_t i = 0; i + 3 <= text.size(); ++i)
      add_token(text.data() + i, 3);
  }
  double sq = 0.0;
  for (double v : out) sq += v * v;
  if (sq == 0.0) {
    // Signed counts can cancel exactly; fall back to one whole-text bucket.
    out[hash_bytes(text.data(), text.size(),
                   seed ^ 0x5851f42d4c957f2dULL) %
        dim] = 1.0;
  }
}

void http_embed_batch(const EmbeddingProviderConfig& config,
                      const std::vector<std::string>& batch,
                      std::vector<std::vector<double>>& rows) {
  nlohmann::json body{{"model", config.model_name}, {"input", batch}};
  nlohmann::json parsed = internal::post_json(config.endpoint_url, body,
                                              kEmbedApiKeyEnv,
                                              "embedding service");
  if (!parsed.contains("data") || !parsed["data"].is_array() ||
      parsed["data"].size() != batch.size())
    throw ProviderError("embedding service response has wrong \"data\" length");
  for (const auto& item : parsed["data"]) {
    if (!item.is_object() || !item.contains("embedding") ||
        !item["embedding"].is_array())
      throw ProviderError("embedding service response item lacks \"embedding\"");
    rows.push_back(item["embedding"].get<std::vector<double>>());
  }
}

std::uint32_t read_u32le(std::istream& in) {
  unsigned char b[4] = {0, 0, 0, 0};
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32le(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v & 0xff),
      static_cast<unsigned char>((v >> 8) & 0xff),
      static_cast<unsigned char>((v >> 16) & 0xff),
      static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint64_t read_u64le(std::istream& in) {
  const std::uint64_t lo = read_u32le(in);
  const std::uint64_t hi = read_u32le(in);
  return lo | (hi << 32);
}

void write_u64le(std::ostream& out, std::uint64_t v) {
  write_u32le(out, static_cast<std::uint32_t>(v & 0xffffffffULL));
  write_u32le(out, static_cast<std::uint32_t>(v >> 32));
}

EmbeddingMatrix read_jsonl_vectors(const std::string& contents,
                                   const std::string& name) {
  EmbeddingMatrix m;
  std::istringstream in(contents);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_whitespace(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw IoError(name + " line " + std::to_string(line_no) + ": " +
                    e.what());
    }
    if (!j.is_object() || !j.contains("vector") || !j["vector"].is_array())
      throw IoError(name + " line " + std::to_string(line_no) +
                    ": expected {\"vector\": [...]}");
    const auto vec = j["vector"].get<std::vector<double>>();
    if (vec.empty())
      throw IoError(name + " line " + std::to_string(line_no) +
                    ": empty vector");
    if (m.dim == 0) m.dim = vec.size();
    if (vec.size() != m.dim)
      throw IoError(name + " line " + std::to_string(line_no) +
                    ": dimension " + std::to_string(vec.size()) +
                    " differs from " + std::to_string(m.dim));
    m.data.insert(m.data.end(), vec.begin(), vec.end());
  }
  if (m.dim == 0) throw IoError(name + ": no vectors found");
  return m;
}

}  // namespace

EmbeddingMatrix embed_texts(const std::vector<std::string>& texts,
                            const EmbeddingProviderConfig& config) {
  if (texts.empty()) throw ConfigError("embed_texts: no texts given");
  if (config.batch_size == 0)
    throw ConfigError("embed_texts: batch_size must be positive");

  EmbeddingMatrix m;
  switch (config.kind) {
    case EmbedderKind::deterministic_test: {
      if (config.dim == 0) throw ConfigError("embed_texts: dim must be positive");
      m.dim = config.dim;
      m.data.assign(texts.size() * config.dim, 0.0);
      for (std::size_t i = 0; i < texts.size(); ++i)
        trigram_embed(texts[i], config.seed, m.row(i));
      break;
    }
    case EmbedderKind::http_service: {
      if (config.endpoint_url.empty())
        throw ConfigError("embed_texts: http_service requires endpoint_url");
      std::vector<std::vector<double>> rows;
      rows.reserve(texts.size());
      for (std::size_t off = 0; off < texts.size(); off += config.batch_size) {
        const std::size_t n = std::min(config.batch_size, texts.size() - off);
        std::vector<std::string> batch(texts.begin() + off,
                                       texts.begin() + off + n);
        http_embed_batch(config, batch, rows);
      }
      if (rows.front().empty())
        throw ProviderError("embedding service returned empty vectors");
      m.dim = rows.front().size();
      m.data.reserve(rows.size() * m.dim);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.dim)
          throw ProviderError("dimension mismatch across batches: row " +
                              std::to_string(i) + " has " +
                              std::to_string(rows[i].size()) + ", expected " +
                              std::to_string(m.dim));
        m.data.insert(m.data.end(), rows[i].begin(), rows[i].end());
      }
      break;
    }
    case EmbedderKind::precomputed_file: {
      m = read_embedding_file(config.file_path);
      if (m.rows() != texts.size())
        throw IoError("row-count mismatch: embedding file has " +
                      std::to_string(m.rows()) + " rows, corpus has " +
                      std::to_string(texts.size()) + " utterances");
      break;
    }
  }
  l2_normalize_rows(m);
  return m;
}

EmbeddingMatrix embed_corpus(const Corpus& corpus,
                             const EmbeddingProviderConfig& config) {
  if (corpus.total_utterances == 0)
    throw ConfigError("embed_corpus: corpus is empty");
  return embed_texts(flatten_texts(corpus), config);
}

EmbeddingMatrix read_embedding_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file: " + path.string());
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::memcmp(magic, "EMB1", 4) == 0) {
    const std::uint32_t n = read_u32le(in);
    const std::uint32_t d = read_u32le(in);
    if (!in || d == 0)
      throw IoError("embedding file has a truncated or invalid header: " +
                    path.string());
    EmbeddingMatrix m;
    m.dim = d;
    m.data.resize(static_cast<std::size_t>(n) * d);
    for (double& v : m.data) {
      const std::uint32_t bits = read_u32le(in);
      if (!in) throw IoError("embedding file truncated: " + path.string());
      v = static_cast<double>(std::bit_cast<float>(bits));
    }
    return m;
  }
  // JSONL fallback
  in.clear();
  in.seekg(0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return read_jsonl_vectors(buf.str(), path.string());
}

void write_embedding_file(const std::filesystem::path& path,
                          const EmbeddingMatrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write embedding file: " + path.string());
  out.write("EMB1", 4);
  write_u32le(out, static_cast<std::uint32_t>(m.rows()));
  write_u32le(out, static_cast<std::uint32_t>(m.dim));
  for (double v : m.data)
    write_u32le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  if (!out) throw IoError("failed writing embedding file: " + path.string());
}

EmbeddingMatrix read_embedding_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding cache: " + path.string());
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "EMBD", 4) != 0)
    throw IoError("not an embedding cache file: " + path.string());
  const std::uint32_t n = read_u32le(in);
  const std::uint32_t d = read_u32le(in);
  if (!in || d == 0)
    throw IoError("embedding cache has a truncated header: " + path.string());
  EmbeddingMatrix m;
  m.dim = d;
  m.data.resize(static_cast<std::size_t>(n) * d);
  for (double& v : m.data) {
    const std::uint64_t bits = read_u64le(in);
    if (!in) throw IoError("embedding cache truncated: " + path.string());
    v = std::bit_cast<double>(bits);
  }
  return m;
}

void write_embedding_cache(const std::filesystem::path& path,
                           const EmbeddingMatrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write embedding cache: " + path.string());
  out.write("EMBD", 4);
  write_u32le(out, static_cast<std::uint32_t>(m.rows()));
  write_u32le(out, static_cast<std::uint32_t>(m.dim));
  for (double v : m.data) write_u64le(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw IoError("failed writing embedding cache: " + path.string());
}

}  // namespace convograph
