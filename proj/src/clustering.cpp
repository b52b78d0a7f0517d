#include "convograph/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <json.hpp>

#include "convograph/errors.hpp"
#include "convograph/rng.hpp"

namespace convograph {
namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::span<const double> centroid_row(const std::vector<double>& centroids,
                                     std::size_t c, std::size_t dim) {
  return {centroids.data() + c * dim, dim};
}

// Each point to its nearest centroid; distance ties go to the lower id.
void assign_pass(const EmbeddingMatrix& pts,
                 const std::vector<double>& centroids, std::size_t k,
                 std::vector<int>& assign) {
  const std::size_t dim = pts.dim;
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double d = sq_dist(pts.row(i), centroid_row(centroids, c, dim));
      if (d < best) {
        best = d;
        best_c = static_cast<int>(c);
      }
    }
    assign[i] = best_c;
  }
}

// Give each empty cluster the point farthest from its current centroid
// (ties to the lower point index) and move the centroid onto that point.
// Donor clusters must keep at least one member; k <= N guarantees a donor
// exists. Never increases the objective.
void repair_empty(const EmbeddingMatrix& pts, std::vector<double>& centroids,
                  std::size_t k, std::vector<int>& assign) {
  const std::size_t dim = pts.dim;
  std::vector<std::size_t> sizes(k, 0);
  for (int a : assign) ++sizes[static_cast<std::size_t>(a)];
  for (std::size_t e = 0; e < k; ++e) {
    if (sizes[e] > 0) continue;
    double far = -1.0;
    std::size_t far_i = 0;
    for (std::size_t i = 0; i < pts.rows(); ++i) {
      const auto a = static_cast<std::size_t>(assign[i]);
      if (sizes[a] < 2) continue;
      const double d = sq_dist(pts.row(i), centroid_row(centroids, a, dim));
      if (d > far) {
        far = d;
        far_i = i;
      }
    }
    --sizes[static_cast<std::size_t>(assign[far_i])];
    assign[far_i] = static_cast<int>(e);
    sizes[e] = 1;
    const auto r = pts.row(far_i);
    std::copy(r.begin(), r.end(), centroids.begin() + e * dim);
  }
}

double objective(const EmbeddingMatrix& pts,
                 const std::vector<double>& centroids,
                 const std::vector<int>& assign) {
  double s = 0.0;
  for (std::size_t i = 0; i < pts.rows(); ++i)
    s += sq_dist(pts.row(i),
                 centroid_row(centroids, static_cast<std::size_t>(assign[i]),
                              pts.dim));
  return s;
}

void update_means(const EmbeddingMatrix& pts, const std::vector<int>& assign,
                  std::size_t k, std::vector<double>& centroids) {
  const std::size_t dim = pts.dim;
  std::fill(centroids.begin(), centroids.end(), 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    const auto c = static_cast<std::size_t>(assign[i]);
    ++counts[c];
    const auto r = pts.row(i);
    double* dst = centroids.data() + c * dim;
    for (std::size_t j = 0; j < dim; ++j) dst[j] += r[j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    const double inv = 1.0 / static_cast<double>(counts[c]);
    double* dst = centroids.data() + c * dim;
    for (std::size_t j = 0; j < dim; ++j) dst[j] *= inv;
  }
}

std::vector<double> seed_centroids(const EmbeddingMatrix& pts, std::size_t k,
                                   SplitMix64& rng) {
  const std::size_t n = pts.rows();
  const std::size_t dim = pts.dim;
  std::vector<double> centroids(k * dim);
  std::vector<char> chosen(n, 0);

  auto place = [&](std::size_t c, std::size_t idx) {
    const auto r = pts.row(idx);
    std::copy(r.begin(), r.end(), centroids.begin() + c * dim);
    chosen[idx] = 1;
  };

  const std::size_t first = rng.next_below(n);
  place(0, first);
  std::vector<double> min_d2(n);
  for (std::size_t i = 0; i < n; ++i)
    min_d2[i] = sq_dist(pts.row(i), centroid_row(centroids, 0, dim));

  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : min_d2) total += d;
    std::size_t pick;
    if (total > 0.0 && std::isfinite(total)) {
      pick = rng.sample_weighted(min_d2);
    } else {
      // All remaining mass is zero (duplicate points): uniform over the
      // indices not chosen yet.
      std::size_t n_unchosen = 0;
      for (char f : chosen) n_unchosen += (f == 0);
      std::uint64_t nth = rng.next_below(n_unchosen);
      pick = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        if (nth == 0) {
          pick = i;
          break;
        }
        --nth;
      }
    }
    place(c, pick);
    for (std::size_t i = 0; i < n; ++i)
      min_d2[i] =
          std::min(min_d2[i], sq_dist(pts.row(i), centroid_row(centroids, c, dim)));
  }
  return centroids;
}

}  // namespace

Clustering kmeans_pp(const EmbeddingMatrix& points, std::size_t n_clusters,
                     std::uint64_t seed, int max_iters, double tol) {
  const std::size_t n = points.rows();
  const std::size_t dim = points.dim;
  if (n_clusters < 1) throw ConfigError("kmeans_pp: n_clusters must be >= 1");
  if (n_clusters > n)
    throw ConfigError("kmeans_pp: n_clusters (" + std::to_string(n_clusters) +
                      ") exceeds point count (" + std::to_string(n) + ")");
  if (max_iters < 1) throw ConfigError("kmeans_pp: max_iters must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("kmeans_pp: tol must be > 0");
  for (double v : points.data)
    if (!std::isfinite(v))
      throw ConfigError("kmeans_pp: non-finite input vector");

  SplitMix64 rng(seed);
  std::vector<double> centroids = seed_centroids(points, n_clusters, rng);
  std::vector<int> assign(n, 0);
  assign_pass(points, centroids, n_clusters, assign);
  repair_empty(points, centroids, n_clusters, assign);

  Clustering out;
  out.objective_history.push_back(objective(points, centroids, assign));

  int iterations = 0;
  std::vector<double> old_centroids(centroids.size());
  for (int it = 1; it <= max_iters; ++it) {
    iterations = it;
    old_centroids = centroids;
    update_means(points, assign, n_clusters, centroids);
    assign_pass(points, centroids, n_clusters, assign);
    repair_empty(points, centroids, n_clusters, assign);
    out.objective_history.push_back(objective(points, centroids, assign));

    double shift = 0.0;
    for (std::size_t c = 0; c < n_clusters; ++c)
      shift = std::max(shift,
                       std::sqrt(sq_dist(centroid_row(centroids, c, dim),
                                         centroid_row(old_centroids, c, dim))));
    if (shift < tol) break;
  }

  out.n_clusters = n_clusters;
  out.dim = dim;
  out.centroids = std::move(centroids);
  out.assignments = std::move(assign);
  out.inertia = out.objective_history.back();
  out.seed = seed;
  out.iterations_run = iterations;
  return out;
}

std::vector<std::size_t> nearest_to_centroid(const Clustering& clustering,
                                             const EmbeddingMatrix& points,
                                             std::size_t cluster_id,
                                             std::size_t n) {
  if (cluster_id >= clustering.n_clusters)
    throw ConfigError("nearest_to_centroid: cluster_id out of range: " +
                      std::to_string(cluster_id));
  if (n < 1) throw ConfigError("nearest_to_centroid: n must be >= 1");
  if (points.rows() != clustering.assignments.size() ||
      points.dim != clustering.dim)
    throw ConfigError(
        "nearest_to_centroid: clustering and embeddings are misaligned");

  std::vector<std::pair<double, std::size_t>> members;
  const auto mu = clustering.centroid(cluster_id);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    if (static_cast<std::size_t>(clustering.assignments[i]) != cluster_id)
      continue;
    members.emplace_back(sq_dist(points.row(i), mu), i);
  }
  std::sort(members.begin(), members.end());
  if (members.size() > n) members.resize(n);
  std::vector<std::size_t> out;
  out.reserve(members.size());
  for (const auto& [d, i] : members) out.push_back(i);
  return out;
}

std::string clustering_to_json(const Clustering& c) {
  nlohmann::json j;
  j["n_clusters"] = c.n_clusters;
  j["seed"] = c.seed;
  j["inertia"] = c.inertia;
  j["assignments"] = c.assignments;
  j["dim"] = c.dim;
  j["iterations_run"] = c.iterations_run;
  std::vector<std::vector<double>> rows(c.n_clusters);
  for (std::size_t i = 0; i < c.n_clusters; ++i) {
    const auto r = c.centroid(i);
    rows[i].assign(r.begin(), r.end());
  }
  j["centroids"] = rows;
  return j.dump(2) + "\n";
}

Clustering clustering_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("clustering JSON: ") + e.what());
  }
  Clustering c;
  try {
    c.n_clusters = j.at("n_clusters").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.inertia = j.at("inertia").get<double>();
    c.assignments = j.at("assignments").get<std::vector<int>>();
    c.dim = j.at("dim").get<std::size_t>();
    c.iterations_run = j.at("iterations_run").get<int>();
    const auto rows = j.at("centroids").get<std::vector<std::vector<double>>>();
    if (rows.size() != c.n_clusters)
      throw IoError("clustering JSON: centroid count mismatch");
    for (const auto& r : rows) {
      if (r.size() != c.dim)
        throw IoError("clustering JSON: centroid dimension mismatch");
      c.centroids.insert(c.centroids.end(), r.begin(), r.end());
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("clustering JSON: ") + e.what());
  }
  for (int a : c.assignments)
    if (a < 0 || static_cast<std::size_t>(a) >= c.n_clusters)
      throw IoError("clustering JSON: assignment out of range");
  return c;
}

}  // namespace convograph
