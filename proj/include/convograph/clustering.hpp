#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "convograph/embedding.hpp"

namespace convograph {

struct Clustering {
  std::size_t n_clusters = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;  // n_clusters x dim, row-major
  std::vector<int> assignments;   // length N, values in [0, n_clusters)
  double inertia = 0.0;  // sum of squared distances to assigned centroids
  std::uint64_t seed = 0;
  int iterations_run = 0;
  // Objective recomputed after seeding and after each Lloyd iteration;
  // non-increasing by construction. Not persisted.
  std::vector<double> objective_history;

  std::span<const double> centroid(std::size_t c) const {
    return {centroids.data() + c * dim, dim};
  }
};

// k-means++ seeding (first centroid uniform, each next sampled proportional
// to the squared distance to the nearest chosen centroid) followed by Lloyd
// iterations until the largest centroid shift drops below tol or max_iters
// is reached. Deterministic given the seed. Clusters emptied by a Lloyd
// step are repaired by moving the point farthest from its centroid into the
// empty cluster, so the result never contains an empty cluster.
Clustering kmeans_pp(const EmbeddingMatrix& points, std::size_t n_clusters,
                     std::uint64_t seed, int max_iters = 300,
                     double tol = 1e-4);

// Member indices of one cluster, nearest to its centroid first; at most n,
// distance ties broken toward the lower utterance index.
std::vector<std::size_t> nearest_to_centroid(const Clustering& clustering,
                                             const EmbeddingMatrix& points,
                                             std::size_t cluster_id,
                                             std::size_t n);

// Dump/restore for pipeline resume. Centroids are included so a resumed run
// reproduces downstream results bit-exactly.
std::string clustering_to_json(const Clustering& c);
Clustering clustering_from_json(const std::string& text);

}  // namespace convograph
