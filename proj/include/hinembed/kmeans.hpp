#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hinembed/matrix.hpp"

namespace hinembed {

struct KMeansConfig {
  uint32_t k = 8;
  uint64_t seed = 0;
  int max_iters = 25;
  int batch_size = 0;  // 0 = full-batch Lloyd, >0 = mini-batch updates
  double tol = 1e-4;   // stop when the max centroid shift drops below this
};

// k centroids over the input rows plus each row's nearest-centroid cluster.
// Immutable after fit; ties resolve to the lower centroid index.
struct ClusterModel {
  Matrix centroids;
  std::vector<uint32_t> target_assignment;
  double inertia = 0.0;

  uint32_t k() const { return uint32_t(centroids.rows()); }
  uint32_t nearest(std::span<const float> v) const;
  // Nearest-centroid assignment for an arbitrary table of rows.
  std::vector<uint32_t> assign(const Matrix& vectors) const;
};

// k-means++ seeding, then Lloyd or mini-batch updates depending on
// config.batch_size. Deterministic per seed.
ClusterModel kmeans(const Matrix& targets, const KMeansConfig& config);

// Sum over rows of squared L2 distance to the assigned centroid.
double kmeans_inertia(const Matrix& targets, const ClusterModel& model);

}  // namespace hinembed
