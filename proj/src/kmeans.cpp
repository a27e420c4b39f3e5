#include "hinembed/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hinembed/rng.hpp"

namespace hinembed {

namespace {

uint32_t nearest_centroid(const Matrix& centroids, std::span<const float> v) {
  uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_l2(centroids.row(c), v);
    if (d < best_d) {
      best_d = d;
      best = uint32_t(c);
    }
  }
  return best;
}

Matrix seed_plus_plus(const Matrix& data, uint32_t k, Rng& rng) {
  const size_t n = data.rows();
  Matrix centroids(k, data.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<uint8_t> chosen(n, 0);

  size_t first = rand_index(rng, n);
  chosen[first] = 1;
  std::copy(data.row(first).begin(), data.row(first).end(), centroids.row(0).begin());

  for (uint32_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_l2(data.row(i), centroids.row(c - 1)));
      total += d2[i];
    }
    size_t pick = n;
    if (total > 0.0) {
      const double u = rand_unit(rng) * total;
      double run = 0.0;
      for (size_t i = 0; i < n; ++i) {
        run += d2[i];
        if (u < run) {
          pick = i;
          break;
        }
      }
      if (pick == n) pick = n - 1;
    } else {
      // Remaining points coincide with chosen centroids; take the first
      // unchosen row so k distinct slots still get filled.
      for (size_t i = 0; i < n; ++i)
        if (!chosen[i]) {
          pick = i;
          break;
        }
      if (pick == n) pick = rand_index(rng, n);
    }
    chosen[pick] = 1;
    std::copy(data.row(pick).begin(), data.row(pick).end(), centroids.row(c).begin());
  }
  return centroids;
}

double lloyd_iteration(const Matrix& data, Matrix& centroids,
                       std::vector<uint32_t>& assignment) {
  const size_t n = data.rows();
  const size_t k = centroids.rows();
  const size_t dim = data.cols();
  for (size_t i = 0; i < n; ++i) assignment[i] = nearest_centroid(centroids, data.row(i));

  std::vector<double> sums(k * dim, 0.0);
  std::vector<size_t> counts(k, 0);
  for (size_t i = 0; i < n; ++i) {
    const auto row = data.row(i);
    double* s = sums.data() + size_t(assignment[i]) * dim;
    for (size_t d = 0; d < dim; ++d) s[d] += double(row[d]);
    ++counts[assignment[i]];
  }
  double max_shift = 0.0;
  for (size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;  // empty cluster keeps its centroid
    auto row = centroids.row(c);
    double shift = 0.0;
    for (size_t d = 0; d < dim; ++d) {
      const float updated = float(sums[c * dim + d] / double(counts[c]));
      const double delta = double(updated) - double(row[d]);
      shift += delta * delta;
      row[d] = updated;
    }
    max_shift = std::max(max_shift, std::sqrt(shift));
  }
  return max_shift;
}

double minibatch_iteration(const Matrix& data, Matrix& centroids, std::vector<double>& counts,
                           int batch_size, Rng& rng) {
  const size_t dim = data.cols();
  Matrix before = centroids;
  for (int b = 0; b < batch_size; ++b) {
    const size_t i = rand_index(rng, data.rows());
    const uint32_t c = nearest_centroid(centroids, data.row(i));
    counts[c] += 1.0;
    const double eta = 1.0 / counts[c];
    auto row = centroids.row(c);
    const auto x = data.row(i);
    for (size_t d = 0; d < dim; ++d)
      row[d] = float(double(row[d]) + eta * (double(x[d]) - double(row[d])));
  }
  double max_shift = 0.0;
  for (size_t c = 0; c < centroids.rows(); ++c)
    max_shift = std::max(max_shift, std::sqrt(squared_l2(before.row(c), centroids.row(c))));
  return max_shift;
}

}  // namespace

uint32_t ClusterModel::nearest(std::span<const float> v) const {
  return nearest_centroid(centroids, v);
}

std::vector<uint32_t> ClusterModel::assign(const Matrix& vectors) const {
  std::vector<uint32_t> out(vectors.rows());
  for (size_t i = 0; i < vectors.rows(); ++i) out[i] = nearest(vectors.row(i));
  return out;
}

ClusterModel kmeans(const Matrix& targets, const KMeansConfig& config) {
  if (targets.empty()) throw std::invalid_argument("kmeans: empty target set");
  if (config.k == 0) throw std::invalid_argument("kmeans: k must be >= 1");
  if (config.k > targets.rows())
    throw std::invalid_argument("kmeans: k exceeds number of targets");

  Rng rng = make_rng(derive_seed(config.seed, 0x6b6d6e73u));
  ClusterModel model;
  model.centroids = seed_plus_plus(targets, config.k, rng);
  model.target_assignment.assign(targets.rows(), 0);

  if (config.batch_size <= 0) {
    for (int it = 0; it < config.max_iters; ++it) {
      const double shift = lloyd_iteration(targets, model.centroids, model.target_assignment);
      if (shift < config.tol) break;
    }
  } else {
    std::vector<double> counts(config.k, 0.0);
    for (int it = 0; it < config.max_iters; ++it) {
      const double shift =
          minibatch_iteration(targets, model.centroids, counts, config.batch_size, rng);
      if (shift < config.tol) break;
    }
  }

  // Final consistency pass: nearest-centroid assignments and inertia.
  for (size_t i = 0; i < targets.rows(); ++i)
    model.target_assignment[i] = model.nearest(targets.row(i));
  model.inertia = kmeans_inertia(targets, model);
  return model;
}

double kmeans_inertia(const Matrix& targets, const ClusterModel& model) {
  double total = 0.0;
  for (size_t i = 0; i < targets.rows(); ++i)
    total += squared_l2(targets.row(i), model.centroids.row(model.target_assignment[i]));
  return total;
}

}  // namespace hinembed
