#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hinembed/checkpoint.hpp"
#include "hinembed/matrix.hpp"

namespace hinembed {

// Per-subspace centroid tables: M subquantizers over contiguous d/M blocks,
// up to 256 centroids each (one byte per code).
struct PQCodebook {
  uint32_t m = 0;        // number of subquantizers
  uint32_t subdim = 0;   // d / M
  uint32_t ksub = 0;     // centroids per subquantizer (<= 256)
  std::vector<Matrix> centroids;  // per subquantizer: ksub x subdim

  uint32_t dim() const { return m * subdim; }

  // Stored as a checkpoint container with tables "pq_centroids_<m>".
  void save(const std::string& path) const;
  static PQCodebook load(const std::string& path);
};

struct PQCodes {
  uint32_t m = 0;
  uint64_t rows = 0;
  std::vector<uint8_t> codes;  // row-major, rows x m

  // File layout: u32 M | u64 row count | raw bytes.
  void save(const std::string& path) const;
  static PQCodes load(const std::string& path);
};

struct PQTrainConfig {
  uint32_t m = 8;
  uint64_t seed = 0;
  int kmeans_iters = 25;
};

// Independent k-means per subspace. ksub clamps to the row count when the
// table has fewer than 256 rows.
PQCodebook train_codebook(const Matrix& table, const PQTrainConfig& config);

// Nearest centroid per subspace (L2, ties to the lower code).
PQCodes encode(const Matrix& table, const PQCodebook& codebook);
// Concatenates the coded centroids.
Matrix decode(const PQCodes& codes, const PQCodebook& codebook);

struct CompressionReport {
  double factor = 0.0;        // (d * 4 bytes) / (M bytes), codebook excluded
  size_t codebook_bytes = 0;  // amortized side cost, reported separately
  double mse = 0.0;           // mean squared reconstruction error, 64-bit
  double max_row_l2 = 0.0;    // max over rows of the residual's L2 norm
};

CompressionReport compression_report(const Matrix& table, const PQCodebook& codebook);

}  // namespace hinembed
