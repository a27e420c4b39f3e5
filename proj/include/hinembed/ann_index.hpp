#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hinembed/kmeans.hpp"
#include "hinembed/matrix.hpp"
#include "hinembed/mixture.hpp"

namespace hinembed {

struct Candidate {
  uint32_t id = 0;       // row in the indexed table
  double score = 0.0;    // inner product with the query
  int32_t component = -1;  // mixture component that produced it; -1 for direct queries
};

// Scores nonincreasing within each component's candidates; no duplicate ids
// after a multi-query merge.
struct CandidateList {
  std::vector<Candidate> items;
};

struct AnnParams {
  enum class Mode { Exact, IVF };
  Mode mode = Mode::IVF;
  // IVF defaults documented in the README; the unit suite checks recall@10
  // against the exact oracle at exactly these values.
  uint32_t nlist = 64;    // inverted lists (clamped to the vector count)
  uint32_t nprobe = 16;   // lists scanned per query
  int ivf_train_iters = 10;
  uint64_t seed = 0;
};

// Inner-product top-k index over one entity type's vectors. Exact mode scans
// all rows; IVF mode scans the nprobe lists whose centroids score highest.
// Ties break toward the lower row id. Immutable after build.
class AnnIndex {
 public:
  static AnnIndex build(const Matrix& vectors, const AnnParams& params,
                        const std::string& entity_type = "",
                        std::vector<std::string> external_ids = {});

  CandidateList query_topk(std::span<const float> query, size_t k) const;

  size_t size() const { return vectors_.rows(); }
  uint32_t dim() const { return uint32_t(vectors_.cols()); }
  const std::string& entity_type() const { return entity_type_; }
  const std::string& external_id(uint32_t row) const { return external_ids_.at(row); }
  // -1 when the id is not indexed.
  int64_t row_of(const std::string& external_id) const;
  std::span<const float> vector(uint32_t row) const { return vectors_.row(row); }
  const AnnParams& params() const { return params_; }

  void save(const std::string& path) const;
  static AnnIndex load(const std::string& path);

 private:
  std::string entity_type_;
  std::vector<std::string> external_ids_;
  Matrix vectors_;
  AnnParams params_;
  Matrix centroids_;                          // IVF only
  std::vector<std::vector<uint32_t>> lists_;  // IVF only
};

// Queries each mixture component's vector separately, allocating of the K
// candidates a largest-remainder proportional share per component weight,
// then merges with id de-duplication (keeping the highest-scoring
// provenance). Result ordered by (score desc, id asc); size <= K.
CandidateList multi_query(const AnnIndex& index, const MixtureRepresentation& mixture, size_t k);

}  // namespace hinembed
