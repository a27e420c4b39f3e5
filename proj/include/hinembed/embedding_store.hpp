#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "hinembed/checkpoint.hpp"
#include "hinembed/hin_graph.hpp"
#include "hinembed/matrix.hpp"
#include "hinembed/partition.hpp"

namespace hinembed {

class BucketView;

// Dense parameter tables: one (count x dim) matrix per entity type, one row
// per relation type, and Adagrad accumulators of matching shapes.
//
// Mutation during training goes through BucketView leases: a view holds its
// bucket's one or two partitions exclusively, views over disjoint partition
// pairs may run concurrently, and acquiring a held lease throws. Plain reads
// are allowed only while no lease is outstanding.
class EmbeddingStore {
 public:
  EmbeddingStore();
  EmbeddingStore(const EmbeddingStore& o);
  EmbeddingStore& operator=(const EmbeddingStore& o);
  EmbeddingStore(EmbeddingStore&&) = default;
  EmbeddingStore& operator=(EmbeddingStore&&) = default;

  // Entity rows i.i.d. uniform in [-scale, +scale]; relation vectors and all
  // accumulators zero. Deterministic per seed.
  static EmbeddingStore init(const HinGraph& graph, uint32_t dim, uint64_t seed,
                             float scale = 0.1f);

  uint32_t dim() const { return dim_; }
  size_t num_entity_types() const { return entity_type_names_.size(); }
  size_t num_relation_types() const { return relation_names_.size(); }
  const std::string& entity_type_name(uint32_t t) const { return entity_type_names_.at(t); }
  const std::string& relation_name(uint32_t r) const { return relation_names_.at(r); }
  int64_t relation_index(const std::string& name) const;
  size_t entity_count(uint32_t t) const { return entities_.at(t).rows(); }

  std::span<const float> entity_row(uint32_t t, uint32_t id) const;
  std::span<const float> relation_row(uint32_t r) const;
  std::span<const float> entity_accum_row(uint32_t t, uint32_t id) const;
  std::span<const float> relation_accum_row(uint32_t r) const;

  // Unleased whole-table read (index building, clustering, compression).
  const Matrix& entity_table(uint32_t t) const;
  const Matrix& relation_table() const;

  // Direct mutable access for construction-time setup; requires no
  // outstanding lease.
  std::span<float> mutable_entity_row(uint32_t t, uint32_t id);
  std::span<float> mutable_relation_row(uint32_t r);
  std::span<float> mutable_entity_accum_row(uint32_t t, uint32_t id);
  std::span<float> mutable_relation_accum_row(uint32_t r);

  // Exclusive working-set view over the bucket's two partitions plus all
  // relation vectors. Throws if either partition lease is already held.
  BucketView slice_for_bucket(const Partitioning& partitioning, const Bucket& bucket);

  void save_checkpoint(const std::string& path) const;
  static EmbeddingStore load_checkpoint(const std::string& path);

  Checkpoint to_checkpoint() const;
  static EmbeddingStore from_checkpoint(const Checkpoint& ckpt);

  // Shape/naming consistency vs a graph's schema and counts.
  void validate_against(const HinGraph& graph) const;
  // Throws if any parameter or accumulator is NaN/Inf or any accumulator < 0.
  void validate_finite() const;

  bool equal_contents(const EmbeddingStore& o) const;

 private:
  friend class BucketView;

  struct LeaseState {
    std::mutex mu;
    std::vector<uint8_t> held;
    const void* active_partitioning = nullptr;
    std::atomic<int> outstanding{0};
    std::mutex relation_mu;  // serializes relation-row updates across workers
  };

  void check_unleased() const;

  uint32_t dim_ = 0;
  std::vector<std::string> entity_type_names_;
  std::vector<std::string> relation_names_;
  std::vector<Matrix> entities_;
  std::vector<Matrix> entity_accum_;
  Matrix relations_;
  Matrix relation_accum_;
  std::unique_ptr<LeaseState> lease_;
};

// RAII partition lease. Row accessors throw on rows outside the leased
// partitions (a lease violation), so no unrelated row is reachable.
class BucketView {
 public:
  BucketView(BucketView&& o) noexcept;
  BucketView& operator=(BucketView&&) = delete;
  BucketView(const BucketView&) = delete;
  ~BucketView();

  uint32_t source_partition() const { return pi_; }
  uint32_t target_partition() const { return pj_; }
  uint32_t dim() const { return store_->dim_; }

  bool covers(uint32_t t, uint32_t id) const;

  std::span<float> entity_row(uint32_t t, uint32_t id);
  std::span<const float> entity_row(uint32_t t, uint32_t id) const;
  std::span<float> entity_accum_row(uint32_t t, uint32_t id);
  std::span<float> relation_row(uint32_t r) { return store_->relations_.row(r); }
  std::span<const float> relation_row(uint32_t r) const { return store_->relations_.row(r); }
  std::span<float> relation_accum_row(uint32_t r) { return store_->relation_accum_.row(r); }

  std::mutex& relation_mutex() { return store_->lease_->relation_mu; }

  void release();

 private:
  friend class EmbeddingStore;
  BucketView(EmbeddingStore* store, const Partitioning* partitioning, uint32_t pi, uint32_t pj);

  void check_covered(uint32_t t, uint32_t id) const;

  EmbeddingStore* store_ = nullptr;
  const Partitioning* partitioning_ = nullptr;
  uint32_t pi_ = 0, pj_ = 0;
  bool released_ = true;
};

}  // namespace hinembed
