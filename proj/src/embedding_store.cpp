#include "hinembed/embedding_store.hpp"

#include <cmath>
#include <stdexcept>

#include "hinembed/rng.hpp"

namespace hinembed {

EmbeddingStore::EmbeddingStore() : lease_(std::make_unique<LeaseState>()) {}

EmbeddingStore::EmbeddingStore(const EmbeddingStore& o)
    : dim_(o.dim_),
      entity_type_names_(o.entity_type_names_),
      relation_names_(o.relation_names_),
      entities_(o.entities_),
      entity_accum_(o.entity_accum_),
      relations_(o.relations_),
      relation_accum_(o.relation_accum_),
      lease_(std::make_unique<LeaseState>()) {
  o.check_unleased();
}

EmbeddingStore& EmbeddingStore::operator=(const EmbeddingStore& o) {
  if (this == &o) return *this;
  o.check_unleased();
  check_unleased();
  dim_ = o.dim_;
  entity_type_names_ = o.entity_type_names_;
  relation_names_ = o.relation_names_;
  entities_ = o.entities_;
  entity_accum_ = o.entity_accum_;
  relations_ = o.relations_;
  relation_accum_ = o.relation_accum_;
  return *this;
}

EmbeddingStore EmbeddingStore::init(const HinGraph& graph, uint32_t dim, uint64_t seed,
                                    float scale) {
  if (dim == 0) throw std::invalid_argument("embedding dim must be >= 1");
  if (!(scale > 0.0f)) throw std::invalid_argument("init scale must be positive");
  EmbeddingStore s;
  s.dim_ = dim;
  const Schema& schema = graph.schema();
  for (uint32_t t = 0; t < schema.num_entity_types(); ++t) {
    s.entity_type_names_.push_back(schema.entity_type(t).name);
    Matrix m(graph.entity_count(t), dim);
    Rng rng = make_rng(derive_seed(seed, 0x696e6974u, t));
    std::uniform_real_distribution<float> u(-scale, scale);
    for (size_t r = 0; r < m.rows(); ++r)
      for (float& v : m.row(r)) v = u(rng);
    s.entities_.push_back(std::move(m));
    s.entity_accum_.emplace_back(graph.entity_count(t), dim);
  }
  for (uint32_t r = 0; r < schema.num_relation_types(); ++r)
    s.relation_names_.push_back(schema.relation_type(r).name);
  s.relations_ = Matrix(schema.num_relation_types(), dim);
  s.relation_accum_ = Matrix(schema.num_relation_types(), dim);
  return s;
}

int64_t EmbeddingStore::relation_index(const std::string& name) const {
  for (size_t i = 0; i < relation_names_.size(); ++i)
    if (relation_names_[i] == name) return int64_t(i);
  return -1;
}

void EmbeddingStore::check_unleased() const {
  if (lease_->outstanding.load(std::memory_order_acquire) != 0)
    throw std::runtime_error("store access while a bucket lease is outstanding");
}

std::span<const float> EmbeddingStore::entity_row(uint32_t t, uint32_t id) const {
  check_unleased();
  return entities_.at(t).row(id);
}

std::span<const float> EmbeddingStore::relation_row(uint32_t r) const {
  check_unleased();
  return relations_.row(r);
}

std::span<const float> EmbeddingStore::entity_accum_row(uint32_t t, uint32_t id) const {
  check_unleased();
  return entity_accum_.at(t).row(id);
}

std::span<const float> EmbeddingStore::relation_accum_row(uint32_t r) const {
  check_unleased();
  return relation_accum_.row(r);
}

const Matrix& EmbeddingStore::entity_table(uint32_t t) const {
  check_unleased();
  return entities_.at(t);
}

const Matrix& EmbeddingStore::relation_table() const {
  check_unleased();
  return relations_;
}

std::span<float> EmbeddingStore::mutable_entity_row(uint32_t t, uint32_t id) {
  check_unleased();
  return entities_.at(t).row(id);
}

std::span<float> EmbeddingStore::mutable_relation_row(uint32_t r) {
  check_unleased();
  return relations_.row(r);
}

std::span<float> EmbeddingStore::mutable_entity_accum_row(uint32_t t, uint32_t id) {
  check_unleased();
  return entity_accum_.at(t).row(id);
}

std::span<float> EmbeddingStore::mutable_relation_accum_row(uint32_t r) {
  check_unleased();
  return relation_accum_.row(r);
}

BucketView EmbeddingStore::slice_for_bucket(const Partitioning& partitioning,
                                            const Bucket& bucket) {
  auto& ls = *lease_;
  std::lock_guard<std::mutex> lock(ls.mu);
  if (ls.outstanding.load(std::memory_order_relaxed) == 0) {
    ls.active_partitioning = &partitioning;
    ls.held.assign(partitioning.num_partitions, 0);
  } else if (ls.active_partitioning != &partitioning) {
    throw std::runtime_error("bucket views from different partitionings cannot coexist");
  }
  const uint32_t i = bucket.source_partition;
  const uint32_t j = bucket.target_partition;
  if (i >= partitioning.num_partitions || j >= partitioning.num_partitions)
    throw std::out_of_range("bucket partition index out of range");
  if (ls.held[i] || ls.held[j])
    throw std::runtime_error("partition lease already held for bucket (" + std::to_string(i) +
                             ", " + std::to_string(j) + ")");
  ls.held[i] = 1;
  ls.held[j] = 1;
  ls.outstanding.fetch_add(1, std::memory_order_acq_rel);
  return BucketView(this, &partitioning, i, j);
}

Checkpoint EmbeddingStore::to_checkpoint() const {
  check_unleased();
  Checkpoint ckpt(dim_);
  for (size_t t = 0; t < entities_.size(); ++t)
    ckpt.add_table("ent:" + entity_type_names_[t], entities_[t]);
  for (size_t r = 0; r < relation_names_.size(); ++r) {
    Matrix row(1, dim_);
    for (uint32_t c = 0; c < dim_; ++c) row.row(0)[c] = relations_.row(r)[c];
    ckpt.add_table("rel:" + relation_names_[r], std::move(row));
  }
  for (size_t t = 0; t < entities_.size(); ++t)
    ckpt.add_table("acc:ent:" + entity_type_names_[t], entity_accum_[t]);
  for (size_t r = 0; r < relation_names_.size(); ++r) {
    Matrix row(1, dim_);
    for (uint32_t c = 0; c < dim_; ++c) row.row(0)[c] = relation_accum_.row(r)[c];
    ckpt.add_table("acc:rel:" + relation_names_[r], std::move(row));
  }
  return ckpt;
}

EmbeddingStore EmbeddingStore::from_checkpoint(const Checkpoint& ckpt) {
  EmbeddingStore s;
  s.dim_ = ckpt.dim();
  if (s.dim_ == 0) throw std::runtime_error("checkpoint has dim 0");
  for (size_t i = 0; i < ckpt.num_tables(); ++i) {
    const std::string& name = ckpt.name(i);
    if (name.rfind("acc:", 0) == 0) continue;
    if (name.rfind("ent:", 0) == 0) {
      s.entity_type_names_.push_back(name.substr(4));
      s.entities_.push_back(ckpt.table(name));
    } else if (name.rfind("rel:", 0) == 0) {
      s.relation_names_.push_back(name.substr(4));
    } else {
      throw std::runtime_error("unexpected table in embedding checkpoint: " + name);
    }
  }
  s.relations_ = Matrix(s.relation_names_.size(), s.dim_);
  s.relation_accum_ = Matrix(s.relation_names_.size(), s.dim_);
  for (size_t r = 0; r < s.relation_names_.size(); ++r) {
    const Matrix& row = ckpt.table("rel:" + s.relation_names_[r]);
    if (row.rows() != 1) throw std::runtime_error("relation table must have exactly 1 row");
    for (uint32_t c = 0; c < s.dim_; ++c) s.relations_.row(r)[c] = row.row(0)[c];
    if (!ckpt.has_table("acc:rel:" + s.relation_names_[r]))
      throw std::runtime_error("missing accumulator table for relation " + s.relation_names_[r]);
    const Matrix& acc = ckpt.table("acc:rel:" + s.relation_names_[r]);
    if (acc.rows() != 1) throw std::runtime_error("accumulator table shape mismatch");
    for (uint32_t c = 0; c < s.dim_; ++c) s.relation_accum_.row(r)[c] = acc.row(0)[c];
  }
  for (size_t t = 0; t < s.entity_type_names_.size(); ++t) {
    const std::string acc_name = "acc:ent:" + s.entity_type_names_[t];
    if (!ckpt.has_table(acc_name))
      throw std::runtime_error("missing accumulator table for entity type " +
                               s.entity_type_names_[t]);
    const Matrix& acc = ckpt.table(acc_name);
    if (acc.rows() != s.entities_[t].rows())
      throw std::runtime_error("accumulator table shape mismatch for entity type " +
                               s.entity_type_names_[t]);
    s.entity_accum_.push_back(acc);
  }
  const size_t expected =
      2 * s.entity_type_names_.size() + 2 * s.relation_names_.size();
  if (ckpt.num_tables() != expected)
    throw std::runtime_error("embedding checkpoint has unexpected extra tables");
  return s;
}

void EmbeddingStore::save_checkpoint(const std::string& path) const {
  validate_finite();
  to_checkpoint().save(path);
}

EmbeddingStore EmbeddingStore::load_checkpoint(const std::string& path) {
  return from_checkpoint(Checkpoint::load(path));
}

void EmbeddingStore::validate_against(const HinGraph& graph) const {
  const Schema& schema = graph.schema();
  if (entity_type_names_.size() != schema.num_entity_types() ||
      relation_names_.size() != schema.num_relation_types())
    throw std::runtime_error("store schema does not match graph schema");
  for (uint32_t t = 0; t < schema.num_entity_types(); ++t) {
    if (entity_type_names_[t] != schema.entity_type(t).name)
      throw std::runtime_error("entity type mismatch at index " + std::to_string(t));
    if (entities_[t].rows() != graph.entity_count(t))
      throw std::runtime_error("row count mismatch for entity type " + entity_type_names_[t]);
  }
  for (uint32_t r = 0; r < schema.num_relation_types(); ++r)
    if (relation_names_[r] != schema.relation_type(r).name)
      throw std::runtime_error("relation type mismatch at index " + std::to_string(r));
}

void EmbeddingStore::validate_finite() const {
  check_unleased();
  auto check_matrix = [](const Matrix& m, const std::string& what, bool nonneg) {
    for (size_t r = 0; r < m.rows(); ++r)
      for (float v : m.row(r)) {
        if (!std::isfinite(v)) throw std::runtime_error("non-finite value in " + what);
        if (nonneg && v < 0.0f) throw std::runtime_error("negative accumulator in " + what);
      }
  };
  for (size_t t = 0; t < entities_.size(); ++t) {
    check_matrix(entities_[t], "entity table " + entity_type_names_[t], false);
    check_matrix(entity_accum_[t], "accumulators of " + entity_type_names_[t], true);
  }
  check_matrix(relations_, "relation table", false);
  check_matrix(relation_accum_, "relation accumulators", true);
}

bool EmbeddingStore::equal_contents(const EmbeddingStore& o) const {
  return dim_ == o.dim_ && entity_type_names_ == o.entity_type_names_ &&
         relation_names_ == o.relation_names_ && entities_ == o.entities_ &&
         entity_accum_ == o.entity_accum_ && relations_ == o.relations_ &&
         relation_accum_ == o.relation_accum_;
}

BucketView::BucketView(EmbeddingStore* store, const Partitioning* partitioning, uint32_t pi,
                       uint32_t pj)
    : store_(store), partitioning_(partitioning), pi_(pi), pj_(pj), released_(false) {}

BucketView::BucketView(BucketView&& o) noexcept
    : store_(o.store_), partitioning_(o.partitioning_), pi_(o.pi_), pj_(o.pj_),
      released_(o.released_) {
  o.released_ = true;
}

BucketView::~BucketView() { release(); }

void BucketView::release() {
  if (released_) return;
  released_ = true;
  auto& ls = *store_->lease_;
  std::lock_guard<std::mutex> lock(ls.mu);
  ls.held[pi_] = 0;
  ls.held[pj_] = 0;
  ls.outstanding.fetch_sub(1, std::memory_order_acq_rel);
}

bool BucketView::covers(uint32_t t, uint32_t id) const {
  const uint32_t p = partitioning_->assignment.at(t).at(id);
  return p == pi_ || p == pj_;
}

void BucketView::check_covered(uint32_t t, uint32_t id) const {
  if (released_) throw std::runtime_error("use of released bucket view");
  if (!covers(t, id))
    throw std::runtime_error("lease violation: entity outside bucket view (type " +
                             std::to_string(t) + ", id " + std::to_string(id) + ")");
}

std::span<float> BucketView::entity_row(uint32_t t, uint32_t id) {
  check_covered(t, id);
  return store_->entities_.at(t).row(id);
}

std::span<const float> BucketView::entity_row(uint32_t t, uint32_t id) const {
  check_covered(t, id);
  return store_->entities_.at(t).row(id);
}

std::span<float> BucketView::entity_accum_row(uint32_t t, uint32_t id) {
  check_covered(t, id);
  return store_->entity_accum_.at(t).row(id);
}

}  // namespace hinembed
