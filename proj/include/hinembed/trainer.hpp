#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "hinembed/embedding_store.hpp"
#include "hinembed/hin_graph.hpp"
#include "hinembed/partition.hpp"
#include "hinembed/rng.hpp"

namespace hinembed {

enum class CorruptSide { Both, SourceOnly, TargetOnly };

struct TrainConfig {
  int epochs = 10;
  int num_negatives = 10;       // corrupted edges per positive
  double negative_mix = 0.5;    // fraction drawn degree-proportionally, rest uniform
  double learning_rate = 0.1;
  int batch_size = 128;
  uint64_t seed = 0;
  uint32_t partitions = 1;
  CorruptSide corrupt_side = CorruptSide::Both;
  int workers = 1;  // >1 schedules disjoint-partition buckets concurrently

  void validate() const;
};

// Positive edges with their per-positive corrupted counterparts.
struct TripletBatch {
  std::vector<Edge> positives;
  std::vector<std::vector<Edge>> negatives;
};

// f(s, r, t) = (theta_s + theta_r) . theta_t, accumulated in double.
double score(const EmbeddingStore& store, const Edge& edge);
double score(const BucketView& view, const Edge& edge);

double stable_sigmoid(double x);
double log_sigmoid(double x);

// Gradient rows keyed by the touched entity/relation rows only.
class SparseGrads {
 public:
  std::vector<double>& entity(uint32_t type, uint32_t id, size_t dim);
  std::vector<double>& relation(uint32_t r, size_t dim);
  const std::vector<double>* find_entity(uint32_t type, uint32_t id) const;
  const std::vector<double>* find_relation(uint32_t r) const;
  size_t num_rows() const { return rows_.size(); }

  struct Row {
    bool is_relation;
    uint32_t type;  // entity type; unused for relations
    uint32_t row;
    std::vector<double> grad;
  };
  // Stable order: rows in first-touch order.
  const std::vector<Row>& rows() const { return rows_; }
  std::vector<Row>& rows() { return rows_; }

 private:
  std::vector<double>& fetch(uint64_t key, bool is_relation, uint32_t type, uint32_t row,
                             size_t dim);
  std::unordered_map<uint64_t, size_t> index_;
  std::vector<Row> rows_;
};

// Degree-aware corruption sampling over one entity type, restricted to a
// candidate subset (a bucket's partitions, or the whole graph).
class CorruptionDomain {
 public:
  CorruptionDomain() = default;
  // All entities of `type`, or only those whose partition is pi or pj.
  CorruptionDomain(const HinGraph& graph, uint32_t type);
  CorruptionDomain(const HinGraph& graph, uint32_t type, const Partitioning& partitioning,
                   uint32_t pi, uint32_t pj);

  size_t size() const { return ids_.size(); }
  // True when there exists a candidate different from `exclude`.
  bool viable(uint32_t exclude) const;
  uint32_t draw_uniform(Rng& rng, uint32_t exclude) const;
  // Degree-proportional, renormalized over candidates != exclude. Falls back
  // to uniform when the remaining total weight is zero.
  uint32_t draw_proportional(Rng& rng, uint32_t exclude) const;

 private:
  int64_t position_of(uint32_t id) const;

  std::vector<uint32_t> ids_;  // ascending local ids
  std::vector<double> cum_;    // cumulative degree weights
  double total_ = 0.0;
};

class NegativeSampler {
 public:
  NegativeSampler(const HinGraph& graph, const TrainConfig& config);
  NegativeSampler(const HinGraph& graph, const TrainConfig& config,
                  const Partitioning& partitioning, uint32_t pi, uint32_t pj);

  // num_negatives corrupted edges: per negative a coin picks the corrupted
  // side (per config), a mix coin picks proportional vs uniform, and the
  // replacement differs from the original endpoint.
  std::vector<Edge> sample(const Edge& positive, Rng& rng) const;

 private:
  const HinGraph* graph_;
  TrainConfig config_;
  std::vector<CorruptionDomain> domains_;  // per entity type
};

std::vector<Edge> sample_negatives(const Edge& positive, const HinGraph& graph,
                                   const TrainConfig& config, Rng& rng);

// Optional L2 anchoring of entity rows to a previous version's values:
// adds alpha * ||theta_v - theta_v_prev||^2 per touched, matched entity.
struct AnchorTable {
  double alpha = 0.0;
  const EmbeddingStore* prev = nullptr;
  std::vector<int64_t> type_map;              // new type -> prev type, -1 absent
  std::vector<std::vector<int64_t>> row_map;  // [new type][new id] -> prev row, -1 absent

  bool anchored(uint32_t type, uint32_t id) const {
    return prev != nullptr && type_map[type] >= 0 && row_map[type][id] >= 0;
  }
};

struct BatchResult {
  double loss = 0.0;
  SparseGrads grads;
};

// loss = -sum_e [ log sig(f(e)) + sum_e' log sig(-f(e')) ] (+ anchor term);
// gradients are exact and touch only the batch's rows.
BatchResult batch_loss_and_grads(const BucketView& view, const TripletBatch& batch,
                                 const AnchorTable* anchor = nullptr);

// Per coordinate: accum += g^2; theta -= lr * g / (sqrt(accum) + 1e-10).
void adagrad_step(BucketView& view, const SparseGrads& grads, double learning_rate);

struct TrainReportRow {
  int epoch;
  uint32_t bucket_i;
  uint32_t bucket_j;
  double mean_loss;   // per positive edge; 0 for empty buckets
  size_t edge_count;
};

struct TrainReport {
  std::vector<TrainReportRow> rows;

  double epoch_mean_loss(int epoch) const;
  // TSV: epoch <TAB> bucket_i <TAB> bucket_j <TAB> mean_loss
  void save_tsv(const std::string& path) const;
};

// One seeded-shuffled sweep over all P^2 buckets per epoch. Negatives are
// restricted to entities inside the bucket's partitions. Single worker is
// bitwise deterministic; multiple workers train disjoint buckets concurrently.
TrainReport train(const HinGraph& graph, const Partitioning& partitioning, EmbeddingStore& store,
                  const TrainConfig& config, const AnchorTable* anchor = nullptr);

// One graph per high-coverage relation: that relation plus every low-coverage
// relation. High-coverage relations are never co-embedded with each other.
struct CoembedGraph {
  std::string high_relation;
  HinGraph graph;
};

std::vector<CoembedGraph> build_coembedding_graphs(const HinGraph& full,
                                                   std::vector<std::string>* warnings = nullptr);

}  // namespace hinembed
