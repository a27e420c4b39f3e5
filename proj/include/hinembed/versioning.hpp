#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hinembed/embedding_store.hpp"
#include "hinembed/hin_graph.hpp"
#include "hinembed/partition.hpp"
#include "hinembed/trainer.hpp"

namespace hinembed {

// Row correspondence between a new graph's entities and a previous store,
// matched by entity type name and external id.
struct EntityMatch {
  std::vector<int64_t> type_map;              // new type -> prev type, -1 absent
  std::vector<std::vector<int64_t>> row_map;  // [new type][new id] -> prev row, -1 absent

  bool matched(uint32_t type, uint32_t id) const {
    return type_map[type] >= 0 && row_map[type][id] >= 0;
  }
  size_t shared_count() const;
};

EntityMatch match_entities(const HinGraph& new_graph, const EmbeddingStore& prev,
                           const IdMap& prev_ids);
// Correspondence of a graph to a store trained on that same graph.
EntityMatch identity_match(const HinGraph& graph);

struct WarmStartPolicy {
  enum class NewNodeInit { Random, NeighborhoodFormula };
  NewNodeInit new_node_init = NewNodeInit::NeighborhoodFormula;
  // When set, the relation vector is subtracted for edges where the new node
  // is the source (the translated-source reading of the scorer); by default
  // it is added regardless of direction.
  bool directional_relation = false;
  float random_scale = 0.1f;
  uint64_t seed = 0;
};

// Entities present in both versions copy their previous rows bitwise; new
// entities average (theta_neighbor + theta_relation) over edges whose other
// endpoint is matched, falling back to random init when none is. Relation
// vectors copy by name. Accumulators start at zero.
EmbeddingStore warm_start_init(const HinGraph& new_graph, const EmbeddingStore& prev,
                               const EntityMatch& match, const WarmStartPolicy& policy,
                               uint32_t dim = 0);

enum class RetrainMode { ColdStart, WarmStart, L2Anchored };

struct RetrainPolicy {
  RetrainMode mode = RetrainMode::WarmStart;
  double alpha = 0.1;  // L2Anchored only; must be > 0 in that mode
  WarmStartPolicy warm;
};

// Per-entity L2 deviation between versions over shared entities, aggregated
// by deciles of the new graph's degree.
struct DriftReport {
  struct DecileRow {
    int decile = 0;
    size_t count = 0;
    double mean_l2 = 0.0;
    double max_l2 = 0.0;
  };
  std::vector<DecileRow> deciles;
  size_t shared_entities = 0;
  double mean_l2 = 0.0;
  double max_l2 = 0.0;
  double mean_relative = 0.0;  // deviation / previous row norm

  // TSV: decile <TAB> count <TAB> mean_l2 <TAB> max_l2
  void save_tsv(const std::string& path) const;
};

DriftReport drift_report(const EmbeddingStore& prev, const EmbeddingStore& current,
                         const EntityMatch& match, const HinGraph& new_graph);

struct RetrainResult {
  EmbeddingStore store;
  TrainReport report;
  DriftReport drift;
};

RetrainResult retrain(const HinGraph& new_graph, const Partitioning& partitioning,
                      const EmbeddingStore& prev, const EntityMatch& match,
                      const RetrainPolicy& policy, const TrainConfig& config);

}  // namespace hinembed
