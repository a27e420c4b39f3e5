#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hinembed/hin_graph.hpp"

namespace hinembed {

struct SyntheticRelationSpec {
  std::string name;
  std::string source_type = "user";
  std::string target_type;
  Coverage coverage = Coverage::High;
  double participation = 1.0;  // fraction of sources using this relation
  int edges_per_source = 8;    // scaled by SyntheticSpec::density
};

// Planted-partition heterogeneous graph: every entity carries a latent
// community, sources draw edges mostly inside their communities, and a
// configurable fraction of sources straddles two.
struct SyntheticSpec {
  std::vector<std::pair<std::string, int>> entity_counts;  // declaration order
  std::vector<SyntheticRelationSpec> relations;
  int communities = 2;
  double density = 1.0;               // (0, 1]
  double inter_community_mix = 0.05;  // probability an edge crosses communities
  double multi_interest_fraction = 0.0;
  // When > 0, a two-interest source draws its secondary community with this
  // probability and its primary otherwise; 0 means uniform over memberships.
  double secondary_interest_weight = 0.0;
  double degree_skew = 0.0;  // >0 gives zipf-like target popularity
  uint64_t seed = 0;
};

struct EdgeRecord {
  std::string source_type;
  std::string source_id;
  std::string relation;
  std::string target_type;
  std::string target_id;
};

struct SyntheticHin {
  Schema schema;
  std::vector<EdgeRecord> records;
  HinGraph graph;
  // Ground truth: per entity type, per local id, community memberships
  // (primary first).
  std::vector<std::vector<std::vector<int>>> memberships;
  int communities = 0;

  int primary_community(uint32_t type, uint32_t id) const {
    return memberships.at(type).at(id).at(0);
  }
};

SyntheticHin generate_synthetic_hin(const SyntheticSpec& spec);

// A later snapshot of the same network: appended entities and edges, with
// all existing external ids (and therefore warm-start matches) preserved.
struct GrowthSpec {
  double new_edge_fraction = 0.05;
  std::vector<std::pair<std::string, int>> new_entities;
  uint64_t seed = 1;
};

SyntheticHin grow_synthetic_hin(const SyntheticSpec& spec, const SyntheticHin& base,
                                const GrowthSpec& growth);

void save_edge_records_tsv(const std::string& path, const std::vector<EdgeRecord>& records);
void save_schema_file(const std::string& path, const Schema& schema);

}  // namespace hinembed
