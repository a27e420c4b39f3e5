#pragma once

#include <cstdint>
#include <vector>

#include "hinembed/hin_graph.hpp"

namespace hinembed {

// Entity -> partition assignment over {0..P-1}, one entry per entity of
// every type. The default assigner deals a seeded shuffle round-robin, so
// per-type partition sizes stay balanced while each entity's partition is
// marginally uniform.
struct Partitioning {
  uint32_t num_partitions = 1;
  std::vector<std::vector<uint32_t>> assignment;  // [entity_type][local_id]

  uint32_t of(const EntityRef& e) const { return assignment.at(e.entity_type).at(e.local_id); }
};

Partitioning partition(const HinGraph& graph, uint32_t num_partitions, uint64_t seed);

// Edges whose endpoints fall in a fixed (source partition, target partition) pair.
struct Bucket {
  uint32_t source_partition = 0;
  uint32_t target_partition = 0;
  std::vector<size_t> edge_indices;
};

// Exactly P^2 buckets in row-major (i, j) order; every edge index appears
// in exactly one bucket.
std::vector<Bucket> bucketize(const HinGraph& graph, const Partitioning& partitioning);

}  // namespace hinembed
