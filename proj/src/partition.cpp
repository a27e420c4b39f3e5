#include "hinembed/partition.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "hinembed/rng.hpp"

namespace hinembed {

Partitioning partition(const HinGraph& graph, uint32_t num_partitions, uint64_t seed) {
  if (num_partitions == 0) throw std::invalid_argument("num_partitions must be >= 1");
  Partitioning p;
  p.num_partitions = num_partitions;
  p.assignment.resize(graph.schema().num_entity_types());
  for (uint32_t t = 0; t < graph.schema().num_entity_types(); ++t) {
    const size_t n = graph.entity_count(t);
    auto& a = p.assignment[t];
    a.assign(n, 0);
    if (num_partitions == 1) continue;
    std::vector<uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    Rng rng = make_rng(derive_seed(seed, 0x70617274u, t));
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t i = 0; i < n; ++i) a[order[i]] = uint32_t(i % num_partitions);
  }
  return p;
}

std::vector<Bucket> bucketize(const HinGraph& graph, const Partitioning& partitioning) {
  const uint32_t P = partitioning.num_partitions;
  if (partitioning.assignment.size() != graph.schema().num_entity_types())
    throw std::runtime_error("partitioning does not cover all entity types");
  for (uint32_t t = 0; t < graph.schema().num_entity_types(); ++t)
    if (partitioning.assignment[t].size() != graph.entity_count(t))
      throw std::runtime_error("entity missing a partition assignment in type '" +
                               graph.schema().entity_type(t).name + "'");
  std::vector<Bucket> buckets(size_t(P) * P);
  for (uint32_t i = 0; i < P; ++i)
    for (uint32_t j = 0; j < P; ++j) {
      buckets[size_t(i) * P + j].source_partition = i;
      buckets[size_t(i) * P + j].target_partition = j;
    }
  const auto& edges = graph.edges();
  for (size_t e = 0; e < edges.size(); ++e) {
    const uint32_t i = partitioning.of(edges[e].source);
    const uint32_t j = partitioning.of(edges[e].target);
    buckets[size_t(i) * P + j].edge_indices.push_back(e);
  }
  return buckets;
}

}  // namespace hinembed
