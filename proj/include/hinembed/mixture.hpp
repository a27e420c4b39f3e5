#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hinembed/embedding_store.hpp"
#include "hinembed/hin_graph.hpp"
#include "hinembed/kmeans.hpp"

namespace hinembed {

// cluster < 0 marks the self-fallback component (the entity's own trained
// embedding, used when it has no engagements to clustered targets).
struct MixtureComponent {
  int64_t cluster = -1;
  double weight = 1.0;
  std::vector<float> vec;
};

// Distribution over an entity's most engaged target clusters, descending by
// weight; weights renormalize to 1 over the kept components.
struct MixtureRepresentation {
  std::vector<MixtureComponent> components;
};

struct NoEngagementsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Counts edges source -> (entity of target_type), buckets them by the
// target's cluster, keeps the top m clusters by count (ties to the lower
// cluster index) and renormalizes. Throws NoEngagementsError when the source
// has no such edge.
MixtureRepresentation engagement_distribution(const EntityRef& source, const HinGraph& graph,
                                              const ClusterModel& model, uint32_t target_type,
                                              int m);

// One pass over the graph for every source of source_type. Sources without
// engagements fall back to a single self component when `fallback` is given,
// otherwise get an empty component list.
std::vector<MixtureRepresentation> engagement_distributions(const HinGraph& graph,
                                                            const ClusterModel& model,
                                                            uint32_t source_type,
                                                            uint32_t target_type, int m,
                                                            const EmbeddingStore* fallback);

struct OovEmbedding {
  uint32_t cluster = 0;
  std::vector<float> centroid;
};

// Inductive embedding of an entity absent from training: the centroid of the
// cluster nearest to the mean of its known neighbors' embeddings. Never
// mutates the store.
OovEmbedding embed_oov_target(std::span<const EntityRef> known_neighbors,
                              const EmbeddingStore& store, const ClusterModel& model);

// TSV dump: entity_type<TAB>external_id<TAB>cluster:weight[,cluster:weight...]
void save_mixtures_tsv(const std::string& path, const std::string& entity_type,
                       const std::vector<std::string>& external_ids,
                       const std::vector<MixtureRepresentation>& mixtures);

struct MixtureRecord {
  std::string entity_type;
  std::string external_id;
  std::vector<std::pair<int64_t, double>> components;  // (cluster, weight)
};

std::vector<MixtureRecord> load_mixtures_tsv(const std::string& path);

}  // namespace hinembed
