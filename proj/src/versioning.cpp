#include "hinembed/versioning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace hinembed {

size_t EntityMatch::shared_count() const {
  size_t n = 0;
  for (size_t t = 0; t < row_map.size(); ++t) {
    if (type_map[t] < 0) continue;
    for (int64_t r : row_map[t])
      if (r >= 0) ++n;
  }
  return n;
}

EntityMatch match_entities(const HinGraph& new_graph, const EmbeddingStore& prev,
                           const IdMap& prev_ids) {
  const Schema& schema = new_graph.schema();
  EntityMatch match;
  match.type_map.assign(schema.num_entity_types(), -1);
  match.row_map.resize(schema.num_entity_types());
  for (uint32_t t = 0; t < schema.num_entity_types(); ++t) {
    match.row_map[t].assign(new_graph.entity_count(t), -1);
    int64_t pt = -1;
    for (size_t p = 0; p < prev.num_entity_types(); ++p)
      if (prev.entity_type_name(uint32_t(p)) == schema.entity_type(t).name) {
        pt = int64_t(p);
        break;
      }
    match.type_map[t] = pt;
    if (pt < 0) continue;
    for (uint32_t i = 0; i < new_graph.entity_count(t); ++i) {
      const int64_t row = prev_ids.lookup(uint32_t(pt), new_graph.id_map().external_id(t, i));
      if (row >= 0 && size_t(row) < prev.entity_count(uint32_t(pt)))
        match.row_map[t][i] = row;
    }
  }
  return match;
}

EntityMatch identity_match(const HinGraph& graph) {
  EntityMatch match;
  match.type_map.resize(graph.schema().num_entity_types());
  std::iota(match.type_map.begin(), match.type_map.end(), int64_t(0));
  match.row_map.resize(graph.schema().num_entity_types());
  for (uint32_t t = 0; t < graph.schema().num_entity_types(); ++t) {
    match.row_map[t].resize(graph.entity_count(t));
    std::iota(match.row_map[t].begin(), match.row_map[t].end(), int64_t(0));
  }
  return match;
}

EmbeddingStore warm_start_init(const HinGraph& new_graph, const EmbeddingStore& prev,
                               const EntityMatch& match, const WarmStartPolicy& policy,
                               uint32_t dim) {
  if (dim != 0 && dim != prev.dim())
    throw std::invalid_argument("dim mismatch between versions: previous checkpoint has dim " +
                                std::to_string(prev.dim()) + ", requested " +
                                std::to_string(dim));
  const uint32_t d = prev.dim();
  EmbeddingStore store =
      EmbeddingStore::init(new_graph, d, policy.seed, policy.random_scale);

  // Relation vectors copy by name; relations new in this version stay zero.
  // Matched rows carry their optimizer state too, so re-training continues
  // where the previous version stopped instead of re-jolting every row.
  std::vector<int64_t> rel_map(new_graph.schema().num_relation_types(), -1);
  for (uint32_t r = 0; r < new_graph.schema().num_relation_types(); ++r) {
    rel_map[r] = prev.relation_index(new_graph.schema().relation_type(r).name);
    if (rel_map[r] >= 0) {
      const auto src = prev.relation_row(uint32_t(rel_map[r]));
      auto dst = store.mutable_relation_row(r);
      std::copy(src.begin(), src.end(), dst.begin());
      const auto acc_src = prev.relation_accum_row(uint32_t(rel_map[r]));
      auto acc_dst = store.mutable_relation_accum_row(r);
      std::copy(acc_src.begin(), acc_src.end(), acc_dst.begin());
    }
  }

  for (uint32_t t = 0; t < new_graph.schema().num_entity_types(); ++t) {
    if (match.type_map[t] < 0) continue;
    const uint32_t pt = uint32_t(match.type_map[t]);
    for (uint32_t i = 0; i < new_graph.entity_count(t); ++i) {
      if (match.row_map[t][i] < 0) continue;
      const auto src = prev.entity_row(pt, uint32_t(match.row_map[t][i]));
      auto dst = store.mutable_entity_row(t, i);
      std::copy(src.begin(), src.end(), dst.begin());
      const auto acc_src = prev.entity_accum_row(pt, uint32_t(match.row_map[t][i]));
      auto acc_dst = store.mutable_entity_accum_row(t, i);
      std::copy(acc_src.begin(), acc_src.end(), acc_dst.begin());
    }
  }

  if (policy.new_node_init == WarmStartPolicy::NewNodeInit::NeighborhoodFormula) {
    // Sum (theta_neighbor + theta_relation) over edges touching each new
    // entity whose other endpoint carries previous-version parameters.
    std::vector<std::vector<std::vector<double>>> sums(new_graph.schema().num_entity_types());
    std::vector<std::vector<uint32_t>> counts(new_graph.schema().num_entity_types());
    for (uint32_t t = 0; t < new_graph.schema().num_entity_types(); ++t)
      counts[t].assign(new_graph.entity_count(t), 0);

    auto accumulate = [&](const EntityRef& node, const EntityRef& other, uint32_t relation,
                          double rel_sign) {
      if (match.matched(node.entity_type, node.local_id)) return;
      if (!match.matched(other.entity_type, other.local_id)) return;
      auto& per_type = sums[node.entity_type];
      if (per_type.empty()) per_type.resize(new_graph.entity_count(node.entity_type));
      auto& acc = per_type[node.local_id];
      if (acc.empty()) acc.assign(d, 0.0);
      const auto nb = prev.entity_row(uint32_t(match.type_map[other.entity_type]),
                                      uint32_t(match.row_map[other.entity_type][other.local_id]));
      for (uint32_t c = 0; c < d; ++c) acc[c] += double(nb[c]);
      if (rel_map[relation] >= 0) {
        const auto rv = prev.relation_row(uint32_t(rel_map[relation]));
        for (uint32_t c = 0; c < d; ++c) acc[c] += rel_sign * double(rv[c]);
      }
      ++counts[node.entity_type][node.local_id];
    };

    const double source_sign = policy.directional_relation ? -1.0 : 1.0;
    for (const Edge& e : new_graph.edges()) {
      accumulate(e.source, e.target, e.relation, source_sign);
      accumulate(e.target, e.source, e.relation, 1.0);
    }

    for (uint32_t t = 0; t < new_graph.schema().num_entity_types(); ++t) {
      if (sums[t].empty()) continue;
      for (uint32_t i = 0; i < new_graph.entity_count(t); ++i) {
        if (counts[t][i] == 0) continue;  // no known neighbors: random init stands
        auto dst = store.mutable_entity_row(t, i);
        for (uint32_t c = 0; c < d; ++c)
          dst[c] = float(sums[t][i][c] / double(counts[t][i]));
      }
    }
  }
  return store;
}

DriftReport drift_report(const EmbeddingStore& prev, const EmbeddingStore& current,
                         const EntityMatch& match, const HinGraph& new_graph) {
  struct Item {
    uint64_t degree;
    uint32_t type;
    uint32_t row;
    double deviation;
    double rel;
  };
  std::vector<Item> items;
  for (uint32_t t = 0; t < new_graph.schema().num_entity_types(); ++t) {
    if (match.type_map[t] < 0) continue;
    const uint32_t pt = uint32_t(match.type_map[t]);
    for (uint32_t i = 0; i < new_graph.entity_count(t); ++i) {
      if (match.row_map[t][i] < 0) continue;
      const auto a = prev.entity_row(pt, uint32_t(match.row_map[t][i]));
      const auto b = current.entity_row(t, i);
      if (a.size() != b.size())
        throw std::invalid_argument("dim mismatch between versions in drift report");
      const double dev = std::sqrt(squared_l2(a, b));
      const double norm = std::sqrt(dot(a, a));
      items.push_back({new_graph.degree({t, i}), t, i, dev, dev / (norm + 1e-12)});
    }
  }
  if (items.empty()) throw std::runtime_error("no shared entities between versions");

  DriftReport rep;
  rep.shared_entities = items.size();
  double sum = 0.0, rel_sum = 0.0;
  for (const Item& it : items) {
    sum += it.deviation;
    rel_sum += it.rel;
    rep.max_l2 = std::max(rep.max_l2, it.deviation);
  }
  rep.mean_l2 = sum / double(items.size());
  rep.mean_relative = rel_sum / double(items.size());

  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return std::tie(a.degree, a.type, a.row) < std::tie(b.degree, b.type, b.row);
  });
  rep.deciles.assign(10, {});
  for (int dec = 0; dec < 10; ++dec) rep.deciles[dec].decile = dec;
  for (size_t i = 0; i < items.size(); ++i) {
    const int dec = std::min<int>(9, int(i * 10 / items.size()));
    auto& row = rep.deciles[dec];
    ++row.count;
    row.mean_l2 += items[i].deviation;
    row.max_l2 = std::max(row.max_l2, items[i].deviation);
  }
  for (auto& row : rep.deciles)
    if (row.count > 0) row.mean_l2 /= double(row.count);
  return rep;
}

void DriftReport::save_tsv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open drift report for writing: " + path);
  out << "decile\tcount\tmean_l2\tmax_l2\n";
  char buf[96];
  for (const auto& row : deciles) {
    std::snprintf(buf, sizeof(buf), "%d\t%zu\t%.9g\t%.9g", row.decile, row.count, row.mean_l2,
                  row.max_l2);
    out << buf << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

RetrainResult retrain(const HinGraph& new_graph, const Partitioning& partitioning,
                      const EmbeddingStore& prev, const EntityMatch& match,
                      const RetrainPolicy& policy, const TrainConfig& config) {
  if (policy.mode == RetrainMode::L2Anchored && !(policy.alpha > 0.0))
    throw std::invalid_argument("alpha must be > 0 for anchored retraining");

  RetrainResult res;
  if (policy.mode == RetrainMode::ColdStart) {
    res.store = EmbeddingStore::init(new_graph, prev.dim(), policy.warm.seed,
                                     policy.warm.random_scale);
  } else {
    res.store = warm_start_init(new_graph, prev, match, policy.warm);
  }

  AnchorTable anchor;
  const AnchorTable* anchor_ptr = nullptr;
  if (policy.mode == RetrainMode::L2Anchored) {
    anchor.alpha = policy.alpha;
    anchor.prev = &prev;
    anchor.type_map = match.type_map;
    anchor.row_map = match.row_map;
    anchor_ptr = &anchor;
  }
  res.report = train(new_graph, partitioning, res.store, config, anchor_ptr);
  res.drift = drift_report(prev, res.store, match, new_graph);
  return res;
}

}  // namespace hinembed
