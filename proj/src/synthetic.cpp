#include "hinembed/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "hinembed/rng.hpp"

namespace hinembed {

namespace {

std::string external_id(const std::string& type, uint32_t i) {
  return type + "_" + std::to_string(i);
}

// Drawing state shared by initial generation and growth.
struct GenState {
  const SyntheticSpec* spec = nullptr;
  Schema schema;
  std::vector<std::string> type_names;
  std::vector<size_t> counts;
  std::vector<std::vector<std::vector<int>>> memberships;
  // members[type][community]: ascending ids; cum[type][community]: popularity
  std::vector<std::vector<std::vector<uint32_t>>> members;
  std::vector<std::vector<std::vector<double>>> cum;

  uint32_t type_index(const std::string& name) const {
    const int64_t t = schema.entity_type_index(name);
    if (t < 0) throw std::invalid_argument("relation references undeclared type: " + name);
    return uint32_t(t);
  }

  void rebuild_community_tables() {
    const int C = spec->communities;
    members.assign(counts.size(), {});
    cum.assign(counts.size(), {});
    for (size_t t = 0; t < counts.size(); ++t) {
      members[t].assign(size_t(C), {});
      cum[t].assign(size_t(C), {});
      for (uint32_t i = 0; i < counts[t]; ++i)
        members[t][size_t(memberships[t][i][0])].push_back(i);
      for (int c = 0; c < C; ++c) {
        double run = 0.0;
        for (size_t p = 0; p < members[t][size_t(c)].size(); ++p) {
          run += spec->degree_skew > 0.0 ? std::pow(double(p + 1), -spec->degree_skew) : 1.0;
          cum[t][size_t(c)].push_back(run);
        }
      }
    }
  }

  uint32_t draw_member(uint32_t type, int community, Rng& rng) const {
    const auto& list = members[type][size_t(community)];
    if (list.empty()) {
      // Community has no entities of this type; fall back to the whole type.
      return uint32_t(rand_index(rng, counts[type]));
    }
    const auto& c = cum[type][size_t(community)];
    const double u = rand_unit(rng) * c.back();
    size_t p = size_t(std::upper_bound(c.begin(), c.end(), u) - c.begin());
    if (p >= list.size()) p = list.size() - 1;
    return list[p];
  }

  int draw_community(uint32_t source_type, uint32_t source_id, Rng& rng) const {
    const int C = spec->communities;
    const auto& mine = memberships[source_type][source_id];
    if (C > 1 && rand_unit(rng) < spec->inter_community_mix) {
      std::vector<int> others;
      others.reserve(size_t(C));
      for (int c = 0; c < C; ++c)
        if (std::find(mine.begin(), mine.end(), c) == mine.end()) others.push_back(c);
      if (!others.empty()) return others[rand_index(rng, others.size())];
    }
    if (spec->secondary_interest_weight > 0.0 && mine.size() >= 2)
      return rand_unit(rng) < spec->secondary_interest_weight ? mine[1] : mine[0];
    return mine[rand_index(rng, mine.size())];
  }

  EdgeRecord draw_edge(const SyntheticRelationSpec& rel, uint32_t source_id, Rng& rng) const {
    const uint32_t st = type_index(rel.source_type);
    const uint32_t tt = type_index(rel.target_type);
    const int community = draw_community(st, source_id, rng);
    uint32_t target = draw_member(tt, community, rng);
    for (int attempt = 0; attempt < 16 && st == tt && target == source_id; ++attempt)
      target = draw_member(tt, community, rng);
    return {rel.source_type, external_id(rel.source_type, source_id), rel.name, rel.target_type,
            external_id(rel.target_type, target)};
  }
};

std::vector<uint8_t> participation_flags(const SyntheticSpec& spec, size_t rel_index,
                                         size_t n_sources) {
  const double frac = spec.relations[rel_index].participation;
  std::vector<uint8_t> flags(n_sources, 0);
  const size_t take = size_t(std::ceil(frac * double(n_sources)));
  std::vector<uint32_t> order(n_sources);
  std::iota(order.begin(), order.end(), 0u);
  Rng rng = make_rng(derive_seed(spec.seed, 0x70617274u + 7, rel_index));
  std::shuffle(order.begin(), order.end(), rng);
  for (size_t i = 0; i < std::min(take, n_sources); ++i) flags[order[i]] = 1;
  return flags;
}

void validate_spec(const SyntheticSpec& spec) {
  if (!(spec.density > 0.0 && spec.density <= 1.0))
    throw std::invalid_argument("density must be in (0, 1]");
  if (spec.communities < 1) throw std::invalid_argument("communities must be >= 1");
  if (spec.entity_counts.empty()) throw std::invalid_argument("no entity types declared");
  for (const auto& [name, n] : spec.entity_counts)
    if (n <= 0) throw std::invalid_argument("entity count must be positive for " + name);
  if (spec.relations.empty()) throw std::invalid_argument("no relations declared");
}

Schema schema_from_spec(const SyntheticSpec& spec) {
  Schema schema;
  for (const auto& [name, n] : spec.entity_counts) schema.add_entity_type(name);
  for (const auto& rel : spec.relations)
    schema.add_relation_type(rel.name, rel.source_type, rel.target_type, rel.coverage);
  return schema;
}

bool is_source_type(const SyntheticSpec& spec, const std::string& type) {
  for (const auto& rel : spec.relations)
    if (rel.source_type == type) return true;
  return false;
}

std::vector<int> assign_memberships_balanced(size_t n, int communities, Rng& rng) {
  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> primary(n);
  for (size_t i = 0; i < n; ++i) primary[order[i]] = int(i % size_t(communities));
  return primary;
}

// Entities are declared up front so graph local ids equal the generator's
// numbering and the memberships ground truth lines up with them.
HinGraph build_graph(const Schema& schema, const std::vector<std::string>& type_names,
                     const std::vector<size_t>& counts,
                     const std::vector<EdgeRecord>& records) {
  GraphBuilder builder(schema);
  for (size_t t = 0; t < type_names.size(); ++t)
    for (uint32_t i = 0; i < counts[t]; ++i)
      builder.declare_entity(type_names[t], external_id(type_names[t], i));
  for (const EdgeRecord& r : records)
    builder.add_edge(r.source_type, r.source_id, r.relation, r.target_type, r.target_id);
  return builder.build();
}

}  // namespace

SyntheticHin generate_synthetic_hin(const SyntheticSpec& spec) {
  validate_spec(spec);
  GenState st;
  st.spec = &spec;
  st.schema = schema_from_spec(spec);
  for (const auto& [name, n] : spec.entity_counts) {
    st.type_names.push_back(name);
    st.counts.push_back(size_t(n));
  }

  st.memberships.resize(st.counts.size());
  for (size_t t = 0; t < st.counts.size(); ++t) {
    Rng rng = make_rng(derive_seed(spec.seed, 0x636f6d6du, t));
    const std::vector<int> primary =
        assign_memberships_balanced(st.counts[t], spec.communities, rng);
    st.memberships[t].resize(st.counts[t]);
    for (uint32_t i = 0; i < st.counts[t]; ++i) st.memberships[t][i] = {primary[i]};
    if (spec.multi_interest_fraction > 0.0 && spec.communities > 1 &&
        is_source_type(spec, st.type_names[t])) {
      std::vector<uint32_t> order(st.counts[t]);
      std::iota(order.begin(), order.end(), 0u);
      std::shuffle(order.begin(), order.end(), rng);
      const size_t take = size_t(std::ceil(spec.multi_interest_fraction * double(st.counts[t])));
      for (size_t i = 0; i < std::min(take, order.size()); ++i) {
        const uint32_t id = order[i];
        const int second = (st.memberships[t][id][0] + 1 +
                            int(rand_index(rng, uint64_t(spec.communities - 1)))) %
                           spec.communities;
        st.memberships[t][id].push_back(second);
      }
    }
  }
  st.rebuild_community_tables();

  SyntheticHin out;
  out.schema = st.schema;
  out.communities = spec.communities;
  for (size_t r = 0; r < spec.relations.size(); ++r) {
    const auto& rel = spec.relations[r];
    const uint32_t src_type = st.type_index(rel.source_type);
    const auto participating = participation_flags(spec, r, st.counts[src_type]);
    const int per_source = std::max(1, int(std::lround(rel.edges_per_source * spec.density)));
    Rng rng = make_rng(derive_seed(spec.seed, 0x65646765u, r));
    for (uint32_t s = 0; s < st.counts[src_type]; ++s) {
      if (!participating[s]) continue;
      for (int k = 0; k < per_source; ++k) out.records.push_back(st.draw_edge(rel, s, rng));
    }
  }
  out.graph = build_graph(st.schema, st.type_names, st.counts, out.records);
  out.memberships = std::move(st.memberships);
  return out;
}

SyntheticHin grow_synthetic_hin(const SyntheticSpec& spec, const SyntheticHin& base,
                                const GrowthSpec& growth) {
  validate_spec(spec);
  GenState st;
  st.spec = &spec;
  st.schema = base.schema;
  for (const auto& [name, n] : spec.entity_counts) {
    st.type_names.push_back(name);
    st.counts.push_back(size_t(n));
  }
  st.memberships = base.memberships;

  SyntheticHin out;
  out.schema = base.schema;
  out.communities = base.communities;
  out.records = base.records;

  // Append new entities; they keep numbering past the base counts.
  Rng grng = make_rng(derive_seed(growth.seed, 0x67726f77u));
  std::vector<std::pair<uint32_t, uint32_t>> added;  // (type, id)
  for (const auto& [type, n] : growth.new_entities) {
    const uint32_t t = st.type_index(type);
    for (int i = 0; i < n; ++i) {
      const uint32_t id = uint32_t(st.counts[t]++);
      std::vector<int> memb = {int(rand_index(grng, uint64_t(spec.communities)))};
      if (spec.multi_interest_fraction > 0.0 && spec.communities > 1 &&
          is_source_type(spec, type) && rand_unit(grng) < spec.multi_interest_fraction)
        memb.push_back((memb[0] + 1 + int(rand_index(grng, uint64_t(spec.communities - 1)))) %
                       spec.communities);
      st.memberships[t].push_back(std::move(memb));
      added.emplace_back(t, id);
    }
  }
  st.rebuild_community_tables();

  // Relation choice for new edges follows the base volume per relation.
  std::vector<double> rel_cum;
  {
    std::vector<size_t> rel_count(spec.relations.size(), 0);
    for (const EdgeRecord& r : out.records) {
      const int64_t idx = st.schema.relation_type_index(r.relation);
      if (idx >= 0) ++rel_count[size_t(idx)];
    }
    double run = 0.0;
    for (size_t r = 0; r < spec.relations.size(); ++r) {
      run += double(rel_count[r]) + 1.0;
      rel_cum.push_back(run);
    }
  }

  // Every appended entity gets at least one incident edge so neighborhood
  // initialization has something to average.
  for (const auto& [t, id] : added) {
    bool drawn = false;
    for (const auto& rel : spec.relations) {
      if (st.type_index(rel.source_type) != t) continue;
      out.records.push_back(st.draw_edge(rel, id, grng));
      drawn = true;
      break;
    }
    if (drawn) continue;
    for (const auto& rel : spec.relations) {
      const uint32_t src_type = st.type_index(rel.source_type);
      if (st.type_index(rel.target_type) != t) continue;
      const uint32_t s = uint32_t(rand_index(grng, st.counts[src_type]));
      out.records.push_back({rel.source_type, external_id(rel.source_type, s), rel.name,
                             rel.target_type, external_id(rel.target_type, id)});
      drawn = true;
      break;
    }
    if (!drawn)
      throw std::invalid_argument("new entity type participates in no relation: " +
                                  st.type_names[t]);
  }

  const size_t extra = size_t(std::llround(growth.new_edge_fraction * double(base.records.size())));
  for (size_t i = 0; i < extra; ++i) {
    const double u = rand_unit(grng) * rel_cum.back();
    size_t r = size_t(std::upper_bound(rel_cum.begin(), rel_cum.end(), u) - rel_cum.begin());
    if (r >= spec.relations.size()) r = spec.relations.size() - 1;
    const auto& rel = spec.relations[r];
    const uint32_t src_type = st.type_index(rel.source_type);
    const uint32_t s = uint32_t(rand_index(grng, st.counts[src_type]));
    out.records.push_back(st.draw_edge(rel, s, grng));
  }

  out.graph = build_graph(out.schema, st.type_names, st.counts, out.records);
  out.memberships = std::move(st.memberships);
  return out;
}

void save_edge_records_tsv(const std::string& path, const std::vector<EdgeRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open edge file for writing: " + path);
  for (const EdgeRecord& r : records)
    out << r.source_type << '\t' << r.source_id << '\t' << r.relation << '\t' << r.target_type
        << '\t' << r.target_id << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

void save_schema_file(const std::string& path, const Schema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open schema file for writing: " + path);
  for (uint32_t t = 0; t < schema.num_entity_types(); ++t)
    out << "entity " << schema.entity_type(t).name << '\n';
  for (uint32_t r = 0; r < schema.num_relation_types(); ++r) {
    const RelationType& rel = schema.relation_type(r);
    out << "relation " << rel.name << ' ' << schema.entity_type(rel.source_type).name << ' '
        << schema.entity_type(rel.target_type).name << ' '
        << (rel.coverage == Coverage::High ? "high" : "low") << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace hinembed
