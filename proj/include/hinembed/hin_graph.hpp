#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace hinembed {

enum class Coverage { High, Low };

struct EntityType {
  std::string name;
};

struct RelationType {
  std::string name;
  uint32_t source_type = 0;  // index into Schema::entity_types
  uint32_t target_type = 0;
  Coverage coverage = Coverage::High;
};

// Typed node/edge vocabulary. Entity and relation names are unique.
class Schema {
 public:
  uint32_t add_entity_type(const std::string& name);
  uint32_t add_relation_type(const std::string& name, const std::string& source,
                             const std::string& target, Coverage coverage);

  size_t num_entity_types() const { return entity_types_.size(); }
  size_t num_relation_types() const { return relation_types_.size(); }

  const EntityType& entity_type(uint32_t i) const { return entity_types_.at(i); }
  const RelationType& relation_type(uint32_t i) const { return relation_types_.at(i); }

  // -1 when the name is unknown.
  int64_t entity_type_index(const std::string& name) const;
  int64_t relation_type_index(const std::string& name) const;

  bool operator==(const Schema& o) const;

 private:
  std::vector<EntityType> entity_types_;
  std::vector<RelationType> relation_types_;
  std::unordered_map<std::string, uint32_t> entity_index_;
  std::unordered_map<std::string, uint32_t> relation_index_;
};

// Parses the line-oriented schema format:
//   entity <name>
//   relation <name> <source_type> <target_type> <high|low>
Schema parse_schema(const std::string& text);
Schema load_schema(const std::string& path);

struct EntityRef {
  uint32_t entity_type = 0;
  uint32_t local_id = 0;

  bool operator==(const EntityRef& o) const {
    return entity_type == o.entity_type && local_id == o.local_id;
  }
};

struct Edge {
  EntityRef source;
  uint32_t relation = 0;
  EntityRef target;

  bool operator==(const Edge& o) const {
    return source == o.source && relation == o.relation && target == o.target;
  }
};

// external id <-> dense per-type local id, assigned in first-seen order.
class IdMap {
 public:
  explicit IdMap(size_t num_entity_types = 0) : per_type_(num_entity_types) {}

  uint32_t intern(uint32_t entity_type, const std::string& external_id);
  // -1 when unseen.
  int64_t lookup(uint32_t entity_type, const std::string& external_id) const;
  const std::string& external_id(uint32_t entity_type, uint32_t local_id) const;
  size_t count(uint32_t entity_type) const { return per_type_.at(entity_type).ids.size(); }
  size_t num_types() const { return per_type_.size(); }

 private:
  struct TypeIds {
    std::vector<std::string> ids;
    std::unordered_map<std::string, uint32_t> index;
  };
  std::vector<TypeIds> per_type_;
};

// Typed multigraph over dense per-type ids. Immutable once built.
class HinGraph {
 public:
  const Schema& schema() const { return schema_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const IdMap& id_map() const { return ids_; }

  size_t entity_count(uint32_t entity_type) const { return counts_.at(entity_type); }
  size_t total_entities() const;
  uint64_t degree(const EntityRef& e) const { return degrees_.at(e.entity_type).at(e.local_id); }
  const std::vector<uint64_t>& degrees(uint32_t entity_type) const {
    return degrees_.at(entity_type);
  }

  void save_id_map(const std::string& path) const;

 private:
  friend class GraphBuilder;
  Schema schema_;
  IdMap ids_;
  std::vector<Edge> edges_;
  std::vector<size_t> counts_;
  std::vector<std::vector<uint64_t>> degrees_;
};

// Accumulates edges by external id, then freezes into a HinGraph.
class GraphBuilder {
 public:
  explicit GraphBuilder(Schema schema);

  // Interns an entity ahead of any edge so it keeps a chosen id order (and
  // survives with degree 0 if no edge ever references it).
  void declare_entity(const std::string& entity_type, const std::string& external_id);

  // Throws on schema violations; `context` (e.g. "line 12") prefixes the message.
  void add_edge(const std::string& source_type, const std::string& source_id,
                const std::string& relation, const std::string& target_type,
                const std::string& target_id, const std::string& context = {});

  HinGraph build();

 private:
  Schema schema_;
  IdMap ids_;
  std::vector<Edge> edges_;
};

// Loads the UTF-8 TSV edge format:
//   source_type<TAB>source_id<TAB>relation<TAB>target_type<TAB>target_id
// Lines beginning '#' and blank lines are ignored. Duplicate lines are
// retained as multi-edges. Errors carry the 1-based line number.
HinGraph load_edges(const std::string& path, const Schema& schema);

// Sidecar id-map TSV: entity_type<TAB>external_id<TAB>local_id.
IdMap load_id_map(const std::string& path, const Schema& schema);

}  // namespace hinembed
