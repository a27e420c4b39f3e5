#include "hinembed/hin_graph.hpp"

#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace hinembed {

uint32_t Schema::add_entity_type(const std::string& name) {
  if (name.empty()) throw std::invalid_argument("entity type name must be non-empty");
  if (entity_index_.count(name))
    throw std::invalid_argument("duplicate entity type: " + name);
  entity_index_[name] = uint32_t(entity_types_.size());
  entity_types_.push_back({name});
  return uint32_t(entity_types_.size() - 1);
}

uint32_t Schema::add_relation_type(const std::string& name, const std::string& source,
                                   const std::string& target, Coverage coverage) {
  if (name.empty()) throw std::invalid_argument("relation name must be non-empty");
  if (relation_index_.count(name))
    throw std::invalid_argument("duplicate relation type: " + name);
  const int64_t s = entity_type_index(source);
  const int64_t t = entity_type_index(target);
  if (s < 0) throw std::invalid_argument("relation " + name + ": unknown entity type " + source);
  if (t < 0) throw std::invalid_argument("relation " + name + ": unknown entity type " + target);
  relation_index_[name] = uint32_t(relation_types_.size());
  relation_types_.push_back({name, uint32_t(s), uint32_t(t), coverage});
  return uint32_t(relation_types_.size() - 1);
}

int64_t Schema::entity_type_index(const std::string& name) const {
  auto it = entity_index_.find(name);
  return it == entity_index_.end() ? -1 : int64_t(it->second);
}

int64_t Schema::relation_type_index(const std::string& name) const {
  auto it = relation_index_.find(name);
  return it == relation_index_.end() ? -1 : int64_t(it->second);
}

bool Schema::operator==(const Schema& o) const {
  if (entity_types_.size() != o.entity_types_.size() ||
      relation_types_.size() != o.relation_types_.size())
    return false;
  for (size_t i = 0; i < entity_types_.size(); ++i)
    if (entity_types_[i].name != o.entity_types_[i].name) return false;
  for (size_t i = 0; i < relation_types_.size(); ++i) {
    const auto& a = relation_types_[i];
    const auto& b = o.relation_types_[i];
    if (a.name != b.name || a.source_type != b.source_type || a.target_type != b.target_type ||
        a.coverage != b.coverage)
      return false;
  }
  return true;
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

Schema parse_schema(const std::string& text) {
  Schema schema;
  std::istringstream is(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    const std::string where = "schema line " + std::to_string(lineno) + ": ";
    if (tok[0] == "entity") {
      if (tok.size() != 2) throw std::runtime_error(where + "expected: entity <name>");
      schema.add_entity_type(tok[1]);
    } else if (tok[0] == "relation") {
      if (tok.size() != 5)
        throw std::runtime_error(where +
                                 "expected: relation <name> <source_type> <target_type> <high|low>");
      Coverage cov;
      if (tok[4] == "high")
        cov = Coverage::High;
      else if (tok[4] == "low")
        cov = Coverage::Low;
      else
        throw std::runtime_error(where + "coverage must be 'high' or 'low', got '" + tok[4] + "'");
      schema.add_relation_type(tok[1], tok[2], tok[3], cov);
    } else {
      throw std::runtime_error(where + "unknown directive '" + tok[0] + "'");
    }
  }
  return schema;
}

Schema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schema file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_schema(ss.str());
}

uint32_t IdMap::intern(uint32_t entity_type, const std::string& external_id) {
  auto& t = per_type_.at(entity_type);
  auto it = t.index.find(external_id);
  if (it != t.index.end()) return it->second;
  const uint32_t id = uint32_t(t.ids.size());
  t.index.emplace(external_id, id);
  t.ids.push_back(external_id);
  return id;
}

int64_t IdMap::lookup(uint32_t entity_type, const std::string& external_id) const {
  const auto& t = per_type_.at(entity_type);
  auto it = t.index.find(external_id);
  return it == t.index.end() ? -1 : int64_t(it->second);
}

const std::string& IdMap::external_id(uint32_t entity_type, uint32_t local_id) const {
  return per_type_.at(entity_type).ids.at(local_id);
}

size_t HinGraph::total_entities() const {
  return std::accumulate(counts_.begin(), counts_.end(), size_t(0));
}

void HinGraph::save_id_map(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open id-map file for writing: " + path);
  for (uint32_t t = 0; t < schema_.num_entity_types(); ++t) {
    const auto& name = schema_.entity_type(t).name;
    for (uint32_t i = 0; i < counts_[t]; ++i)
      out << name << '\t' << ids_.external_id(t, i) << '\t' << i << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

IdMap load_id_map(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open id-map file: " + path);
  IdMap ids(schema.num_entity_types());
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    const std::string where = path + " line " + std::to_string(lineno) + ": ";
    if (f.size() != 3) throw std::runtime_error(where + "expected 3 tab-separated fields");
    const int64_t t = schema.entity_type_index(f[0]);
    if (t < 0) throw std::runtime_error(where + "unknown entity type '" + f[0] + "'");
    const uint32_t id = ids.intern(uint32_t(t), f[1]);
    if (id != uint32_t(std::stoul(f[2])))
      throw std::runtime_error(where + "non-contiguous local id for '" + f[1] + "'");
  }
  return ids;
}

GraphBuilder::GraphBuilder(Schema schema)
    : schema_(std::move(schema)), ids_(schema_.num_entity_types()) {}

void GraphBuilder::declare_entity(const std::string& entity_type,
                                  const std::string& external_id) {
  const int64_t t = schema_.entity_type_index(entity_type);
  if (t < 0) throw std::runtime_error("unknown entity type '" + entity_type + "'");
  ids_.intern(uint32_t(t), external_id);
}

void GraphBuilder::add_edge(const std::string& source_type, const std::string& source_id,
                            const std::string& relation, const std::string& target_type,
                            const std::string& target_id, const std::string& context) {
  const std::string where = context.empty() ? std::string() : context + ": ";
  const int64_t rel = schema_.relation_type_index(relation);
  if (rel < 0) throw std::runtime_error(where + "unknown relation '" + relation + "'");
  const RelationType& r = schema_.relation_type(uint32_t(rel));
  const int64_t st = schema_.entity_type_index(source_type);
  if (st < 0) throw std::runtime_error(where + "unknown entity type '" + source_type + "'");
  const int64_t tt = schema_.entity_type_index(target_type);
  if (tt < 0) throw std::runtime_error(where + "unknown entity type '" + target_type + "'");
  if (uint32_t(st) != r.source_type)
    throw std::runtime_error(where + "relation '" + relation + "' expects source type '" +
                             schema_.entity_type(r.source_type).name + "', got '" + source_type +
                             "'");
  if (uint32_t(tt) != r.target_type)
    throw std::runtime_error(where + "relation '" + relation + "' expects target type '" +
                             schema_.entity_type(r.target_type).name + "', got '" + target_type +
                             "'");
  Edge e;
  e.source = {uint32_t(st), ids_.intern(uint32_t(st), source_id)};
  e.relation = uint32_t(rel);
  e.target = {uint32_t(tt), ids_.intern(uint32_t(tt), target_id)};
  edges_.push_back(e);
}

HinGraph GraphBuilder::build() {
  HinGraph g;
  g.schema_ = std::move(schema_);
  g.ids_ = std::move(ids_);
  g.edges_ = std::move(edges_);
  g.counts_.resize(g.schema_.num_entity_types());
  g.degrees_.resize(g.schema_.num_entity_types());
  for (uint32_t t = 0; t < g.schema_.num_entity_types(); ++t) {
    g.counts_[t] = g.ids_.count(t);
    g.degrees_[t].assign(g.counts_[t], 0);
  }
  for (const Edge& e : g.edges_) {
    ++g.degrees_[e.source.entity_type][e.source.local_id];
    ++g.degrees_[e.target.entity_type][e.target.local_id];
  }
  return g;
}

HinGraph load_edges(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge file: " + path);
  GraphBuilder builder(schema);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    const std::string where = "line " + std::to_string(lineno);
    if (f.size() != 5)
      throw std::runtime_error(where + ": expected 5 tab-separated fields, got " +
                               std::to_string(f.size()));
    builder.add_edge(f[0], f[1], f[2], f[3], f[4], where);
  }
  return builder.build();
}

}  // namespace hinembed
