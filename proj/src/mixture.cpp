#include "hinembed/mixture.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace hinembed {

namespace {

std::vector<MixtureComponent> top_m_normalized(const std::map<uint32_t, uint64_t>& counts,
                                               const ClusterModel& model, int m) {
  // (count desc, cluster asc); std::map iteration already yields cluster asc,
  // so a stable sort by count keeps the tie rule.
  std::vector<std::pair<uint32_t, uint64_t>> ordered(counts.begin(), counts.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (m >= 0 && ordered.size() > size_t(m)) ordered.resize(size_t(m));

  uint64_t kept = 0;
  for (const auto& [c, n] : ordered) kept += n;
  std::vector<MixtureComponent> out;
  out.reserve(ordered.size());
  for (const auto& [c, n] : ordered) {
    MixtureComponent comp;
    comp.cluster = int64_t(c);
    comp.weight = double(n) / double(kept);
    const auto row = model.centroids.row(c);
    comp.vec.assign(row.begin(), row.end());
    out.push_back(std::move(comp));
  }
  return out;
}

}  // namespace

MixtureRepresentation engagement_distribution(const EntityRef& source, const HinGraph& graph,
                                              const ClusterModel& model, uint32_t target_type,
                                              int m) {
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  if (model.target_assignment.size() != graph.entity_count(target_type))
    throw std::invalid_argument("cluster model does not cover the target entity type");
  std::map<uint32_t, uint64_t> counts;
  for (const Edge& e : graph.edges()) {
    if (!(e.source == source) || e.target.entity_type != target_type) continue;
    ++counts[model.target_assignment[e.target.local_id]];
  }
  if (counts.empty())
    throw NoEngagementsError("entity has no engagements with clustered targets");
  MixtureRepresentation rep;
  rep.components = top_m_normalized(counts, model, m);
  return rep;
}

std::vector<MixtureRepresentation> engagement_distributions(const HinGraph& graph,
                                                            const ClusterModel& model,
                                                            uint32_t source_type,
                                                            uint32_t target_type, int m,
                                                            const EmbeddingStore* fallback) {
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  if (model.target_assignment.size() != graph.entity_count(target_type))
    throw std::invalid_argument("cluster model does not cover the target entity type");
  const size_t n = graph.entity_count(source_type);
  std::vector<std::map<uint32_t, uint64_t>> counts(n);
  for (const Edge& e : graph.edges()) {
    if (e.source.entity_type != source_type || e.target.entity_type != target_type) continue;
    ++counts[e.source.local_id][model.target_assignment[e.target.local_id]];
  }
  std::vector<MixtureRepresentation> out(n);
  for (size_t i = 0; i < n; ++i) {
    if (!counts[i].empty()) {
      out[i].components = top_m_normalized(counts[i], model, m);
      continue;
    }
    if (fallback != nullptr) {
      MixtureComponent self;
      self.cluster = -1;
      self.weight = 1.0;
      const auto row = fallback->entity_row(source_type, uint32_t(i));
      self.vec.assign(row.begin(), row.end());
      out[i].components.push_back(std::move(self));
    }
  }
  return out;
}

OovEmbedding embed_oov_target(std::span<const EntityRef> known_neighbors,
                              const EmbeddingStore& store, const ClusterModel& model) {
  if (known_neighbors.empty())
    throw std::invalid_argument("OOV embedding needs at least one known neighbor");
  std::vector<double> mean(store.dim(), 0.0);
  for (const EntityRef& nb : known_neighbors) {
    const auto row = store.entity_row(nb.entity_type, nb.local_id);
    for (size_t i = 0; i < mean.size(); ++i) mean[i] += double(row[i]);
  }
  std::vector<float> meanf(mean.size());
  for (size_t i = 0; i < mean.size(); ++i)
    meanf[i] = float(mean[i] / double(known_neighbors.size()));

  OovEmbedding out;
  out.cluster = model.nearest(meanf);
  const auto c = model.centroids.row(out.cluster);
  out.centroid.assign(c.begin(), c.end());
  return out;
}

void save_mixtures_tsv(const std::string& path, const std::string& entity_type,
                       const std::vector<std::string>& external_ids,
                       const std::vector<MixtureRepresentation>& mixtures) {
  if (external_ids.size() != mixtures.size())
    throw std::invalid_argument("external_ids and mixtures must align");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open mixture file for writing: " + path);
  char buf[64];
  for (size_t i = 0; i < mixtures.size(); ++i) {
    out << entity_type << '\t' << external_ids[i] << '\t';
    const auto& comps = mixtures[i].components;
    for (size_t c = 0; c < comps.size(); ++c) {
      std::snprintf(buf, sizeof(buf), "%lld:%.9g", (long long)comps[c].cluster,
                    comps[c].weight);
      out << (c == 0 ? "" : ",") << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<MixtureRecord> load_mixtures_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mixture file: " + path);
  std::vector<MixtureRecord> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path + " line " + std::to_string(lineno) + ": ";
    std::istringstream is(line);
    MixtureRecord rec;
    std::string comps;
    if (!std::getline(is, rec.entity_type, '\t') || !std::getline(is, rec.external_id, '\t') ||
        !std::getline(is, comps))
      throw std::runtime_error(where + "expected 3 tab-separated fields");
    std::istringstream cs(comps);
    std::string item;
    while (std::getline(cs, item, ',')) {
      const size_t colon = item.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error(where + "bad component '" + item + "'");
      rec.components.emplace_back(std::stoll(item.substr(0, colon)),
                                  std::stod(item.substr(colon + 1)));
    }
    if (rec.components.empty()) throw std::runtime_error(where + "empty mixture");
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace hinembed
