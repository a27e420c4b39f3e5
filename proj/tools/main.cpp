// hinembed: heterogeneous-network embedding toolkit.
//
// Subcommands: ingest, coembed, train, cluster, mixture, index, query, pq,
// retrain, eval, pipeline. Every run logs its resolved configuration to
// stderr; results and artifacts go to the paths given by flags.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <iostream>
#include <sstream>

#include "hinembed/ann_index.hpp"
#include "hinembed/checkpoint.hpp"
#include "hinembed/embedding_store.hpp"
#include "hinembed/eval.hpp"
#include "hinembed/hin_graph.hpp"
#include "hinembed/kmeans.hpp"
#include "hinembed/mixture.hpp"
#include "hinembed/partition.hpp"
#include "hinembed/product_quantizer.hpp"
#include "hinembed/trainer.hpp"
#include "hinembed/versioning.hpp"

namespace fs = std::filesystem;
using namespace hinembed;

namespace {

struct ConfigLog {
  std::vector<std::pair<std::string, std::string>> entries;
  void add(const std::string& k, const std::string& v) { entries.emplace_back(k, v); }
  void add(const std::string& k, double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%g", v);
    entries.emplace_back(k, buf);
  }
  void add(const std::string& k, int64_t v) { entries.emplace_back(k, std::to_string(v)); }
  void print(const std::string& command) const {
    std::cerr << "# command: " << command << "\n";
    for (const auto& [k, v] : entries) std::cerr << "# " << k << " = " << v << "\n";
  }
};

std::string fmt_score(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

uint32_t require_entity_type(const Schema& schema, const std::string& name) {
  const int64_t t = schema.entity_type_index(name);
  if (t < 0) throw std::runtime_error("unknown entity type '" + name + "'");
  return uint32_t(t);
}

uint32_t require_relation(const Schema& schema, const std::string& name) {
  const int64_t r = schema.relation_type_index(name);
  if (r < 0) throw std::runtime_error("unknown relation '" + name + "'");
  return uint32_t(r);
}

std::vector<std::string> external_ids_of(const HinGraph& graph, uint32_t type) {
  std::vector<std::string> ids;
  ids.reserve(graph.entity_count(type));
  for (uint32_t i = 0; i < graph.entity_count(type); ++i)
    ids.push_back(graph.id_map().external_id(type, i));
  return ids;
}

void ensure_parent_dir(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

// ---------------------------------------------------------------------------
// train / retrain option bundles
// ---------------------------------------------------------------------------

struct TrainFlags {
  std::string schema_path;
  std::string edges_path;
  uint32_t dim = 64;
  int epochs = 10;
  uint32_t partitions = 1;
  int negatives = 10;
  double neg_mix = 0.5;
  double lr = 0.1;
  int batch_size = 128;
  uint64_t seed = 0;
  int workers = 1;
  std::string corrupt_side = "both";
  double init_scale = 0.1;

  void attach(CLI::App* app, bool require_io = true) {
    auto* s = app->add_option("--schema", schema_path, "schema file");
    auto* e = app->add_option("--edges", edges_path, "edge TSV file");
    if (require_io) {
      s->required();
      e->required();
    }
    app->add_option("--dim", dim, "embedding dimension");
    app->add_option("--epochs", epochs, "training epochs");
    app->add_option("--partitions", partitions, "entity partitions P");
    app->add_option("--negatives", negatives, "negatives per positive");
    app->add_option("--neg-mix", neg_mix, "fraction of degree-proportional negatives");
    app->add_option("--lr", lr, "Adagrad learning rate");
    app->add_option("--batch-size", batch_size, "positives per batch");
    app->add_option("--seed", seed, "run seed");
    app->add_option("--workers", workers, "concurrent bucket workers");
    app->add_option("--corrupt-side", corrupt_side, "both|source|target");
    app->add_option("--init-scale", init_scale, "uniform init half-range");
  }

  TrainConfig to_config() const {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.num_negatives = negatives;
    cfg.negative_mix = neg_mix;
    cfg.learning_rate = lr;
    cfg.batch_size = batch_size;
    cfg.seed = seed;
    cfg.partitions = partitions;
    cfg.workers = workers;
    if (corrupt_side == "both")
      cfg.corrupt_side = CorruptSide::Both;
    else if (corrupt_side == "source")
      cfg.corrupt_side = CorruptSide::SourceOnly;
    else if (corrupt_side == "target")
      cfg.corrupt_side = CorruptSide::TargetOnly;
    else
      throw std::runtime_error("corrupt-side must be both, source or target");
    return cfg;
  }

  void log(ConfigLog& log) const {
    log.add("schema", schema_path);
    log.add("edges", edges_path);
    log.add("dim", int64_t(dim));
    log.add("epochs", int64_t(epochs));
    log.add("partitions", int64_t(partitions));
    log.add("negatives", int64_t(negatives));
    log.add("neg_mix", neg_mix);
    log.add("lr", lr);
    log.add("batch_size", int64_t(batch_size));
    log.add("seed", int64_t(seed));
    log.add("workers", int64_t(workers));
    log.add("corrupt_side", corrupt_side);
  }
};

// ---------------------------------------------------------------------------
// subcommand bodies
// ---------------------------------------------------------------------------

int cmd_ingest(const std::string& schema_path, const std::string& edges_path,
               const std::string& idmap_out) {
  const Schema schema = load_schema(schema_path);
  const HinGraph graph = load_edges(edges_path, schema);
  if (!idmap_out.empty()) {
    ensure_parent_dir(idmap_out);
    graph.save_id_map(idmap_out);
  }
  std::cout << "entity_type\tcount\n";
  for (uint32_t t = 0; t < schema.num_entity_types(); ++t)
    std::cout << schema.entity_type(t).name << '\t' << graph.entity_count(t) << '\n';
  std::cout << "edges\t" << graph.edges().size() << '\n';
  return 0;
}

int cmd_coembed(const std::string& schema_path, const std::string& edges_path,
                const std::string& out_dir) {
  const Schema schema = load_schema(schema_path);
  const HinGraph full = load_edges(edges_path, schema);
  std::vector<std::string> warnings;
  const auto graphs = build_coembedding_graphs(full, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  fs::create_directories(out_dir);
  for (const auto& cg : graphs) {
    const Schema& sub = cg.graph.schema();
    const std::string stem = (fs::path(out_dir) / cg.high_relation).string();
    std::ofstream schema_out(stem + ".schema", std::ios::binary);
    for (uint32_t t = 0; t < sub.num_entity_types(); ++t)
      schema_out << "entity " << sub.entity_type(t).name << '\n';
    for (uint32_t r = 0; r < sub.num_relation_types(); ++r) {
      const RelationType& rel = sub.relation_type(r);
      schema_out << "relation " << rel.name << ' ' << sub.entity_type(rel.source_type).name
                 << ' ' << sub.entity_type(rel.target_type).name << ' '
                 << (rel.coverage == Coverage::High ? "high" : "low") << '\n';
    }
    std::ofstream edges_out(stem + ".edges.tsv", std::ios::binary);
    const IdMap& ids = cg.graph.id_map();
    for (const Edge& e : cg.graph.edges())
      edges_out << sub.entity_type(e.source.entity_type).name << '\t'
                << ids.external_id(e.source.entity_type, e.source.local_id) << '\t'
                << sub.relation_type(e.relation).name << '\t'
                << sub.entity_type(e.target.entity_type).name << '\t'
                << ids.external_id(e.target.entity_type, e.target.local_id) << '\n';
    std::cout << cg.high_relation << '\t' << cg.graph.edges().size() << '\n';
  }
  return 0;
}

int cmd_train(const TrainFlags& flags, const std::string& out_ckpt,
              const std::string& report_out) {
  const Schema schema = load_schema(flags.schema_path);
  const HinGraph graph = load_edges(flags.edges_path, schema);
  const TrainConfig cfg = flags.to_config();
  EmbeddingStore store =
      EmbeddingStore::init(graph, flags.dim, cfg.seed, float(flags.init_scale));
  const Partitioning part = partition(graph, cfg.partitions, cfg.seed);
  const TrainReport report = train(graph, part, store, cfg);

  ensure_parent_dir(out_ckpt);
  store.save_checkpoint(out_ckpt);
  graph.save_id_map(out_ckpt + ".idmap.tsv");
  if (!report_out.empty()) {
    ensure_parent_dir(report_out);
    report.save_tsv(report_out);
  }
  if (!report.rows.empty())
    std::cerr << "# final epoch mean loss = " << fmt_score(report.epoch_mean_loss(cfg.epochs - 1))
              << "\n";
  return 0;
}

int cmd_cluster(const std::string& vectors_path, const std::string& table, uint32_t k,
                uint64_t seed, int iters, int batch, const std::string& out) {
  const Checkpoint ckpt = Checkpoint::load(vectors_path);
  const Matrix& vectors = ckpt.table("ent:" + table);
  KMeansConfig cfg;
  cfg.k = k;
  cfg.seed = seed;
  cfg.max_iters = iters;
  cfg.batch_size = batch;
  const ClusterModel model = kmeans(vectors, cfg);

  Checkpoint out_ckpt(ckpt.dim());
  out_ckpt.add_table("centroids", model.centroids);
  ensure_parent_dir(out);
  out_ckpt.save(out);
  std::cerr << "# inertia = " << fmt_score(model.inertia) << "\n";
  return 0;
}

ClusterModel load_cluster_model(const std::string& centroids_path, const Matrix& target_table) {
  const Checkpoint ckpt = Checkpoint::load(centroids_path);
  ClusterModel model;
  model.centroids = ckpt.table("centroids");
  if (model.centroids.cols() != target_table.cols())
    throw std::runtime_error("centroid dim does not match the target table");
  model.target_assignment = model.assign(target_table);
  return model;
}

int cmd_mixture(const std::string& schema_path, const std::string& edges_path,
                const std::string& ckpt_path, const std::string& centroids_path,
                const std::string& source_type, const std::string& target_type, int m,
                const std::string& out) {
  const Schema schema = load_schema(schema_path);
  const HinGraph graph = load_edges(edges_path, schema);
  const EmbeddingStore store = EmbeddingStore::load_checkpoint(ckpt_path);
  store.validate_against(graph);
  const uint32_t st = require_entity_type(schema, source_type);
  const uint32_t tt = require_entity_type(schema, target_type);
  const ClusterModel model = load_cluster_model(centroids_path, store.entity_table(tt));

  const auto mixtures = engagement_distributions(graph, model, st, tt, m, &store);
  ensure_parent_dir(out);
  save_mixtures_tsv(out, source_type, external_ids_of(graph, st), mixtures);
  return 0;
}

int cmd_index_build(const std::string& vectors_path, const std::string& table,
                    const std::string& idmap_path, const std::string& mode, uint32_t nlist,
                    uint32_t nprobe, uint64_t seed, const std::string& out) {
  const Checkpoint ckpt = Checkpoint::load(vectors_path);
  const Matrix& vectors = ckpt.table("ent:" + table);

  std::vector<std::string> ids;
  if (!idmap_path.empty()) {
    std::ifstream in(idmap_path);
    if (!in) throw std::runtime_error("cannot open id-map file: " + idmap_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream is(line);
      std::string type, ext, local;
      if (!std::getline(is, type, '\t') || !std::getline(is, ext, '\t') ||
          !std::getline(is, local))
        throw std::runtime_error("malformed id-map line: " + line);
      if (type == table) ids.push_back(ext);
    }
    if (ids.size() != vectors.rows())
      throw std::runtime_error("id map covers " + std::to_string(ids.size()) +
                               " entities, table has " + std::to_string(vectors.rows()));
  }

  AnnParams params;
  params.mode = mode == "exact" ? AnnParams::Mode::Exact : AnnParams::Mode::IVF;
  params.nlist = nlist;
  params.nprobe = nprobe;
  params.seed = seed;
  const AnnIndex index = AnnIndex::build(vectors, params, table, std::move(ids));
  ensure_parent_dir(out);
  index.save(out);
  std::cerr << "# indexed " << index.size() << " vectors of dim " << index.dim() << "\n";
  return 0;
}

void print_candidates(std::ostream& os, const AnnIndex& index, const CandidateList& list) {
  os << "rank\tid\tscore\tcomponent\n";
  for (size_t i = 0; i < list.items.size(); ++i)
    os << (i + 1) << '\t' << index.external_id(list.items[i].id) << '\t'
       << fmt_score(list.items[i].score) << '\t' << list.items[i].component << '\n';
}

int cmd_index_query(const std::string& idx_path, const std::string& query_id, size_t k,
                    const std::string& mixture_path, const std::string& centroids_path,
                    const std::string& vectors_path, const std::string& table,
                    const std::string& apply_relation, const std::string& out) {
  const AnnIndex index = AnnIndex::load(idx_path);

  // The query entity's own vector: from --vectors/--table when given,
  // otherwise from the index itself.
  std::optional<Checkpoint> vectors;
  if (!vectors_path.empty()) vectors.emplace(Checkpoint::load(vectors_path));

  auto own_vector = [&]() -> std::vector<float> {
    if (vectors && !table.empty()) {
      const Matrix& tab = vectors->table("ent:" + table);
      // resolve the row through the sidecar id map next to the checkpoint
      const std::string idmap_path = vectors_path + ".idmap.tsv";
      std::ifstream in(idmap_path);
      if (!in)
        throw std::runtime_error("cannot open id-map file: " + idmap_path);
      std::string line;
      int64_t row = -1;
      while (std::getline(in, line)) {
        std::istringstream is(line);
        std::string type, ext, local;
        std::getline(is, type, '\t');
        std::getline(is, ext, '\t');
        std::getline(is, local);
        if (type == table && ext == query_id) {
          row = std::stoll(local);
          break;
        }
      }
      if (row < 0)
        throw std::runtime_error("query id '" + query_id + "' not found in table '" + table +
                                 "'");
      const auto r = tab.row(size_t(row));
      return {r.begin(), r.end()};
    }
    const int64_t row = index.row_of(query_id);
    if (row < 0)
      throw std::runtime_error("query id '" + query_id +
                               "' is not indexed; pass --vectors/--table to look it up");
    const auto r = index.vector(uint32_t(row));
    return {r.begin(), r.end()};
  };

  CandidateList result;
  if (!mixture_path.empty()) {
    const auto records = load_mixtures_tsv(mixture_path);
    const MixtureRecord* rec = nullptr;
    for (const auto& r : records)
      if (r.external_id == query_id) {
        rec = &r;
        break;
      }
    if (rec == nullptr)
      throw std::runtime_error("query id '" + query_id + "' not found in mixture file");

    std::optional<Checkpoint> centroids;
    if (!centroids_path.empty()) centroids.emplace(Checkpoint::load(centroids_path));
    MixtureRepresentation mix;
    for (const auto& [cluster, weight] : rec->components) {
      MixtureComponent comp;
      comp.cluster = cluster;
      comp.weight = weight;
      if (cluster >= 0) {
        if (!centroids)
          throw std::runtime_error("mixture has cluster components; pass --centroids");
        const Matrix& cents = centroids->table("centroids");
        const auto row = cents.row(size_t(cluster));
        comp.vec.assign(row.begin(), row.end());
      } else {
        comp.vec = own_vector();
      }
      mix.components.push_back(std::move(comp));
    }
    result = multi_query(index, mix, k);
  } else {
    std::vector<float> q = own_vector();
    if (!apply_relation.empty()) {
      if (!vectors) throw std::runtime_error("--apply-relation needs --vectors");
      const Matrix& rel = vectors->table("rel:" + apply_relation);
      for (size_t c = 0; c < q.size(); ++c) q[c] += rel.row(0)[c];
    }
    result = index.query_topk(std::span<const float>(q.data(), q.size()), k);
  }

  if (out.empty()) {
    print_candidates(std::cout, index, result);
  } else {
    ensure_parent_dir(out);
    std::ofstream os(out, std::ios::binary);
    print_candidates(os, index, result);
  }
  return 0;
}

int cmd_pq_train(const std::string& vectors_path, const std::string& table, uint32_t m,
                 uint64_t seed, int iters, const std::string& out) {
  const Checkpoint ckpt = Checkpoint::load(vectors_path);
  const Matrix& vectors = ckpt.table("ent:" + table);
  PQTrainConfig cfg;
  cfg.m = m;
  cfg.seed = seed;
  cfg.kmeans_iters = iters;
  const PQCodebook cb = train_codebook(vectors, cfg);
  ensure_parent_dir(out);
  cb.save(out);
  return 0;
}

int cmd_pq_encode(const std::string& vectors_path, const std::string& table,
                  const std::string& codebook_path, const std::string& out) {
  const Checkpoint ckpt = Checkpoint::load(vectors_path);
  const PQCodebook cb = PQCodebook::load(codebook_path);
  const PQCodes codes = encode(ckpt.table("ent:" + table), cb);
  ensure_parent_dir(out);
  codes.save(out);
  return 0;
}

int cmd_pq_decode(const std::string& codes_path, const std::string& codebook_path,
                  const std::string& table_name, const std::string& out) {
  const PQCodebook cb = PQCodebook::load(codebook_path);
  const PQCodes codes = PQCodes::load(codes_path);
  const Matrix decoded = decode(codes, cb);
  Checkpoint out_ckpt(uint32_t(decoded.cols()));
  out_ckpt.add_table(table_name, decoded);
  ensure_parent_dir(out);
  out_ckpt.save(out);
  return 0;
}

int cmd_pq_report(const std::string& vectors_path, const std::string& table,
                  const std::string& codebook_path) {
  const Checkpoint ckpt = Checkpoint::load(vectors_path);
  const PQCodebook cb = PQCodebook::load(codebook_path);
  const CompressionReport rep = compression_report(ckpt.table("ent:" + table), cb);
  std::cout << "factor\tmse\tmax_row_l2\tcodebook_bytes\n";
  std::cout << fmt_score(rep.factor) << '\t' << fmt_score(rep.mse) << '\t'
            << fmt_score(rep.max_row_l2) << '\t' << rep.codebook_bytes << '\n';
  return 0;
}

int cmd_retrain(const TrainFlags& flags, const std::string& prev_ckpt,
                const std::string& prev_idmap, const std::string& mode, double alpha,
                bool directional, const std::string& new_node_init, const std::string& out_ckpt,
                const std::string& drift_out) {
  const Schema schema = load_schema(flags.schema_path);
  const HinGraph graph = load_edges(flags.edges_path, schema);
  const EmbeddingStore prev = EmbeddingStore::load_checkpoint(prev_ckpt);
  const IdMap prev_ids = load_id_map(prev_idmap, schema);
  const EntityMatch match = match_entities(graph, prev, prev_ids);

  RetrainPolicy policy;
  if (mode == "warm")
    policy.mode = RetrainMode::WarmStart;
  else if (mode == "anchor")
    policy.mode = RetrainMode::L2Anchored;
  else if (mode == "cold")
    policy.mode = RetrainMode::ColdStart;
  else
    throw std::runtime_error("mode must be warm, anchor or cold");
  policy.alpha = alpha;
  policy.warm.seed = flags.seed;
  policy.warm.random_scale = float(flags.init_scale);
  policy.warm.directional_relation = directional;
  if (new_node_init == "random")
    policy.warm.new_node_init = WarmStartPolicy::NewNodeInit::Random;
  else if (new_node_init == "neighborhood")
    policy.warm.new_node_init = WarmStartPolicy::NewNodeInit::NeighborhoodFormula;
  else
    throw std::runtime_error("new-node-init must be random or neighborhood");

  const TrainConfig cfg = flags.to_config();
  const Partitioning part = partition(graph, cfg.partitions, cfg.seed);
  RetrainResult res = retrain(graph, part, prev, match, policy, cfg);

  ensure_parent_dir(out_ckpt);
  res.store.save_checkpoint(out_ckpt);
  graph.save_id_map(out_ckpt + ".idmap.tsv");
  if (!drift_out.empty()) {
    ensure_parent_dir(drift_out);
    res.drift.save_tsv(drift_out);
  }
  std::cerr << "# shared entities = " << res.drift.shared_entities
            << ", mean drift = " << fmt_score(res.drift.mean_l2)
            << ", max drift = " << fmt_score(res.drift.max_l2) << "\n";
  return 0;
}

int cmd_eval_split(const std::string& schema_path, const std::string& edges_path,
                   const std::string& relation, double fraction, uint64_t seed,
                   const std::string& out_train, const std::string& out_heldout) {
  const Schema schema = load_schema(schema_path);
  const HinGraph full = load_edges(edges_path, schema);
  const uint32_t rel = require_relation(schema, relation);
  const EvalSplit split = make_eval_split(full, rel, fraction, seed);

  ensure_parent_dir(out_train);
  std::ofstream train_out(out_train, std::ios::binary);
  const IdMap& ids = split.train_graph.id_map();
  const Schema& s = split.train_graph.schema();
  for (const Edge& e : split.train_graph.edges())
    train_out << s.entity_type(e.source.entity_type).name << '\t'
              << ids.external_id(e.source.entity_type, e.source.local_id) << '\t'
              << s.relation_type(e.relation).name << '\t'
              << s.entity_type(e.target.entity_type).name << '\t'
              << ids.external_id(e.target.entity_type, e.target.local_id) << '\n';

  const RelationType& r = s.relation_type(rel);
  ensure_parent_dir(out_heldout);
  std::ofstream held_out(out_heldout, std::ios::binary);
  for (const auto& [src, targets] : split.heldout)
    for (uint32_t t : targets)
      held_out << s.entity_type(r.source_type).name << '\t' << ids.external_id(r.source_type, src)
               << '\t' << r.name << '\t' << s.entity_type(r.target_type).name << '\t'
               << ids.external_id(r.target_type, t) << '\n';
  std::cerr << "# train edges = " << split.train_graph.edges().size()
            << ", heldout queries = " << split.heldout.size() << "\n";
  return 0;
}

int cmd_eval_linkpred(const std::string& schema_path, const std::string& train_edges,
                      const std::string& heldout_edges, const std::string& ckpt_path,
                      const std::string& ks_arg, bool filter_train) {
  const Schema schema = load_schema(schema_path);
  const HinGraph train_graph = load_edges(train_edges, schema);
  const HinGraph heldout_graph = load_edges(heldout_edges, schema);
  const EmbeddingStore store = EmbeddingStore::load_checkpoint(ckpt_path);
  store.validate_against(train_graph);
  if (heldout_graph.edges().empty()) throw std::runtime_error("held-out edge file is empty");
  const uint32_t rel = heldout_graph.edges()[0].relation;
  const RelationType& r = schema.relation_type(rel);

  EvalSplit split;
  split.relation = rel;
  split.train_graph = train_graph;
  split.candidate_count = train_graph.entity_count(r.target_type);
  std::map<uint32_t, std::set<uint32_t>> heldout;
  size_t dropped = 0;
  const IdMap& hids = heldout_graph.id_map();
  for (const Edge& e : heldout_graph.edges()) {
    if (e.relation != rel) throw std::runtime_error("held-out file mixes relations");
    const int64_t s =
        train_graph.id_map().lookup(r.source_type, hids.external_id(r.source_type, e.source.local_id));
    const int64_t t =
        train_graph.id_map().lookup(r.target_type, hids.external_id(r.target_type, e.target.local_id));
    if (s < 0 || t < 0) {
      ++dropped;
      continue;
    }
    heldout[uint32_t(s)].insert(uint32_t(t));
  }
  split.dropped_heldout = dropped;
  for (const auto& [s, ts] : heldout)
    split.heldout.emplace_back(s, std::vector<uint32_t>(ts.begin(), ts.end()));

  std::vector<size_t> ks;
  std::istringstream is(ks_arg);
  std::string tok;
  while (std::getline(is, tok, ',')) ks.push_back(size_t(std::stoul(tok)));
  const LinkPredMetrics metrics = link_prediction_eval(split, store, ks, filter_train);

  std::cout << "metric\tvalue\n";
  for (const auto& [k, v] : metrics.recall)
    std::cout << "recall@" << k << '\t' << fmt_score(v) << '\n';
  std::cout << "mrr\t" << fmt_score(metrics.mrr) << '\n';
  std::cout << "queries\t" << metrics.queries << '\n';
  if (dropped > 0) std::cerr << "# dropped held-out edges = " << dropped << "\n";
  return 0;
}

std::vector<double> load_number_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<double> out;
  double v;
  while (in >> v) out.push_back(v);
  return out;
}

int cmd_eval_rce(const std::string& labels_path, const std::string& preds_path) {
  const std::vector<double> raw_labels = load_number_file(labels_path);
  const std::vector<double> preds = load_number_file(preds_path);
  std::vector<int> labels;
  labels.reserve(raw_labels.size());
  for (double v : raw_labels) labels.push_back(int(v));
  size_t clipped = 0;
  const double value = rce(make_rce_input(labels, preds), &clipped);
  std::cout << "rce\t" << fmt_score(value) << '\n';
  if (clipped > 0) std::cerr << "# clipped predictions = " << clipped << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

// key=value configuration file; '#' starts a comment. Keys are the pipeline's
// long option names. Values only apply where the flag was not given.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t");
    line = line.substr(first, last - first + 1);
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + " line " + std::to_string(lineno) +
                               ": expected key=value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t");
      return s.substr(a, b - a + 1);
    };
    entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return entries;
}

struct PipelineFlags {
  TrainFlags train;
  std::string out_dir = "out";
  std::string edges_v2;
  std::string eval_relation;
  double holdout = 0.2;
  uint32_t clusters = 16;
  int mixture_m = 3;
  std::string source_type = "user";
  std::string target_type;
  std::string index_table;
  size_t k = 10;
  uint32_t pq_m = 4;
  int retrain_epochs = 5;
  double alpha = 0.1;
  int query_sample = 5;
  std::string index_mode = "ivf";
  uint32_t nlist = 64;
  uint32_t nprobe = 16;

  // Applies one config entry unless the matching flag was given on the
  // command line (flags win). Returns false for unknown keys.
  bool apply(const std::string& key, const std::string& value) {
    const auto set_u32 = [&](uint32_t& v) { v = uint32_t(std::stoul(value)); };
    if (key == "schema") train.schema_path = value;
    else if (key == "edges") train.edges_path = value;
    else if (key == "dim") set_u32(train.dim);
    else if (key == "epochs") train.epochs = std::stoi(value);
    else if (key == "partitions") set_u32(train.partitions);
    else if (key == "negatives") train.negatives = std::stoi(value);
    else if (key == "neg-mix") train.neg_mix = std::stod(value);
    else if (key == "lr") train.lr = std::stod(value);
    else if (key == "batch-size") train.batch_size = std::stoi(value);
    else if (key == "seed") train.seed = std::stoull(value);
    else if (key == "workers") train.workers = std::stoi(value);
    else if (key == "corrupt-side") train.corrupt_side = value;
    else if (key == "init-scale") train.init_scale = std::stod(value);
    else if (key == "out") out_dir = value;
    else if (key == "edges-v2") edges_v2 = value;
    else if (key == "eval-relation") eval_relation = value;
    else if (key == "holdout") holdout = std::stod(value);
    else if (key == "clusters") set_u32(clusters);
    else if (key == "mixture-m") mixture_m = std::stoi(value);
    else if (key == "source-type") source_type = value;
    else if (key == "target-type") target_type = value;
    else if (key == "k") k = std::stoul(value);
    else if (key == "pq-m") set_u32(pq_m);
    else if (key == "retrain-epochs") retrain_epochs = std::stoi(value);
    else if (key == "alpha") alpha = std::stod(value);
    else if (key == "query-sample") query_sample = std::stoi(value);
    else if (key == "index-mode") index_mode = value;
    else if (key == "nlist") set_u32(nlist);
    else if (key == "nprobe") set_u32(nprobe);
    else return false;
    return true;
  }
};

int cmd_pipeline(const PipelineFlags& p) {
  const fs::path out(p.out_dir);
  fs::create_directories(out);
  const Schema schema = load_schema(p.train.schema_path);

  // ingest + split held-out edges for evaluation
  const HinGraph full = load_edges(p.train.edges_path, schema);
  full.save_id_map((out / "full.idmap.tsv").string());
  const uint32_t eval_rel = p.eval_relation.empty()
                                ? full.edges()[0].relation
                                : require_relation(schema, p.eval_relation);
  const EvalSplit split = make_eval_split(full, eval_rel, p.holdout, p.train.seed);
  const HinGraph& graph = split.train_graph;

  // train
  const TrainConfig cfg = p.train.to_config();
  EmbeddingStore store =
      EmbeddingStore::init(graph, p.train.dim, cfg.seed, float(p.train.init_scale));
  const Partitioning part = partition(graph, cfg.partitions, cfg.seed);
  const TrainReport report = train(graph, part, store, cfg);
  const std::string ckpt_path = (out / "embeddings.ckpt").string();
  store.save_checkpoint(ckpt_path);
  graph.save_id_map(ckpt_path + ".idmap.tsv");
  report.save_tsv((out / "train_report.tsv").string());

  const uint32_t tt = require_entity_type(
      schema, p.target_type.empty() ? schema.entity_type(schema.num_entity_types() - 1).name
                                    : p.target_type);
  const uint32_t st = require_entity_type(schema, p.source_type);

  // cluster targets + mixtures
  KMeansConfig kc;
  kc.k = std::min<uint32_t>(p.clusters, uint32_t(graph.entity_count(tt)));
  kc.seed = cfg.seed;
  kc.batch_size = 0;
  const ClusterModel model = kmeans(store.entity_table(tt), kc);
  Checkpoint centroids_ckpt(store.dim());
  centroids_ckpt.add_table("centroids", model.centroids);
  centroids_ckpt.save((out / "centroids.ckpt").string());

  const auto mixtures = engagement_distributions(graph, model, st, tt, p.mixture_m, &store);
  save_mixtures_tsv((out / "mixtures.tsv").string(), schema.entity_type(st).name,
                    external_ids_of(graph, st), mixtures);

  // index the target table
  AnnParams ap;
  ap.mode = p.index_mode == "exact" ? AnnParams::Mode::Exact : AnnParams::Mode::IVF;
  ap.nlist = p.nlist;
  ap.nprobe = p.nprobe;
  ap.seed = cfg.seed;
  const AnnIndex index = AnnIndex::build(store.entity_table(tt), ap,
                                         schema.entity_type(tt).name, external_ids_of(graph, tt));
  index.save((out / "index.bin").string());

  // sample multi-queries
  {
    std::ofstream qout((out / "query_results.tsv").string(), std::ios::binary);
    qout << "query\trank\tid\tscore\tcomponent\n";
    const int sample = std::min<int>(p.query_sample, int(graph.entity_count(st)));
    for (int u = 0; u < sample; ++u) {
      MixtureRepresentation mix = mixtures[size_t(u)];
      if (mix.components.empty()) continue;
      const CandidateList res = multi_query(index, mix, p.k);
      for (size_t i = 0; i < res.items.size(); ++i)
        qout << graph.id_map().external_id(st, uint32_t(u)) << '\t' << (i + 1) << '\t'
             << index.external_id(res.items[i].id) << '\t' << fmt_score(res.items[i].score)
             << '\t' << res.items[i].component << '\n';
    }
  }

  // compress the target table
  PQTrainConfig pqc;
  pqc.m = p.pq_m;
  pqc.seed = cfg.seed;
  const PQCodebook cb = train_codebook(store.entity_table(tt), pqc);
  cb.save((out / "pq.codebook").string());
  const PQCodes codes = encode(store.entity_table(tt), cb);
  codes.save((out / "pq.codes").string());
  {
    const CompressionReport rep = compression_report(store.entity_table(tt), cb);
    std::ofstream pout((out / "pq_report.tsv").string(), std::ios::binary);
    pout << "factor\tmse\tmax_row_l2\tcodebook_bytes\n";
    pout << fmt_score(rep.factor) << '\t' << fmt_score(rep.mse) << '\t'
         << fmt_score(rep.max_row_l2) << '\t' << rep.codebook_bytes << '\n';
  }

  // retrain on the evolved edge file (warm start)
  if (!p.edges_v2.empty()) {
    const HinGraph graph2 = load_edges(p.edges_v2, schema);
    const EntityMatch match = match_entities(graph2, store, graph.id_map());
    RetrainPolicy policy;
    policy.mode = RetrainMode::WarmStart;
    policy.alpha = p.alpha;
    policy.warm.seed = cfg.seed + 1;
    TrainConfig cfg2 = cfg;
    cfg2.epochs = p.retrain_epochs;
    const Partitioning part2 = partition(graph2, cfg2.partitions, cfg2.seed);
    RetrainResult res = retrain(graph2, part2, store, match, policy, cfg2);
    res.store.save_checkpoint((out / "embeddings_v2.ckpt").string());
    graph2.save_id_map((out / "embeddings_v2.ckpt.idmap.tsv").string());
    res.drift.save_tsv((out / "drift.tsv").string());
  }

  // evaluate link prediction on the held-out edges
  {
    const LinkPredMetrics metrics = link_prediction_eval(split, store, {p.k}, false);
    std::ofstream eout((out / "eval.tsv").string(), std::ios::binary);
    eout << "metric\tvalue\n";
    for (const auto& [k, v] : metrics.recall) eout << "recall@" << k << '\t' << fmt_score(v) << '\n';
    eout << "mrr\t" << fmt_score(metrics.mrr) << '\n';
    eout << "queries\t" << metrics.queries << '\n';
  }
  std::cerr << "# pipeline artifacts written to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heterogeneous-network embedding toolkit"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate an edge file and emit the id map");
  std::string ingest_schema, ingest_edges, ingest_idmap;
  ingest->add_option("--schema", ingest_schema)->required();
  ingest->add_option("--edges", ingest_edges)->required();
  ingest->add_option("--out-idmap", ingest_idmap, "id-map TSV output");

  // coembed
  auto* coembed = app.add_subcommand("coembed", "split edges into co-embedding graphs");
  std::string co_schema, co_edges, co_out;
  coembed->add_option("--schema", co_schema)->required();
  coembed->add_option("--edges", co_edges)->required();
  coembed->add_option("--out-dir", co_out)->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train embeddings");
  TrainFlags train_flags;
  train_flags.attach(train_cmd);
  std::string train_out, train_report;
  train_cmd->add_option("--out", train_out, "checkpoint output")->required();
  train_cmd->add_option("--report", train_report, "per-bucket loss TSV");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "k-means over an embedding table");
  std::string cl_vectors, cl_table = "user", cl_out;
  uint32_t cl_k = 256;
  uint64_t cl_seed = 0;
  int cl_iters = 30, cl_batch = 1024;
  cluster->add_option("--vectors", cl_vectors)->required();
  cluster->add_option("--table", cl_table);
  cluster->add_option("-k,--clusters", cl_k);
  cluster->add_option("--seed", cl_seed);
  cluster->add_option("--iters", cl_iters);
  cluster->add_option("--batch", cl_batch, "mini-batch size, 0 = full batch");
  cluster->add_option("--out", cl_out)->required();

  // mixture
  auto* mixture = app.add_subcommand("mixture", "cluster-engagement mixtures per source");
  std::string mx_schema, mx_edges, mx_ckpt, mx_centroids, mx_source = "user", mx_target, mx_out;
  int mx_m = 3;
  mixture->add_option("--schema", mx_schema)->required();
  mixture->add_option("--edges", mx_edges)->required();
  mixture->add_option("--ckpt", mx_ckpt)->required();
  mixture->add_option("--centroids", mx_centroids)->required();
  mixture->add_option("--source-type", mx_source);
  mixture->add_option("--target-type", mx_target)->required();
  mixture->add_option("-m,--top-m", mx_m);
  mixture->add_option("--out", mx_out)->required();

  // index build|query
  auto* index = app.add_subcommand("index", "ANN index over an embedding table");
  index->require_subcommand(1);
  auto* ib = index->add_subcommand("build", "build an index");
  std::string ib_vectors, ib_table = "user", ib_idmap, ib_mode = "ivf", ib_out;
  uint32_t ib_nlist = 64, ib_nprobe = 16;
  uint64_t ib_seed = 0;
  ib->add_option("--vectors", ib_vectors)->required();
  ib->add_option("--table", ib_table);
  ib->add_option("--idmap", ib_idmap, "id-map TSV for external ids");
  ib->add_option("--mode", ib_mode, "exact|ivf");
  ib->add_option("--nlist", ib_nlist);
  ib->add_option("--nprobe", ib_nprobe);
  ib->add_option("--seed", ib_seed);
  ib->add_option("--out", ib_out)->required();

  std::string iq_idx, iq_id, iq_mixture, iq_centroids, iq_vectors, iq_table, iq_relation, iq_out;
  size_t iq_k = 20;
  auto add_query_opts = [&](CLI::App* q) {
    q->add_option("--idx", iq_idx)->required();
    q->add_option("--query-id", iq_id)->required();
    q->add_option("--k", iq_k);
    q->add_option("--mixture", iq_mixture, "mixture TSV for multi-querying");
    q->add_option("--centroids", iq_centroids, "centroids checkpoint for mixture components");
    q->add_option("--vectors", iq_vectors, "checkpoint holding the query-side table");
    q->add_option("--table", iq_table, "query-side table name");
    q->add_option("--apply-relation", iq_relation,
                  "add this relation's translation to the query vector");
    q->add_option("--out", iq_out, "write results TSV here instead of stdout");
  };
  auto* iq = index->add_subcommand("query", "query an index");
  add_query_opts(iq);
  auto* query_cmd = app.add_subcommand("query", "query an index (alias of 'index query')");
  add_query_opts(query_cmd);

  // pq train|encode|decode|report
  auto* pq = app.add_subcommand("pq", "product quantization");
  pq->require_subcommand(1);
  std::string pq_vectors, pq_table = "user", pq_codebook, pq_codes, pq_out, pq_table_name =
                                                                                "decoded";
  uint32_t pq_m = 8;
  uint64_t pq_seed = 0;
  int pq_iters = 25;
  auto* pqt = pq->add_subcommand("train", "train a codebook");
  pqt->add_option("--vectors", pq_vectors)->required();
  pqt->add_option("--table", pq_table);
  pqt->add_option("-M,--subquantizers", pq_m);
  pqt->add_option("--seed", pq_seed);
  pqt->add_option("--iters", pq_iters);
  pqt->add_option("--out", pq_out)->required();
  auto* pqe = pq->add_subcommand("encode", "encode a table to codes");
  pqe->add_option("--vectors", pq_vectors)->required();
  pqe->add_option("--table", pq_table);
  pqe->add_option("--codebook", pq_codebook)->required();
  pqe->add_option("--out", pq_out)->required();
  auto* pqd = pq->add_subcommand("decode", "decode codes back to vectors");
  pqd->add_option("--codes", pq_codes)->required();
  pqd->add_option("--codebook", pq_codebook)->required();
  pqd->add_option("--table-name", pq_table_name);
  pqd->add_option("--out", pq_out)->required();
  auto* pqr = pq->add_subcommand("report", "compression factor and error report");
  pqr->add_option("--vectors", pq_vectors)->required();
  pqr->add_option("--table", pq_table);
  pqr->add_option("--codebook", pq_codebook)->required();

  // retrain
  auto* rt = app.add_subcommand("retrain", "re-train against an evolved graph");
  TrainFlags rt_flags;
  rt_flags.attach(rt);
  std::string rt_prev, rt_prev_idmap, rt_mode = "warm", rt_out, rt_drift;
  std::string rt_new_node = "neighborhood";
  double rt_alpha = 0.1;
  bool rt_directional = false;
  rt->add_option("--prev", rt_prev, "previous checkpoint")->required();
  rt->add_option("--prev-idmap", rt_prev_idmap, "previous id map")->required();
  rt->add_option("--mode", rt_mode, "warm|anchor|cold");
  rt->add_option("--alpha", rt_alpha, "anchoring coefficient");
  rt->add_flag("--directional-relation", rt_directional,
               "subtract the relation vector when the new node is the source");
  rt->add_option("--new-node-init", rt_new_node, "random|neighborhood");
  rt->add_option("--out", rt_out, "new checkpoint output")->required();
  rt->add_option("--drift-out", rt_drift, "drift report TSV");

  // eval split|linkpred|rce
  auto* eval_cmd = app.add_subcommand("eval", "offline evaluation");
  eval_cmd->require_subcommand(1);
  auto* es = eval_cmd->add_subcommand("split", "hold out edges of one relation");
  std::string es_schema, es_edges, es_relation, es_train, es_heldout;
  double es_fraction = 0.2;
  uint64_t es_seed = 0;
  es->add_option("--schema", es_schema)->required();
  es->add_option("--edges", es_edges)->required();
  es->add_option("--relation", es_relation)->required();
  es->add_option("--fraction", es_fraction);
  es->add_option("--seed", es_seed);
  es->add_option("--out-train", es_train)->required();
  es->add_option("--out-heldout", es_heldout)->required();

  auto* el = eval_cmd->add_subcommand("linkpred", "recall@k and MRR over held-out edges");
  std::string el_schema, el_edges, el_split, el_ckpt, el_ks = "10,20,50";
  bool el_filter = false;
  el->add_option("--schema", el_schema)->required();
  el->add_option("--edges", el_edges, "training edge TSV")->required();
  el->add_option("--split", el_split, "held-out edge TSV")->required();
  el->add_option("--ckpt", el_ckpt)->required();
  el->add_option("--k", el_ks, "comma-separated k values");
  el->add_flag("--filter-train", el_filter, "remove train positives from rankings");

  auto* er = eval_cmd->add_subcommand("rce", "relative cross entropy");
  std::string er_labels, er_preds;
  er->add_option("--labels", er_labels)->required();
  er->add_option("--preds", er_preds)->required();

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "run the full flow on one dataset");
  PipelineFlags pf;
  pf.train.attach(pipe, /*require_io=*/false);
  pipe->add_option("--out", pf.out_dir, "artifact directory");
  pipe->add_option("--edges-v2", pf.edges_v2, "evolved edge file for the retrain stage");
  pipe->add_option("--eval-relation", pf.eval_relation);
  pipe->add_option("--holdout", pf.holdout);
  pipe->add_option("--clusters", pf.clusters);
  pipe->add_option("--mixture-m", pf.mixture_m);
  pipe->add_option("--source-type", pf.source_type);
  pipe->add_option("--target-type", pf.target_type);
  pipe->add_option("--k", pf.k);
  pipe->add_option("--pq-m", pf.pq_m);
  pipe->add_option("--retrain-epochs", pf.retrain_epochs);
  pipe->add_option("--alpha", pf.alpha);
  pipe->add_option("--query-sample", pf.query_sample);
  pipe->add_option("--index-mode", pf.index_mode);
  pipe->add_option("--nlist", pf.nlist);
  pipe->add_option("--nprobe", pf.nprobe);
  std::string pipe_config;
  pipe->add_option("--config", pipe_config, "key=value configuration file; flags win");
  bool show_config = false;
  pipe->add_flag("--show-config", show_config, "print the resolved configuration and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      ConfigLog log;
      log.add("schema", ingest_schema);
      log.add("edges", ingest_edges);
      log.print("ingest");
      return cmd_ingest(ingest_schema, ingest_edges, ingest_idmap);
    }
    if (coembed->parsed()) {
      ConfigLog log;
      log.add("schema", co_schema);
      log.add("edges", co_edges);
      log.print("coembed");
      return cmd_coembed(co_schema, co_edges, co_out);
    }
    if (train_cmd->parsed()) {
      ConfigLog log;
      train_flags.log(log);
      log.add("out", train_out);
      log.print("train");
      return cmd_train(train_flags, train_out, train_report);
    }
    if (cluster->parsed()) {
      ConfigLog log;
      log.add("vectors", cl_vectors);
      log.add("table", cl_table);
      log.add("k", int64_t(cl_k));
      log.add("seed", int64_t(cl_seed));
      log.print("cluster");
      return cmd_cluster(cl_vectors, cl_table, cl_k, cl_seed, cl_iters, cl_batch, cl_out);
    }
    if (mixture->parsed()) {
      ConfigLog log;
      log.add("edges", mx_edges);
      log.add("ckpt", mx_ckpt);
      log.add("m", int64_t(mx_m));
      log.print("mixture");
      return cmd_mixture(mx_schema, mx_edges, mx_ckpt, mx_centroids, mx_source, mx_target, mx_m,
                         mx_out);
    }
    if (ib->parsed()) {
      ConfigLog log;
      log.add("vectors", ib_vectors);
      log.add("table", ib_table);
      log.add("mode", ib_mode);
      log.add("nlist", int64_t(ib_nlist));
      log.add("nprobe", int64_t(ib_nprobe));
      log.add("seed", int64_t(ib_seed));
      log.print("index build");
      return cmd_index_build(ib_vectors, ib_table, ib_idmap, ib_mode, ib_nlist, ib_nprobe,
                             ib_seed, ib_out);
    }
    if (iq->parsed() || query_cmd->parsed()) {
      ConfigLog log;
      log.add("idx", iq_idx);
      log.add("query_id", iq_id);
      log.add("k", int64_t(iq_k));
      if (!iq_mixture.empty()) log.add("mixture", iq_mixture);
      log.print("query");
      return cmd_index_query(iq_idx, iq_id, iq_k, iq_mixture, iq_centroids, iq_vectors, iq_table,
                             iq_relation, iq_out);
    }
    if (pqt->parsed()) {
      ConfigLog log;
      log.add("vectors", pq_vectors);
      log.add("table", pq_table);
      log.add("M", int64_t(pq_m));
      log.add("seed", int64_t(pq_seed));
      log.print("pq train");
      return cmd_pq_train(pq_vectors, pq_table, pq_m, pq_seed, pq_iters, pq_out);
    }
    if (pqe->parsed()) return cmd_pq_encode(pq_vectors, pq_table, pq_codebook, pq_out);
    if (pqd->parsed()) return cmd_pq_decode(pq_codes, pq_codebook, pq_table_name, pq_out);
    if (pqr->parsed()) return cmd_pq_report(pq_vectors, pq_table, pq_codebook);
    if (rt->parsed()) {
      ConfigLog log;
      rt_flags.log(log);
      log.add("prev", rt_prev);
      log.add("mode", rt_mode);
      log.add("alpha", rt_alpha);
      log.print("retrain");
      return cmd_retrain(rt_flags, rt_prev, rt_prev_idmap, rt_mode, rt_alpha, rt_directional,
                         rt_new_node, rt_out, rt_drift);
    }
    if (es->parsed()) {
      ConfigLog log;
      log.add("edges", es_edges);
      log.add("relation", es_relation);
      log.add("fraction", es_fraction);
      log.add("seed", int64_t(es_seed));
      log.print("eval split");
      return cmd_eval_split(es_schema, es_edges, es_relation, es_fraction, es_seed, es_train,
                            es_heldout);
    }
    if (el->parsed()) {
      ConfigLog log;
      log.add("ckpt", el_ckpt);
      log.add("split", el_split);
      log.add("k", el_ks);
      log.print("eval linkpred");
      return cmd_eval_linkpred(el_schema, el_edges, el_split, el_ckpt, el_ks, el_filter);
    }
    if (er->parsed()) return cmd_eval_rce(er_labels, er_preds);
    if (pipe->parsed()) {
      if (!pipe_config.empty()) {
        for (const auto& [key, value] : read_config_file(pipe_config)) {
          const CLI::Option* opt = pipe->get_option_no_throw("--" + key);
          if (opt != nullptr && opt->count() > 0) continue;  // flags win
          if (!pf.apply(key, value))
            throw std::runtime_error("unknown config key '" + key + "' in " + pipe_config);
        }
      }
      if (pf.train.schema_path.empty())
        throw std::runtime_error("missing schema (pass --schema or set schema= in --config)");
      if (pf.train.edges_path.empty())
        throw std::runtime_error("missing edges (pass --edges or set edges= in --config)");
      ConfigLog log;
      pf.train.log(log);
      log.add("out", pf.out_dir);
      log.add("edges_v2", pf.edges_v2);
      log.add("holdout", pf.holdout);
      log.add("clusters", int64_t(pf.clusters));
      log.add("mixture_m", int64_t(pf.mixture_m));
      log.add("source_type", pf.source_type);
      log.add("target_type", pf.target_type);
      log.add("k", int64_t(pf.k));
      log.add("pq_m", int64_t(pf.pq_m));
      log.add("retrain_epochs", int64_t(pf.retrain_epochs));
      log.add("alpha", pf.alpha);
      log.add("index_mode", pf.index_mode);
      log.add("nlist", int64_t(pf.nlist));
      log.add("nprobe", int64_t(pf.nprobe));
      if (show_config) {
        for (const auto& [k, v] : log.entries) std::cout << k << " = " << v << "\n";
        return 0;
      }
      log.print("pipeline");
      return cmd_pipeline(pf);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
