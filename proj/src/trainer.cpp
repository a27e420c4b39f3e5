#include "hinembed/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace hinembed {

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (num_negatives < 1) throw std::invalid_argument("num_negatives must be >= 1");
  if (negative_mix < 0.0 || negative_mix > 1.0)
    throw std::invalid_argument("negative_mix must be in [0, 1]");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (partitions < 1) throw std::invalid_argument("partitions must be >= 1");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

namespace {

template <class Access>
double score_impl(const Access& a, const Edge& e) {
  const auto s = a.entity_row(e.source.entity_type, e.source.local_id);
  const auto r = a.relation_row(e.relation);
  const auto t = a.entity_row(e.target.entity_type, e.target.local_id);
  double acc = 0.0;
  for (size_t i = 0; i < s.size(); ++i)
    acc += (double(s[i]) + double(r[i])) * double(t[i]);
  return acc;
}

}  // namespace

double score(const EmbeddingStore& store, const Edge& edge) { return score_impl(store, edge); }
double score(const BucketView& view, const Edge& edge) { return score_impl(view, edge); }

std::vector<double>& SparseGrads::fetch(uint64_t key, bool is_relation, uint32_t type,
                                        uint32_t row, size_t dim) {
  auto it = index_.find(key);
  if (it != index_.end()) return rows_[it->second].grad;
  index_.emplace(key, rows_.size());
  rows_.push_back({is_relation, type, row, std::vector<double>(dim, 0.0)});
  return rows_.back().grad;
}

std::vector<double>& SparseGrads::entity(uint32_t type, uint32_t id, size_t dim) {
  const uint64_t key = (uint64_t(type) << 32) | id;
  return fetch(key, false, type, id, dim);
}

std::vector<double>& SparseGrads::relation(uint32_t r, size_t dim) {
  const uint64_t key = (uint64_t(1) << 63) | r;
  return fetch(key, true, 0, r, dim);
}

const std::vector<double>* SparseGrads::find_entity(uint32_t type, uint32_t id) const {
  auto it = index_.find((uint64_t(type) << 32) | id);
  return it == index_.end() ? nullptr : &rows_[it->second].grad;
}

const std::vector<double>* SparseGrads::find_relation(uint32_t r) const {
  auto it = index_.find((uint64_t(1) << 63) | r);
  return it == index_.end() ? nullptr : &rows_[it->second].grad;
}

CorruptionDomain::CorruptionDomain(const HinGraph& graph, uint32_t type) {
  const size_t n = graph.entity_count(type);
  ids_.resize(n);
  std::iota(ids_.begin(), ids_.end(), 0u);
  cum_.resize(n);
  const auto& deg = graph.degrees(type);
  double run = 0.0;
  for (size_t i = 0; i < n; ++i) {
    run += double(deg[i]);
    cum_[i] = run;
  }
  total_ = run;
}

CorruptionDomain::CorruptionDomain(const HinGraph& graph, uint32_t type,
                                   const Partitioning& partitioning, uint32_t pi, uint32_t pj) {
  const auto& assign = partitioning.assignment.at(type);
  const auto& deg = graph.degrees(type);
  double run = 0.0;
  for (uint32_t id = 0; id < assign.size(); ++id) {
    if (assign[id] != pi && assign[id] != pj) continue;
    ids_.push_back(id);
    run += double(deg[id]);
    cum_.push_back(run);
  }
  total_ = run;
}

int64_t CorruptionDomain::position_of(uint32_t id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) return -1;
  return it - ids_.begin();
}

bool CorruptionDomain::viable(uint32_t exclude) const {
  const int64_t pos = position_of(exclude);
  return pos >= 0 ? ids_.size() >= 2 : !ids_.empty();
}

uint32_t CorruptionDomain::draw_uniform(Rng& rng, uint32_t exclude) const {
  const int64_t pos = position_of(exclude);
  const size_t n = ids_.size();
  if (pos < 0) {
    if (n == 0) throw std::runtime_error("corruption domain is empty");
    return ids_[rand_index(rng, n)];
  }
  if (n < 2) throw std::runtime_error("corrupted type has only one candidate entity");
  size_t k = rand_index(rng, n - 1);
  if (k >= size_t(pos)) ++k;
  return ids_[k];
}

uint32_t CorruptionDomain::draw_proportional(Rng& rng, uint32_t exclude) const {
  const int64_t pos = position_of(exclude);
  const double w_excl = pos < 0 ? 0.0 : cum_[pos] - (pos > 0 ? cum_[pos - 1] : 0.0);
  const double w_total = total_ - w_excl;
  if (w_total <= 0.0) return draw_uniform(rng, exclude);
  double u = rand_unit(rng) * w_total;
  if (pos >= 0 && u >= cum_[pos] - w_excl) u += w_excl;
  size_t k = std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin();
  if (k >= ids_.size()) k = ids_.size() - 1;
  if (pos >= 0 && k == size_t(pos)) {
    // Floating-point boundary landed on the excluded entity; take the next
    // candidate with positive weight.
    const size_t n = ids_.size();
    for (size_t step = 1; step < n; ++step) {
      const size_t j = (k + step) % n;
      const double w = cum_[j] - (j > 0 ? cum_[j - 1] : 0.0);
      if (w > 0.0) return ids_[j];
    }
    return draw_uniform(rng, exclude);
  }
  return ids_[k];
}

NegativeSampler::NegativeSampler(const HinGraph& graph, const TrainConfig& config)
    : graph_(&graph), config_(config) {
  for (uint32_t t = 0; t < graph.schema().num_entity_types(); ++t)
    domains_.emplace_back(graph, t);
}

NegativeSampler::NegativeSampler(const HinGraph& graph, const TrainConfig& config,
                                 const Partitioning& partitioning, uint32_t pi, uint32_t pj)
    : graph_(&graph), config_(config) {
  for (uint32_t t = 0; t < graph.schema().num_entity_types(); ++t)
    domains_.emplace_back(graph, t, partitioning, pi, pj);
}

std::vector<Edge> NegativeSampler::sample(const Edge& positive, Rng& rng) const {
  const RelationType& rel = graph_->schema().relation_type(positive.relation);
  std::vector<Edge> out;
  out.reserve(size_t(config_.num_negatives));
  for (int i = 0; i < config_.num_negatives; ++i) {
    bool corrupt_source;
    switch (config_.corrupt_side) {
      case CorruptSide::SourceOnly: corrupt_source = true; break;
      case CorruptSide::TargetOnly: corrupt_source = false; break;
      default: corrupt_source = rand_unit(rng) < 0.5; break;
    }
    const auto& src_dom = domains_[rel.source_type];
    const auto& tgt_dom = domains_[rel.target_type];
    // Fall back to the other side when the chosen side has no replacement
    // candidate inside this domain.
    if (config_.corrupt_side == CorruptSide::Both) {
      if (corrupt_source && !src_dom.viable(positive.source.local_id) &&
          tgt_dom.viable(positive.target.local_id))
        corrupt_source = false;
      else if (!corrupt_source && !tgt_dom.viable(positive.target.local_id) &&
               src_dom.viable(positive.source.local_id))
        corrupt_source = true;
    }
    const CorruptionDomain& dom = corrupt_source ? src_dom : tgt_dom;
    const uint32_t original =
        corrupt_source ? positive.source.local_id : positive.target.local_id;
    const bool proportional = rand_unit(rng) < config_.negative_mix;
    const uint32_t replacement = proportional ? dom.draw_proportional(rng, original)
                                              : dom.draw_uniform(rng, original);
    Edge neg = positive;
    if (corrupt_source)
      neg.source.local_id = replacement;
    else
      neg.target.local_id = replacement;
    out.push_back(neg);
  }
  return out;
}

std::vector<Edge> sample_negatives(const Edge& positive, const HinGraph& graph,
                                   const TrainConfig& config, Rng& rng) {
  return NegativeSampler(graph, config).sample(positive, rng);
}

namespace {

void add_edge_grads(const BucketView& view, const Edge& e, double df, SparseGrads& grads) {
  const size_t dim = view.dim();
  const auto s = view.entity_row(e.source.entity_type, e.source.local_id);
  const auto r = view.relation_row(e.relation);
  const auto t = view.entity_row(e.target.entity_type, e.target.local_id);
  // Insert all three rows before taking references: insertion may reallocate.
  grads.entity(e.source.entity_type, e.source.local_id, dim);
  grads.relation(e.relation, dim);
  grads.entity(e.target.entity_type, e.target.local_id, dim);
  auto& gs = grads.entity(e.source.entity_type, e.source.local_id, dim);
  auto& gr = grads.relation(e.relation, dim);
  auto& gt = grads.entity(e.target.entity_type, e.target.local_id, dim);
  for (size_t i = 0; i < dim; ++i) {
    const double ti = double(t[i]);
    gs[i] += df * ti;
    gr[i] += df * ti;
    gt[i] += df * (double(s[i]) + double(r[i]));
  }
}

}  // namespace

BatchResult batch_loss_and_grads(const BucketView& view, const TripletBatch& batch,
                                 const AnchorTable* anchor) {
  if (batch.negatives.size() != batch.positives.size())
    throw std::invalid_argument("batch negatives must align with positives");
  BatchResult res;
  for (size_t p = 0; p < batch.positives.size(); ++p) {
    const Edge& e = batch.positives[p];
    const double f = score(view, e);
    res.loss += -log_sigmoid(f);
    add_edge_grads(view, e, stable_sigmoid(f) - 1.0, res.grads);
    for (const Edge& neg : batch.negatives[p]) {
      const double fn = score(view, neg);
      res.loss += -log_sigmoid(-fn);
      add_edge_grads(view, neg, stable_sigmoid(fn), res.grads);
    }
  }
  if (anchor != nullptr && anchor->prev != nullptr && anchor->alpha != 0.0) {
    for (auto& row : res.grads.rows()) {
      if (row.is_relation || !anchor->anchored(row.type, row.row)) continue;
      const auto cur = view.entity_row(row.type, row.row);
      const auto prev = anchor->prev->entity_row(uint32_t(anchor->type_map[row.type]),
                                                 uint32_t(anchor->row_map[row.type][row.row]));
      for (size_t i = 0; i < cur.size(); ++i) {
        const double d = double(cur[i]) - double(prev[i]);
        res.loss += anchor->alpha * d * d;
        row.grad[i] += 2.0 * anchor->alpha * d;
      }
    }
  }
  return res;
}

namespace {

void apply_adagrad_row(std::span<float> theta, std::span<float> accum,
                       const std::vector<double>& grad, double learning_rate) {
  constexpr double kEps = 1e-10;
  for (size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    const double a = double(accum[i]) + g * g;
    if (a < double(accum[i]))
      throw std::runtime_error("Adagrad accumulator decreased");  // never holds for finite g
    accum[i] = float(a);
    theta[i] = float(double(theta[i]) - learning_rate * g / (std::sqrt(a) + kEps));
  }
}

}  // namespace

void adagrad_step(BucketView& view, const SparseGrads& grads, double learning_rate) {
  bool has_relation_rows = false;
  for (const auto& row : grads.rows()) {
    if (row.is_relation) {
      has_relation_rows = true;
      continue;
    }
    apply_adagrad_row(view.entity_row(row.type, row.row),
                      view.entity_accum_row(row.type, row.row), row.grad, learning_rate);
  }
  if (!has_relation_rows) return;
  std::lock_guard<std::mutex> lock(view.relation_mutex());
  for (const auto& row : grads.rows()) {
    if (!row.is_relation) continue;
    apply_adagrad_row(view.relation_row(row.row), view.relation_accum_row(row.row), row.grad,
                      learning_rate);
  }
}

double TrainReport::epoch_mean_loss(int epoch) const {
  double loss = 0.0;
  size_t edges = 0;
  for (const auto& r : rows) {
    if (r.epoch != epoch) continue;
    loss += r.mean_loss * double(r.edge_count);
    edges += r.edge_count;
  }
  return edges == 0 ? 0.0 : loss / double(edges);
}

void TrainReport::save_tsv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open report file for writing: " + path);
  out << "epoch\tbucket_i\tbucket_j\tmean_loss\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.9g", r.mean_loss);
    out << r.epoch << '\t' << r.bucket_i << '\t' << r.bucket_j << '\t' << buf << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

TrainReportRow run_bucket(const HinGraph& graph, const Partitioning& partitioning,
                          EmbeddingStore& store, const TrainConfig& config,
                          const AnchorTable* anchor, const Bucket& bucket, int epoch) {
  const uint32_t i = bucket.source_partition;
  const uint32_t j = bucket.target_partition;
  TrainReportRow row{epoch, i, j, 0.0, bucket.edge_indices.size()};
  if (bucket.edge_indices.empty()) return row;

  BucketView view = store.slice_for_bucket(partitioning, bucket);
  const NegativeSampler sampler(graph, config, partitioning, i, j);
  Rng rng = make_rng(derive_seed(config.seed, 0x6275636bu, uint64_t(epoch),
                                 uint64_t(i) * partitioning.num_partitions + j));
  std::vector<size_t> order = bucket.edge_indices;
  std::shuffle(order.begin(), order.end(), rng);

  double loss_sum = 0.0;
  const size_t bs = size_t(config.batch_size);
  for (size_t start = 0; start < order.size(); start += bs) {
    const size_t end = std::min(order.size(), start + bs);
    TripletBatch batch;
    batch.positives.reserve(end - start);
    batch.negatives.reserve(end - start);
    for (size_t k = start; k < end; ++k) {
      const Edge& e = graph.edges()[order[k]];
      batch.positives.push_back(e);
      batch.negatives.push_back(sampler.sample(e, rng));
    }
    BatchResult res = batch_loss_and_grads(view, batch, anchor);
    adagrad_step(view, res.grads, config.learning_rate);
    loss_sum += res.loss;
  }
  row.mean_loss = loss_sum / double(order.size());
  return row;
}

}  // namespace

TrainReport train(const HinGraph& graph, const Partitioning& partitioning, EmbeddingStore& store,
                  const TrainConfig& config, const AnchorTable* anchor) {
  config.validate();
  store.validate_against(graph);
  if (partitioning.num_partitions != config.partitions)
    throw std::invalid_argument("partitioning does not match config.partitions");
  const std::vector<Bucket> buckets = bucketize(graph, partitioning);

  TrainReport report;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<size_t> order(buckets.size());
    std::iota(order.begin(), order.end(), size_t(0));
    Rng erng = make_rng(derive_seed(config.seed, 0x65706f63u, uint64_t(epoch)));
    std::shuffle(order.begin(), order.end(), erng);

    if (config.workers <= 1) {
      for (size_t idx : order)
        report.rows.push_back(
            run_bucket(graph, partitioning, store, config, anchor, buckets[idx], epoch));
      continue;
    }

    // Disjoint-partition scheduling: a bucket runs once both its partitions
    // are free; earlier buckets in the epoch order have priority.
    std::mutex mu;
    std::condition_variable cv;
    std::vector<uint8_t> busy(partitioning.num_partitions, 0);
    std::vector<uint8_t> state(order.size(), 0);  // 0 pending, 1 running, 2 done
    size_t done = 0;
    std::exception_ptr failure;

    auto worker = [&]() {
      std::unique_lock<std::mutex> lock(mu);
      while (true) {
        if (failure) return;
        if (done == order.size()) return;
        int64_t pick = -1;
        for (size_t k = 0; k < order.size(); ++k) {
          if (state[k] != 0) continue;
          const Bucket& b = buckets[order[k]];
          if (busy[b.source_partition] || busy[b.target_partition]) continue;
          pick = int64_t(k);
          break;
        }
        if (pick < 0) {
          cv.wait(lock);
          continue;
        }
        const Bucket& b = buckets[order[size_t(pick)]];
        state[size_t(pick)] = 1;
        busy[b.source_partition] = 1;
        busy[b.target_partition] = 1;
        lock.unlock();
        TrainReportRow row;
        std::exception_ptr err;
        try {
          row = run_bucket(graph, partitioning, store, config, anchor, b, epoch);
        } catch (...) {
          err = std::current_exception();
        }
        lock.lock();
        busy[b.source_partition] = 0;
        busy[b.target_partition] = 0;
        state[size_t(pick)] = 2;
        ++done;
        if (err && !failure) failure = err;
        if (!err) report.rows.push_back(row);
        cv.notify_all();
      }
    };

    std::vector<std::thread> threads;
    const int nthreads = std::min<int>(config.workers, int(order.size()));
    threads.reserve(size_t(nthreads));
    for (int w = 0; w < nthreads; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::sort(report.rows.begin(), report.rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.epoch, a.bucket_i, a.bucket_j) < std::tie(b.epoch, b.bucket_i, b.bucket_j);
  });
  return report;
}

std::vector<CoembedGraph> build_coembedding_graphs(const HinGraph& full,
                                                   std::vector<std::string>* warnings) {
  const Schema& schema = full.schema();
  std::vector<uint32_t> high, low;
  for (uint32_t r = 0; r < schema.num_relation_types(); ++r) {
    if (schema.relation_type(r).coverage == Coverage::High)
      high.push_back(r);
    else
      low.push_back(r);
  }
  if (high.empty())
    throw std::runtime_error("co-embedding needs at least one high-coverage relation");

  std::vector<size_t> edges_per_relation(schema.num_relation_types(), 0);
  for (const Edge& e : full.edges()) ++edges_per_relation[e.relation];
  if (warnings != nullptr)
    for (uint32_t r = 0; r < schema.num_relation_types(); ++r)
      if (edges_per_relation[r] == 0)
        warnings->push_back("relation '" + schema.relation_type(r).name +
                            "' is referenced by no edges");

  std::vector<CoembedGraph> out;
  for (uint32_t h : high) {
    std::vector<bool> include(schema.num_relation_types(), false);
    include[h] = true;
    for (uint32_t l : low) include[l] = true;

    // Sub-schema keeps declaration order, restricted to referenced types.
    std::vector<bool> keep_type(schema.num_entity_types(), false);
    for (uint32_t r = 0; r < schema.num_relation_types(); ++r) {
      if (!include[r]) continue;
      keep_type[schema.relation_type(r).source_type] = true;
      keep_type[schema.relation_type(r).target_type] = true;
    }
    Schema sub;
    for (uint32_t t = 0; t < schema.num_entity_types(); ++t)
      if (keep_type[t]) sub.add_entity_type(schema.entity_type(t).name);
    for (uint32_t r = 0; r < schema.num_relation_types(); ++r) {
      if (!include[r]) continue;
      const RelationType& rel = schema.relation_type(r);
      sub.add_relation_type(rel.name, schema.entity_type(rel.source_type).name,
                            schema.entity_type(rel.target_type).name, rel.coverage);
    }

    GraphBuilder builder(std::move(sub));
    for (const Edge& e : full.edges()) {
      if (!include[e.relation]) continue;
      builder.add_edge(schema.entity_type(e.source.entity_type).name,
                       full.id_map().external_id(e.source.entity_type, e.source.local_id),
                       schema.relation_type(e.relation).name,
                       schema.entity_type(e.target.entity_type).name,
                       full.id_map().external_id(e.target.entity_type, e.target.local_id));
    }
    out.push_back({schema.relation_type(h).name, builder.build()});
  }
  return out;
}

}  // namespace hinembed
