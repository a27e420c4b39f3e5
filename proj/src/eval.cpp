#include "hinembed/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "hinembed/rng.hpp"
#include "hinembed/trainer.hpp"

namespace hinembed {

RecallResult recall_at_k(const std::vector<QueryJudgment>& queries, size_t k) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  RecallResult res;
  double sum = 0.0;
  for (const auto& q : queries) {
    if (q.positives.empty()) {
      ++res.skipped;
      continue;
    }
    const std::unordered_set<uint32_t> pos(q.positives.begin(), q.positives.end());
    size_t hits = 0;
    const size_t top = std::min(k, q.ranked.size());
    for (size_t i = 0; i < top; ++i)
      if (pos.count(q.ranked[i])) ++hits;
    sum += double(hits) / double(pos.size());
    ++res.evaluated;
  }
  res.value = res.evaluated == 0 ? 0.0 : sum / double(res.evaluated);
  return res;
}

double mrr(const std::vector<QueryJudgment>& queries) {
  if (queries.empty()) throw std::invalid_argument("mrr over an empty query set");
  double sum = 0.0;
  for (const auto& q : queries) {
    const std::unordered_set<uint32_t> pos(q.positives.begin(), q.positives.end());
    double rr = 0.0;
    for (size_t i = 0; i < q.ranked.size(); ++i)
      if (pos.count(q.ranked[i])) {
        rr = 1.0 / double(i + 1);
        break;
      }
    sum += rr;
  }
  return sum / double(queries.size());
}

RceInput make_rce_input(const std::vector<int>& labels, const std::vector<double>& predictions) {
  if (labels.size() != predictions.size())
    throw std::invalid_argument("labels and predictions must align");
  if (labels.empty()) throw std::invalid_argument("empty evaluation set");
  double mean = 0.0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");
    mean += double(y);
  }
  for (double p : predictions)
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("predictions must be probabilities in [0, 1]");
  RceInput input;
  input.labels = labels;
  input.predictions = predictions;
  input.prior = mean / double(labels.size());
  return input;
}

double rce(const RceInput& input, size_t* clipped) {
  if (!(input.prior > 0.0 && input.prior < 1.0))
    throw std::invalid_argument("degenerate label set: prior must be strictly inside (0, 1)");
  if (input.labels.size() != input.predictions.size() || input.labels.empty())
    throw std::invalid_argument("labels and predictions must align and be non-empty");
  constexpr double kClip = 1e-9;
  size_t clips = 0;
  auto bce = [&](double y, double p) {
    const double q = std::clamp(p, kClip, 1.0 - kClip);
    if (q != p) ++clips;
    return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
  };
  double ce = 0.0;
  for (size_t i = 0; i < input.labels.size(); ++i)
    ce += bce(double(input.labels[i]), input.predictions[i]);
  ce /= double(input.labels.size());
  const double ref =
      -(input.prior * std::log(input.prior) + (1.0 - input.prior) * std::log(1.0 - input.prior));
  if (clipped != nullptr) *clipped = clips;
  return 100.0 * (ref - ce) / ref;
}

EvalSplit make_eval_split(const HinGraph& full, uint32_t relation, double holdout_fraction,
                          uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw std::invalid_argument("holdout_fraction must be in (0, 1)");
  const Schema& schema = full.schema();
  if (relation >= schema.num_relation_types())
    throw std::invalid_argument("relation index out of range");

  // Group this relation's edge indices by source.
  std::unordered_map<uint32_t, std::vector<size_t>> by_source;
  for (size_t e = 0; e < full.edges().size(); ++e)
    if (full.edges()[e].relation == relation)
      by_source[full.edges()[e].source.local_id].push_back(e);

  std::vector<uint8_t> held(full.edges().size(), 0);
  std::vector<uint32_t> sources;
  sources.reserve(by_source.size());
  for (const auto& [s, _] : by_source) sources.push_back(s);
  std::sort(sources.begin(), sources.end());
  for (uint32_t s : sources) {
    auto& idx = by_source[s];
    if (idx.size() < 2) continue;  // keep singletons in train
    Rng rng = make_rng(derive_seed(seed, 0x73706c74u, s));
    std::shuffle(idx.begin(), idx.end(), rng);
    size_t take = size_t(std::llround(holdout_fraction * double(idx.size())));
    take = std::clamp<size_t>(take, 1, idx.size() - 1);
    for (size_t i = 0; i < take; ++i) held[idx[i]] = 1;
  }

  GraphBuilder builder(schema);
  const IdMap& ids = full.id_map();
  for (size_t e = 0; e < full.edges().size(); ++e) {
    if (held[e]) continue;
    const Edge& edge = full.edges()[e];
    builder.add_edge(schema.entity_type(edge.source.entity_type).name,
                     ids.external_id(edge.source.entity_type, edge.source.local_id),
                     schema.relation_type(edge.relation).name,
                     schema.entity_type(edge.target.entity_type).name,
                     ids.external_id(edge.target.entity_type, edge.target.local_id));
  }

  EvalSplit split;
  split.relation = relation;
  split.train_graph = builder.build();
  const RelationType& rel = schema.relation_type(relation);
  split.candidate_count = split.train_graph.entity_count(rel.target_type);

  // Map held-out edges into the train graph's id space; entities that fell
  // out of the train graph cannot be evaluated.
  std::unordered_map<uint32_t, std::unordered_set<uint32_t>> heldout;
  const IdMap& train_ids = split.train_graph.id_map();
  for (size_t e = 0; e < full.edges().size(); ++e) {
    if (!held[e]) continue;
    const Edge& edge = full.edges()[e];
    const int64_t s = train_ids.lookup(
        rel.source_type, ids.external_id(edge.source.entity_type, edge.source.local_id));
    const int64_t t = train_ids.lookup(
        rel.target_type, ids.external_id(edge.target.entity_type, edge.target.local_id));
    if (s < 0 || t < 0) {
      ++split.dropped_heldout;
      continue;
    }
    heldout[uint32_t(s)].insert(uint32_t(t));
  }
  std::vector<uint32_t> qs;
  qs.reserve(heldout.size());
  for (const auto& [s, _] : heldout) qs.push_back(s);
  std::sort(qs.begin(), qs.end());
  for (uint32_t s : qs) {
    std::vector<uint32_t> ts(heldout[s].begin(), heldout[s].end());
    std::sort(ts.begin(), ts.end());
    split.heldout.emplace_back(s, std::move(ts));
  }
  return split;
}

LinkPredMetrics link_prediction_eval(const EvalSplit& split, const EmbeddingStore& store,
                                     const std::vector<size_t>& ks, bool filter_train) {
  store.validate_against(split.train_graph);
  const RelationType& rel = split.train_graph.schema().relation_type(split.relation);

  std::unordered_map<uint32_t, std::unordered_set<uint32_t>> train_positives;
  if (filter_train)
    for (const Edge& e : split.train_graph.edges())
      if (e.relation == split.relation)
        train_positives[e.source.local_id].insert(e.target.local_id);

  std::vector<QueryJudgment> queries;
  queries.reserve(split.heldout.size());
  const size_t n = split.candidate_count;
  const uint32_t dim = store.dim();
  std::vector<double> translated(dim);
  for (const auto& [source, positives] : split.heldout) {
    const auto s = store.entity_row(rel.source_type, source);
    const auto r = store.relation_row(split.relation);
    for (uint32_t c = 0; c < dim; ++c) translated[c] = double(s[c]) + double(r[c]);

    std::vector<std::pair<double, uint32_t>> scored;
    scored.reserve(n);
    const std::unordered_set<uint32_t>* filter =
        filter_train && train_positives.count(source) ? &train_positives.at(source) : nullptr;
    for (uint32_t t = 0; t < n; ++t) {
      if (filter != nullptr && filter->count(t)) continue;
      const auto tv = store.entity_row(rel.target_type, t);
      double f = 0.0;
      for (uint32_t c = 0; c < dim; ++c) f += translated[c] * double(tv[c]);
      scored.emplace_back(-f, t);  // ascending sort => score desc, id asc
    }
    std::sort(scored.begin(), scored.end());
    QueryJudgment q;
    q.ranked.reserve(scored.size());
    for (const auto& [negf, t] : scored) q.ranked.push_back(t);
    q.positives = positives;
    queries.push_back(std::move(q));
  }

  LinkPredMetrics metrics;
  metrics.queries = queries.size();
  for (size_t k : ks) metrics.recall.emplace_back(k, recall_at_k(queries, k).value);
  metrics.mrr = queries.empty() ? 0.0 : mrr(queries);
  return metrics;
}

}  // namespace hinembed
