#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hinembed/embedding_store.hpp"
#include "hinembed/hin_graph.hpp"

namespace hinembed {

// One query's ranked candidate ids alongside its held-out positives.
struct QueryJudgment {
  std::vector<uint32_t> ranked;
  std::vector<uint32_t> positives;
};

struct RecallResult {
  double value = 0.0;
  size_t evaluated = 0;
  size_t skipped = 0;  // queries with zero positives, excluded from the mean
};

// Mean over queries of |top-k intersect positives| / |positives|.
RecallResult recall_at_k(const std::vector<QueryJudgment>& queries, size_t k);

// Mean over queries of 1/rank of the first positive; 0 when none retrieved.
double mrr(const std::vector<QueryJudgment>& queries);

struct RceInput {
  std::vector<int> labels;            // in {0, 1}
  std::vector<double> predictions;    // probabilities
  double prior = 0.5;                 // label mean of the evaluation set
};

RceInput make_rce_input(const std::vector<int>& labels, const std::vector<double>& predictions);

// 100 * (reference CE - CE) / reference CE, where the reference predictor is
// the constant prior. Predictions clip at 1e-9; `clipped` counts how often.
double rce(const RceInput& input, size_t* clipped = nullptr);

// Link-prediction split over one relation: a train graph plus per-source
// held-out positives, disjoint from the train edges.
struct EvalSplit {
  uint32_t relation = 0;
  HinGraph train_graph;
  // (source local id, distinct held-out target local ids), train-graph id space
  std::vector<std::pair<uint32_t, std::vector<uint32_t>>> heldout;
  size_t candidate_count = 0;
  size_t dropped_heldout = 0;  // held-out edges whose endpoint left the train graph
};

// Holds out ~fraction of each source's edges of `relation` (at least one kept
// for training). Deterministic per seed.
EvalSplit make_eval_split(const HinGraph& full, uint32_t relation, double holdout_fraction,
                          uint64_t seed);

struct LinkPredMetrics {
  std::vector<std::pair<size_t, double>> recall;  // (k, recall@k)
  double mrr = 0.0;
  size_t queries = 0;
};

// Scores every candidate of the relation's target type with the trained
// scorer, optionally filtering this source's train positives out of the
// ranking.
LinkPredMetrics link_prediction_eval(const EvalSplit& split, const EmbeddingStore& store,
                                     const std::vector<size_t>& ks, bool filter_train = false);

}  // namespace hinembed
