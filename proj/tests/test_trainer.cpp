#include <doctest.h>

#include <array>
#include <cmath>
#include <map>

#include "hinembed/trainer.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace hinembed;

namespace {

HinGraph ring_graph(int n) {
  GraphBuilder b(fixtures::follows_schema());
  for (int i = 0; i < n; ++i)
    b.add_edge("user", "u" + std::to_string(i), "follows", "user",
               "u" + std::to_string((i + 1) % n));
  return b.build();
}

// Full-store view for unpartitioned access in tests.
struct FullView {
  Partitioning p;
  std::vector<Bucket> buckets;
  FullView(const HinGraph& g, EmbeddingStore& s)
      : p(partition(g, 1, 0)), buckets(bucketize(g, p)), view(s.slice_for_bucket(p, buckets[0])) {}
  BucketView view;
};

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-6});
}

}  // namespace

TEST_CASE("score matches hand arithmetic") {
  GraphBuilder b(fixtures::follows_schema());
  b.add_edge("user", "s", "follows", "user", "t");
  const HinGraph g = b.build();
  EmbeddingStore s = EmbeddingStore::init(g, 2, 0);

  s.mutable_entity_row(0, 0)[0] = 1.0f;
  s.mutable_entity_row(0, 0)[1] = 0.0f;
  s.mutable_entity_row(0, 1)[0] = 1.0f;
  s.mutable_entity_row(0, 1)[1] = 0.0f;
  s.mutable_relation_row(0)[0] = 0.0f;
  s.mutable_relation_row(0)[1] = 0.0f;
  CHECK(score(s, g.edges()[0]) == doctest::Approx(1.0));

  s.mutable_entity_row(0, 0)[0] = 1.0f;
  s.mutable_entity_row(0, 0)[1] = 2.0f;
  s.mutable_relation_row(0)[0] = 0.0f;
  s.mutable_relation_row(0)[1] = 1.0f;
  s.mutable_entity_row(0, 1)[0] = 2.0f;
  s.mutable_entity_row(0, 1)[1] = 0.0f;
  CHECK(score(s, g.edges()[0]) == doctest::Approx(2.0));

  CHECK_THROWS(score(s, Edge{{0, 7}, 0, {0, 1}}));  // out of bounds
}

TEST_CASE("score matches a 64-bit reference on random 64-dim vectors") {
  const HinGraph g = ring_graph(6);
  const EmbeddingStore s = EmbeddingStore::init(g, 64, 11, 1.0f);
  const oracles::DoubleStore ds = oracles::DoubleStore::from(s);
  for (const Edge& e : g.edges()) {
    const auto& sv = ds.ent[0][e.source.local_id];
    const auto& rv = ds.rel[0];
    const auto& tv = ds.ent[0][e.target.local_id];
    double expect = 0.0;
    for (int c = 0; c < 64; ++c) expect += (sv[c] + rv[c]) * tv[c];
    CHECK(rel_err(score(s, e), expect) < 1e-5);
  }
}

TEST_CASE("sample_negatives corrupts uniformly when negative_mix is 0") {
  GraphBuilder b(fixtures::follows_schema());
  b.add_edge("user", "A", "follows", "user", "B");
  b.add_edge("user", "B", "follows", "user", "C");
  const HinGraph g = b.build();

  TrainConfig cfg;
  cfg.num_negatives = 1;
  cfg.negative_mix = 0.0;
  cfg.corrupt_side = CorruptSide::TargetOnly;
  Rng rng = make_rng(1);
  std::map<uint32_t, int> seen;
  for (int i = 0; i < 4000; ++i) {
    const auto negs = sample_negatives(g.edges()[0], g, cfg, rng);
    REQUIRE(negs.size() == 1);
    CHECK(negs[0].target.local_id != 1);  // never the original B
    ++seen[negs[0].target.local_id];
  }
  CHECK(seen.size() == 2);  // A and C both reachable
  CHECK(seen[0] > 1600);    // roughly a fair coin
  CHECK(seen[2] > 1600);
}

TEST_CASE("degree-proportional corruption matches analytic probabilities within 1%") {
  // degrees: A=4 (A->B twice, B->A, A->C), B=3, C=1
  GraphBuilder b(fixtures::follows_schema());
  b.add_edge("user", "A", "follows", "user", "B");
  b.add_edge("user", "A", "follows", "user", "B");
  b.add_edge("user", "B", "follows", "user", "A");
  b.add_edge("user", "A", "follows", "user", "C");
  const HinGraph g = b.build();
  REQUIRE(g.degree({0, 0}) == 4);
  REQUIRE(g.degree({0, 2}) == 1);

  TrainConfig cfg;
  cfg.num_negatives = 1;
  cfg.negative_mix = 1.0;
  cfg.corrupt_side = CorruptSide::TargetOnly;
  Rng rng = make_rng(2);
  const int trials = 100000;
  int hits_a = 0, hits_c = 0;
  for (int i = 0; i < trials; ++i) {
    const auto negs = sample_negatives(g.edges()[0], g, cfg, rng);  // positive (A, follows, B)
    if (negs[0].target.local_id == 0) ++hits_a;
    if (negs[0].target.local_id == 2) ++hits_c;
  }
  CHECK(hits_a + hits_c == trials);  // B excluded, only {A, C} remain
  CHECK(std::fabs(double(hits_a) / trials - 0.8) < 0.01);
  CHECK(std::fabs(double(hits_c) / trials - 0.2) < 0.01);
}

TEST_CASE("sampled negatives are structurally valid") {
  GraphBuilder b(fixtures::user_item_schema());
  b.add_edge("user", "u0", "engages", "item", "i0");
  b.add_edge("user", "u1", "engages", "item", "i1");
  b.add_edge("user", "u2", "engages", "item", "i2");
  const HinGraph g = b.build();

  TrainConfig cfg;
  cfg.num_negatives = 5;
  Rng rng = make_rng(3);
  const Edge pos = g.edges()[0];
  const auto negs = sample_negatives(pos, g, cfg, rng);
  REQUIRE(negs.size() == 5);
  for (const Edge& n : negs) {
    CHECK(n.relation == pos.relation);
    CHECK(n.source.entity_type == 0);
    CHECK(n.target.entity_type == 1);
    const bool src_changed = !(n.source == pos.source);
    const bool tgt_changed = !(n.target == pos.target);
    CHECK(src_changed != tgt_changed);  // exactly one endpoint differs
    CHECK(n.source.local_id < g.entity_count(0));
    CHECK(n.target.local_id < g.entity_count(1));
  }
}

TEST_CASE("corruption with a single candidate entity fails") {
  GraphBuilder b(fixtures::user_item_schema());
  b.add_edge("user", "u0", "engages", "item", "i0");
  const HinGraph g = b.build();
  TrainConfig cfg;
  cfg.num_negatives = 1;
  cfg.corrupt_side = CorruptSide::TargetOnly;  // only one item exists
  Rng rng = make_rng(4);
  CHECK_THROWS_WITH_AS(sample_negatives(g.edges()[0], g, cfg, rng),
                       doctest::Contains("only one"), std::runtime_error);
}

TEST_CASE("loss at all-zero scores is (1 + n_neg) * ln 2 per positive") {
  const HinGraph g = ring_graph(4);
  EmbeddingStore s = EmbeddingStore::init(g, 4, 1);
  // zero all rows so every score is exactly 0
  for (uint32_t i = 0; i < 4; ++i)
    for (float& v : s.mutable_entity_row(0, i)) v = 0.0f;

  FullView fv(g, s);
  TripletBatch batch;
  batch.positives = {g.edges()[0]};
  Edge neg = g.edges()[0];
  neg.target.local_id = 2;
  batch.negatives = {{neg}};
  const BatchResult res = batch_loss_and_grads(fv.view, batch);
  CHECK(res.loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences") {
  GraphBuilder b(fixtures::user_item_schema());
  b.add_edge("user", "u0", "follows", "user", "u1");
  b.add_edge("user", "u1", "follows", "user", "u2");
  b.add_edge("user", "u0", "engages", "item", "i0");
  b.add_edge("user", "u2", "engages", "item", "i1");
  b.add_edge("user", "u1", "engages", "item", "i2");
  const HinGraph g = b.build();

  TrainConfig cfg;
  cfg.num_negatives = 3;
  cfg.negative_mix = 0.5;

  for (uint64_t seed = 0; seed < 8; ++seed) {
    EmbeddingStore s = EmbeddingStore::init(g, 6, seed, 0.8f);
    // give relations non-zero values so their gradients are exercised
    Rng vrng = make_rng(seed + 100);
    for (uint32_t r = 0; r < 2; ++r)
      for (float& v : s.mutable_relation_row(r)) v = float(rand_unit(vrng) - 0.5);

    EmbeddingStore prev = EmbeddingStore::init(g, 6, seed + 50, 0.8f);
    AnchorTable anchor;
    anchor.alpha = 0.3;
    anchor.prev = &prev;
    anchor.type_map = {0, 1};
    anchor.row_map.resize(2);
    for (uint32_t t = 0; t < 2; ++t) {
      anchor.row_map[t].resize(g.entity_count(t));
      for (size_t i = 0; i < g.entity_count(t); ++i) anchor.row_map[t][i] = int64_t(i);
    }
    // leave one row unanchored to exercise the partial-match path
    anchor.row_map[0][1] = -1;

    Rng rng = make_rng(seed);
    TripletBatch batch;
    for (const Edge& e : g.edges()) {
      batch.positives.push_back(e);
      batch.negatives.push_back(sample_negatives(e, g, cfg, rng));
    }

    const std::array<const AnchorTable*, 2> variants = {nullptr, &anchor};
    for (const AnchorTable* a : variants) {
      const oracles::DoubleStore ds = oracles::DoubleStore::from(s);
      FullView fv(g, s);
      const BatchResult res = batch_loss_and_grads(fv.view, batch, a);
      CHECK(rel_err(res.loss, oracles::reference_loss(ds, batch, a)) < 1e-9);

      for (const auto& row : res.grads.rows()) {
        for (size_t c = 0; c < row.grad.size(); ++c) {
          const double fd =
              row.is_relation
                  ? oracles::fd_relation_grad(ds, batch, a, row.row, int(c), 1e-4)
                  : oracles::fd_entity_grad(ds, batch, a, row.type, row.row, int(c), 1e-4);
          CHECK(rel_err(row.grad[c], fd) < 1e-4);
        }
      }
    }
  }
}

TEST_CASE("relation gradient is the sum of per-edge contributions") {
  const HinGraph g = ring_graph(5);
  EmbeddingStore s = EmbeddingStore::init(g, 4, 9, 0.5f);
  FullView fv(g, s);

  TripletBatch combined;
  std::vector<double> expected(4, 0.0);
  for (int k = 0; k < 3; ++k) {
    TripletBatch single;
    single.positives = {g.edges()[k]};
    single.negatives = {{}};
    const BatchResult one = batch_loss_and_grads(fv.view, single);
    const auto* rg = one.grads.find_relation(0);
    REQUIRE(rg != nullptr);
    for (size_t c = 0; c < 4; ++c) expected[c] += (*rg)[c];
    combined.positives.push_back(g.edges()[k]);
    combined.negatives.push_back({});
  }
  const BatchResult all = batch_loss_and_grads(fv.view, combined);
  const auto* rg = all.grads.find_relation(0);
  REQUIRE(rg != nullptr);
  for (size_t c = 0; c < 4; ++c) CHECK((*rg)[c] == doctest::Approx(expected[c]).epsilon(1e-12));
}

TEST_CASE("adagrad step follows the closed form") {
  const HinGraph g = ring_graph(4);
  EmbeddingStore s = EmbeddingStore::init(g, 2, 1);
  const float theta0 = s.entity_row(0, 0)[0];
  FullView fv(g, s);

  SUBCASE("zero gradient leaves the row untouched") {
    SparseGrads grads;
    grads.entity(0, 0, 2);  // all-zero vector
    adagrad_step(fv.view, grads, 0.1);
    CHECK(fv.view.entity_row(0, 0)[0] == theta0);
    CHECK(fv.view.entity_accum_row(0, 0)[0] == 0.0f);
  }

  SUBCASE("first step with g=3 moves by about -lr") {
    SparseGrads grads;
    grads.entity(0, 0, 2)[0] = 3.0;
    adagrad_step(fv.view, grads, 0.1);
    CHECK(fv.view.entity_row(0, 0)[0] ==
          doctest::Approx(theta0 - 0.1 * 3.0 / (3.0 + 1e-10)).epsilon(1e-6));
    CHECK(fv.view.entity_accum_row(0, 0)[0] == doctest::Approx(9.0f));
  }

  SUBCASE("second unit-gradient step has magnitude lr/sqrt(2)") {
    SparseGrads grads;
    grads.entity(0, 0, 2)[0] = 1.0;
    adagrad_step(fv.view, grads, 0.1);
    const float after_first = fv.view.entity_row(0, 0)[0];
    adagrad_step(fv.view, grads, 0.1);
    const double step2 = double(after_first) - double(fv.view.entity_row(0, 0)[0]);
    CHECK(step2 == doctest::Approx(0.1 / std::sqrt(2.0)).epsilon(1e-6));
  }

  SUBCASE("relation rows update too") {
    SparseGrads grads;
    grads.relation(0, 2)[1] = 2.0;
    adagrad_step(fv.view, grads, 0.1);
    CHECK(fv.view.relation_accum_row(0)[1] == doctest::Approx(4.0f));
    CHECK(fv.view.relation_row(0)[1] != 0.0f);
  }
}

TEST_CASE("training reduces the mean epoch loss on a tiny graph") {
  GraphBuilder b(fixtures::follows_schema());
  // 6 nodes, 10 edges
  const int edges[10][2] = {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5},
                            {5, 3}, {0, 3}, {1, 4}, {2, 5}, {0, 4}};
  for (auto& e : edges)
    b.add_edge("user", "u" + std::to_string(e[0]), "follows", "user",
               "u" + std::to_string(e[1]));
  const HinGraph g = b.build();

  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.num_negatives = 2;
  cfg.batch_size = 4;
  cfg.learning_rate = 1.0;  // a dense 10-edge graph needs aggressive fitting
  cfg.seed = 5;
  EmbeddingStore s = EmbeddingStore::init(g, 8, 5);
  const Partitioning p = partition(g, 1, 5);
  const TrainReport report = train(g, p, s, cfg);

  const double first = report.epoch_mean_loss(0);
  const double last = report.epoch_mean_loss(49);
  CHECK(last <= 0.5 * first);
  s.validate_finite();

  // accumulators ended non-negative and started at zero, so they never decreased
  for (uint32_t i = 0; i < 6; ++i)
    for (float v : s.entity_accum_row(0, i)) CHECK(v >= 0.0f);
}

TEST_CASE("epochs=0 leaves the store unchanged with an empty report") {
  const HinGraph g = ring_graph(6);
  EmbeddingStore s = EmbeddingStore::init(g, 4, 2);
  const EmbeddingStore before = s;
  TrainConfig cfg;
  cfg.epochs = 0;
  const Partitioning p = partition(g, 1, 2);
  const TrainReport report = train(g, p, s, cfg);
  CHECK(report.rows.empty());
  CHECK(s.equal_contents(before));
}

TEST_CASE("training is bitwise deterministic in single-worker mode") {
  const HinGraph g = ring_graph(20);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.partitions = 2;
  cfg.seed = 77;
  const Partitioning p = partition(g, 2, cfg.seed);

  EmbeddingStore a = EmbeddingStore::init(g, 8, cfg.seed);
  EmbeddingStore b = a;
  const TrainReport ra = train(g, p, a, cfg);
  const TrainReport rb = train(g, p, b, cfg);
  CHECK(a.equal_contents(b));
  REQUIRE(ra.rows.size() == rb.rows.size());
  for (size_t i = 0; i < ra.rows.size(); ++i)
    CHECK(ra.rows[i].mean_loss == rb.rows[i].mean_loss);
}

TEST_CASE("training one bucket only touches that bucket's partitions") {
  const HinGraph g = ring_graph(30);
  const Partitioning p = partition(g, 3, 4);
  const auto buckets = bucketize(g, p);
  EmbeddingStore s = EmbeddingStore::init(g, 4, 4);
  const EmbeddingStore before = s;

  // pick a bucket with edges and partitions {0,1}
  const Bucket& bucket = buckets[0 * 3 + 1];
  TrainConfig cfg;
  cfg.num_negatives = 2;
  if (!bucket.edge_indices.empty()) {
    BucketView view = s.slice_for_bucket(p, bucket);
    NegativeSampler sampler(g, cfg, p, 0, 1);
    Rng rng = make_rng(8);
    TripletBatch batch;
    for (size_t e : bucket.edge_indices) {
      batch.positives.push_back(g.edges()[e]);
      batch.negatives.push_back(sampler.sample(g.edges()[e], rng));
    }
    const BatchResult res = batch_loss_and_grads(view, batch);
    adagrad_step(view, res.grads, 0.1);
  }

  for (uint32_t i = 0; i < 30; ++i) {
    const bool in_bucket = p.assignment[0][i] == 0 || p.assignment[0][i] == 1;
    const auto now = s.entity_row(0, i);
    const auto old = before.entity_row(0, i);
    if (!in_bucket)
      for (size_t c = 0; c < now.size(); ++c) CHECK(now[c] == old[c]);
  }
}

TEST_CASE("multi-worker training converges and respects leases") {
  const HinGraph g = ring_graph(60);
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.partitions = 3;
  cfg.workers = 2;
  cfg.seed = 13;
  const Partitioning p = partition(g, 3, cfg.seed);
  EmbeddingStore s = EmbeddingStore::init(g, 8, cfg.seed);
  const TrainReport report = train(g, p, s, cfg);
  CHECK(report.rows.size() == 8 * 9);
  CHECK(report.epoch_mean_loss(7) < report.epoch_mean_loss(0));
  s.validate_finite();
}

TEST_CASE("co-embedding policy pairs each high relation with all low relations") {
  Schema schema;
  schema.add_entity_type("user");
  schema.add_entity_type("ad");
  schema.add_relation_type("follow", "user", "user", Coverage::High);
  schema.add_relation_type("engage", "user", "user", Coverage::High);
  schema.add_relation_type("ad_click", "user", "ad", Coverage::Low);
  GraphBuilder b(schema);
  b.add_edge("user", "a", "follow", "user", "b");
  b.add_edge("user", "b", "engage", "user", "c");
  b.add_edge("user", "a", "ad_click", "ad", "x");
  const HinGraph full = b.build();

  const auto graphs = build_coembedding_graphs(full);
  REQUIRE(graphs.size() == 2);
  CHECK(graphs[0].high_relation == "follow");
  CHECK(graphs[1].high_relation == "engage");
  for (const auto& cg : graphs) {
    CHECK(cg.graph.schema().num_relation_types() == 2);
    CHECK(cg.graph.schema().relation_type_index("ad_click") >= 0);
    CHECK((cg.graph.schema().relation_type_index("follow") >= 0) !=
          (cg.graph.schema().relation_type_index("engage") >= 0));
    CHECK(cg.graph.edges().size() == 2);
  }
}

TEST_CASE("co-embedding with one high and no low keeps just the high relation") {
  GraphBuilder b(fixtures::follows_schema());
  b.add_edge("user", "a", "follows", "user", "b");
  const HinGraph full = b.build();
  const auto graphs = build_coembedding_graphs(full);
  REQUIRE(graphs.size() == 1);
  CHECK(graphs[0].graph.schema().num_relation_types() == 1);
}

TEST_CASE("co-embedding never mixes two high relations") {
  Schema schema;
  schema.add_entity_type("user");
  schema.add_relation_type("h1", "user", "user", Coverage::High);
  schema.add_relation_type("h2", "user", "user", Coverage::High);
  schema.add_relation_type("l1", "user", "user", Coverage::Low);
  schema.add_relation_type("l2", "user", "user", Coverage::Low);
  GraphBuilder b(schema);
  b.add_edge("user", "a", "h1", "user", "b");
  b.add_edge("user", "a", "h2", "user", "b");
  b.add_edge("user", "a", "l1", "user", "c");
  b.add_edge("user", "c", "l2", "user", "a");
  const HinGraph full = b.build();
  const auto graphs = build_coembedding_graphs(full);
  REQUIRE(graphs.size() == 2);
  for (const auto& cg : graphs) {
    CHECK(cg.graph.schema().num_relation_types() == 3);
    const bool has_h1 = cg.graph.schema().relation_type_index("h1") >= 0;
    const bool has_h2 = cg.graph.schema().relation_type_index("h2") >= 0;
    CHECK(has_h1 != has_h2);
  }
}

TEST_CASE("co-embedding rejects schemas without a high-coverage anchor") {
  Schema schema;
  schema.add_entity_type("user");
  schema.add_relation_type("l1", "user", "user", Coverage::Low);
  GraphBuilder b(schema);
  b.add_edge("user", "a", "l1", "user", "b");
  const HinGraph full = b.build();
  CHECK_THROWS_AS(build_coembedding_graphs(full), std::runtime_error);
}

TEST_CASE("co-embedding warns about relations with no edges") {
  Schema schema;
  schema.add_entity_type("user");
  schema.add_relation_type("follow", "user", "user", Coverage::High);
  schema.add_relation_type("unused", "user", "user", Coverage::Low);
  GraphBuilder b(schema);
  b.add_edge("user", "a", "follow", "user", "b");
  const HinGraph full = b.build();
  std::vector<std::string> warnings;
  const auto graphs = build_coembedding_graphs(full, &warnings);
  REQUIRE(graphs.size() == 1);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("unused") != std::string::npos);
}
