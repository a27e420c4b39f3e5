#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "hinembed/ann_index.hpp"
#include "hinembed/rng.hpp"
#include "support/oracles.hpp"

using namespace hinembed;

namespace {

Matrix random_vectors(size_t n, size_t dim, uint64_t seed, bool normalize = false) {
  Matrix m(n, dim);
  Rng rng = make_rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (size_t c = 0; c < dim; ++c) {
      m.row(i)[c] = float(g(rng));
      norm += double(m.row(i)[c]) * double(m.row(i)[c]);
    }
    if (normalize) {
      norm = std::sqrt(norm);
      for (size_t c = 0; c < dim; ++c) m.row(i)[c] = float(double(m.row(i)[c]) / norm);
    }
  }
  return m;
}

AnnParams exact_params() {
  AnnParams p;
  p.mode = AnnParams::Mode::Exact;
  return p;
}

}  // namespace

TEST_CASE("exact query ranks a normalized indexed vector first against itself") {
  const Matrix m = random_vectors(100, 16, 1, /*normalize=*/true);
  const AnnIndex idx = AnnIndex::build(m, exact_params());
  for (uint32_t probe : {0u, 17u, 99u}) {
    const CandidateList res = idx.query_topk(m.row(probe), 5);
    REQUIRE(res.items.size() == 5);
    CHECK(res.items[0].id == probe);
  }
}

TEST_CASE("k larger than the index returns everything in descending order") {
  const Matrix m = random_vectors(7, 4, 2);
  const AnnIndex idx = AnnIndex::build(m, exact_params());
  const CandidateList res = idx.query_topk(m.row(0), 50);
  REQUIRE(res.items.size() == 7);
  for (size_t i = 1; i < res.items.size(); ++i)
    CHECK(res.items[i - 1].score >= res.items[i].score);
}

TEST_CASE("exact mode equals the 64-bit brute-force ranking") {
  const Matrix m = random_vectors(300, 12, 3);
  const Matrix queries = random_vectors(40, 12, 4);
  const AnnIndex idx = AnnIndex::build(m, exact_params());
  for (size_t q = 0; q < queries.rows(); ++q) {
    const auto expect = oracles::brute_force_topk(m, queries.row(q), 10);
    const CandidateList got = idx.query_topk(queries.row(q), 10);
    REQUIRE(got.items.size() == expect.size());
    for (size_t i = 0; i < expect.size(); ++i) CHECK(got.items[i].id == expect[i]);
  }
}

TEST_CASE("duplicate vectors under distinct ids are both retrievable") {
  Matrix m(4, 2);
  m.row(0)[0] = 1.0f;
  m.row(1)[0] = 1.0f;  // duplicate of row 0
  m.row(2)[0] = -1.0f;
  m.row(3)[1] = 1.0f;
  const AnnIndex idx = AnnIndex::build(m, exact_params());
  float q[2] = {1.0f, 0.0f};
  const CandidateList res = idx.query_topk(std::span<const float>(q, 2), 2);
  REQUIRE(res.items.size() == 2);
  CHECK(res.items[0].id == 0);  // tie broken by lower id
  CHECK(res.items[1].id == 1);
}

TEST_CASE("query_topk validates its inputs") {
  const Matrix m = random_vectors(10, 4, 5);
  const AnnIndex idx = AnnIndex::build(m, exact_params());
  CHECK_THROWS_AS(idx.query_topk(m.row(0), 0), std::invalid_argument);
  float q[2] = {0, 0};
  CHECK_THROWS_AS(idx.query_topk(std::span<const float>(q, 2), 3), std::invalid_argument);
  CHECK_THROWS_AS(AnnIndex::build(Matrix(), exact_params()), std::invalid_argument);
}

namespace {

Matrix clustered_vectors(size_t n, size_t dim, size_t ncenters, double sigma, uint64_t seed) {
  Matrix m(n, dim);
  Rng rng = make_rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix centers(ncenters, dim);
  for (size_t i = 0; i < ncenters; ++i)
    for (size_t c = 0; c < dim; ++c) centers.row(i)[c] = float(g(rng));
  for (size_t i = 0; i < n; ++i) {
    const size_t which = rand_index(rng, ncenters);
    for (size_t c = 0; c < dim; ++c)
      m.row(i)[c] = float(double(centers.row(which)[c]) + sigma * g(rng));
  }
  return m;
}

double ivf_recall_at_10(const Matrix& data, const Matrix& queries, const AnnParams& params) {
  const AnnIndex idx = AnnIndex::build(data, params);
  double hits = 0.0;
  for (size_t q = 0; q < queries.rows(); ++q) {
    const auto expect = oracles::brute_force_topk(data, queries.row(q), 10);
    const CandidateList got = idx.query_topk(queries.row(q), 10);
    std::set<uint32_t> got_ids;
    for (const auto& c : got.items) got_ids.insert(c.id);
    for (uint32_t e : expect) hits += got_ids.count(e) ? 1.0 : 0.0;
  }
  return hits / (10.0 * double(queries.rows()));
}

}  // namespace

TEST_CASE("IVF defaults reach high recall on clustered embedding-like tables") {
  const Matrix m = clustered_vectors(4000, 32, 40, 0.4, 6);
  const Matrix queries = clustered_vectors(150, 32, 40, 0.4, 6);
  CHECK(ivf_recall_at_10(m, queries, AnnParams{}) >= 0.9);
}

TEST_CASE("IVF hits the recall target on unstructured vectors with wider probing") {
  // structureless inputs spread true neighbors across all cells, so the
  // recall-oriented parameter choice probes most of them
  const Matrix m = random_vectors(3000, 32, 6);
  const Matrix queries = random_vectors(100, 32, 7);
  AnnParams params;
  params.nprobe = 44;
  CHECK(ivf_recall_at_10(m, queries, params) >= 0.9);
}

TEST_CASE("multi_query allocates candidates by largest remainder") {
  // two far-apart item clusters so the per-component candidates never overlap
  Matrix m(40, 4);
  Rng rng = make_rng(8);
  for (size_t i = 0; i < 40; ++i) {
    const bool left = i < 20;
    m.row(i)[0] = left ? 10.0f + float(rand_unit(rng)) : -10.0f - float(rand_unit(rng));
    m.row(i)[1] = float(rand_unit(rng));
  }
  const AnnIndex idx = AnnIndex::build(m, exact_params());

  MixtureRepresentation mix;
  mix.components.push_back({0, 0.75, {20.0f, 0.0f, 0.0f, 0.0f}});
  mix.components.push_back({1, 0.25, {-20.0f, 0.0f, 0.0f, 0.0f}});
  const CandidateList res = multi_query(idx, mix, 8);
  REQUIRE(res.items.size() == 8);
  int from0 = 0, from1 = 0;
  for (const auto& c : res.items) {
    if (c.component == 0) ++from0;
    if (c.component == 1) ++from1;
  }
  CHECK(from0 == 6);
  CHECK(from1 == 2);
}

TEST_CASE("single-component multi_query degenerates to query_topk") {
  const Matrix m = random_vectors(60, 8, 9);
  const AnnIndex idx = AnnIndex::build(m, exact_params());
  MixtureRepresentation mix;
  const Matrix q = random_vectors(1, 8, 10);
  mix.components.push_back({0, 1.0, std::vector<float>(q.row(0).begin(), q.row(0).end())});
  const CandidateList direct = idx.query_topk(q.row(0), 12);
  const CandidateList merged = multi_query(idx, mix, 12);
  REQUIRE(merged.items.size() == direct.items.size());
  for (size_t i = 0; i < merged.items.size(); ++i) {
    CHECK(merged.items[i].id == direct.items[i].id);
    CHECK(merged.items[i].score == direct.items[i].score);
  }
}

TEST_CASE("overlapping component neighborhoods merge without duplicates") {
  const Matrix m = random_vectors(50, 4, 11);
  const AnnIndex idx = AnnIndex::build(m, exact_params());
  MixtureRepresentation mix;
  // nearly identical components: candidate sets overlap almost entirely
  std::vector<float> v(m.row(3).begin(), m.row(3).end());
  std::vector<float> w = v;
  w[0] += 0.01f;
  mix.components.push_back({0, 0.5, v});
  mix.components.push_back({1, 0.5, w});
  const CandidateList res = multi_query(idx, mix, 10);
  CHECK(res.items.size() <= 10);
  std::set<uint32_t> ids;
  for (const auto& c : res.items) ids.insert(c.id);
  CHECK(ids.size() == res.items.size());

  CHECK_THROWS_AS(multi_query(idx, MixtureRepresentation{}, 10), std::invalid_argument);
  CHECK_THROWS_AS(multi_query(idx, mix, 1), std::invalid_argument);  // k < components
}

TEST_CASE("proportional allocations sum to k and stay within 1 of their share") {
  // two far-apart clusters so per-component candidates never collide
  Matrix m(60, 4);
  for (size_t i = 0; i < 60; ++i) m.row(i)[0] = i < 30 ? 50.0f + float(i) : -50.0f - float(i);
  const AnnIndex idx = AnnIndex::build(m, exact_params());
  Rng rng = make_rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const double w = 0.05 + 0.9 * rand_unit(rng);
    MixtureRepresentation mix;
    mix.components.push_back({0, w, {100.0f, 0.0f, 0.0f, 0.0f}});
    mix.components.push_back({1, 1.0 - w, {-100.0f, 0.0f, 0.0f, 0.0f}});
    const size_t k = 2 + rand_index(rng, 15);
    const CandidateList res = multi_query(idx, mix, k);
    size_t from0 = 0, from1 = 0;
    for (const auto& c : res.items) (c.component == 0 ? from0 : from1) += 1;
    CHECK(from0 + from1 == k);
    CHECK(std::fabs(double(from0) - w * double(k)) <= 1.0);
    CHECK(std::fabs(double(from1) - (1.0 - w) * double(k)) <= 1.0);
  }
}

TEST_CASE("multi-querying covers both interests where a midpoint query cannot") {
  // two separated item clusters; a user engaging both sits in the middle
  const int per = 50;
  Matrix items(2 * per, 8);
  Rng rng = make_rng(12);
  for (int i = 0; i < 2 * per; ++i) {
    const double base = i < per ? 8.0 : -8.0;
    items.row(size_t(i))[0] = float(base + rand_unit(rng));
    items.row(size_t(i))[1] = float(rand_unit(rng) * 0.1);
  }
  const AnnIndex idx = AnnIndex::build(items, exact_params());

  // unimodal: the user's single embedding points at the midpoint direction
  std::vector<float> mid(8, 0.0f);
  mid[0] = 0.3f;
  mid[1] = 1.0f;
  const CandidateList uni = idx.query_topk(std::span<const float>(mid.data(), 8), 10);
  int uni_left = 0;
  for (const auto& c : uni.items)
    if (c.id < uint32_t(per)) ++uni_left;
  const int uni_majority = std::max(uni_left, int(uni.items.size()) - uni_left);
  CHECK(uni_majority >= int(0.9 * double(uni.items.size())));

  MixtureRepresentation mix;
  std::vector<float> left(8, 0.0f), right(8, 0.0f);
  left[0] = 8.5f;
  right[0] = -8.5f;
  mix.components.push_back({0, 0.5, left});
  mix.components.push_back({1, 0.5, right});
  const CandidateList multi = multi_query(idx, mix, 10);
  int multi_left = 0;
  for (const auto& c : multi.items)
    if (c.id < uint32_t(per)) ++multi_left;
  CHECK(multi_left > 0);
  CHECK(multi_left < int(multi.items.size()));
}

TEST_CASE("index save/load round-trip preserves results") {
  const Matrix m = random_vectors(500, 16, 13);
  std::vector<std::string> ids;
  for (size_t i = 0; i < m.rows(); ++i) ids.push_back("v" + std::to_string(i));
  AnnParams params;
  params.nlist = 16;
  params.nprobe = 4;
  const AnnIndex idx = AnnIndex::build(m, params, "item", ids);

  const std::string path =
      (std::filesystem::temp_directory_path() / "hinembed_test.idx").string();
  idx.save(path);
  const AnnIndex loaded = AnnIndex::load(path);
  CHECK(loaded.entity_type() == "item");
  CHECK(loaded.size() == 500);
  CHECK(loaded.external_id(7) == "v7");
  CHECK(loaded.row_of("v499") == 499);

  const Matrix q = random_vectors(5, 16, 14);
  for (size_t i = 0; i < q.rows(); ++i) {
    const CandidateList a = idx.query_topk(q.row(i), 10);
    const CandidateList b = loaded.query_topk(q.row(i), 10);
    REQUIRE(a.items.size() == b.items.size());
    for (size_t j = 0; j < a.items.size(); ++j) {
      CHECK(a.items[j].id == b.items[j].id);
      CHECK(a.items[j].score == b.items[j].score);
    }
  }
  std::remove(path.c_str());
}
