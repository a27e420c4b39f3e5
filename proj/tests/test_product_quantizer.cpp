#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "hinembed/product_quantizer.hpp"
#include "hinembed/rng.hpp"

using namespace hinembed;

namespace {

Matrix random_table(size_t n, size_t dim, uint64_t seed) {
  Matrix m(n, dim);
  Rng rng = make_rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t c = 0; c < dim; ++c) m.row(i)[c] = float(g(rng));
  return m;
}

}  // namespace

TEST_CASE("codebook shape: d=8 M=2 gives two 4-dim subquantizers") {
  const Matrix t = random_table(300, 8, 1);
  PQTrainConfig cfg;
  cfg.m = 2;
  const PQCodebook cb = train_codebook(t, cfg);
  CHECK(cb.m == 2);
  CHECK(cb.subdim == 4);
  CHECK(cb.ksub == 256);
  REQUIRE(cb.centroids.size() == 2);
  CHECK(cb.centroids[0].rows() == 256);
  CHECK(cb.centroids[0].cols() == 4);
}

TEST_CASE("M must divide the dimension") {
  const Matrix t = random_table(300, 10, 2);
  PQTrainConfig cfg;
  cfg.m = 4;
  CHECK_THROWS_AS(train_codebook(t, cfg), std::invalid_argument);
}

TEST_CASE("a table of 256 repeated distinct rows quantizes exactly") {
  Matrix base(256, 8);
  Rng rng = make_rng(3);
  for (size_t i = 0; i < 256; ++i)
    for (size_t c = 0; c < 8; ++c) base.row(i)[c] = float(rand_unit(rng) * 4.0 - 2.0);
  Matrix t(512, 8);
  for (size_t i = 0; i < 512; ++i)
    std::copy(base.row(i % 256).begin(), base.row(i % 256).end(), t.row(i).begin());

  PQTrainConfig cfg;
  cfg.m = 2;
  cfg.seed = 4;
  const PQCodebook cb = train_codebook(t, cfg);
  const CompressionReport rep = compression_report(t, cb);
  CHECK(rep.mse == doctest::Approx(0.0));
  CHECK(rep.max_row_l2 == doctest::Approx(0.0));
}

TEST_CASE("product codebook beats a single global 256-centroid quantizer") {
  const Matrix t = random_table(1500, 16, 5);
  PQTrainConfig pq_cfg;
  pq_cfg.m = 4;
  pq_cfg.seed = 6;
  PQTrainConfig global_cfg;
  global_cfg.m = 1;
  global_cfg.seed = 6;
  const double pq_mse = compression_report(t, train_codebook(t, pq_cfg)).mse;
  const double global_mse = compression_report(t, train_codebook(t, global_cfg)).mse;
  CHECK(pq_mse <= global_mse);
}

TEST_CASE("rows on centroid concatenations are fixed points") {
  const Matrix t = random_table(400, 8, 7);
  PQTrainConfig cfg;
  cfg.m = 2;
  const PQCodebook cb = train_codebook(t, cfg);

  Matrix probe(1, 8);
  for (uint32_t c = 0; c < 4; ++c) {
    probe.row(0)[c] = cb.centroids[0].row(3)[c];
    probe.row(0)[4 + c] = cb.centroids[1].row(7)[c];
  }
  const PQCodes codes = encode(probe, cb);
  CHECK(codes.codes[0] == 3);
  CHECK(codes.codes[1] == 7);
  const Matrix back = decode(codes, cb);
  for (uint32_t c = 0; c < 8; ++c) CHECK(back.row(0)[c] == probe.row(0)[c]);
}

TEST_CASE("encode-decode-encode is idempotent") {
  const Matrix t = random_table(500, 16, 8);
  PQTrainConfig cfg;
  cfg.m = 4;
  const PQCodebook cb = train_codebook(t, cfg);
  const PQCodes first = encode(t, cb);
  const PQCodes second = encode(decode(first, cb), cb);
  CHECK(first.codes == second.codes);
}

TEST_CASE("compression factor is d*4/M with the codebook reported separately") {
  const Matrix t = random_table(300, 64, 9);
  PQTrainConfig cfg;
  cfg.m = 8;
  cfg.kmeans_iters = 4;
  const PQCodebook cb = train_codebook(t, cfg);
  const CompressionReport rep = compression_report(t, cb);
  CHECK(rep.factor == doctest::Approx(32.0));
  CHECK(rep.codebook_bytes == size_t(8) * 256 * 8 * 4);
}

TEST_CASE("reconstruction error grows as M shrinks") {
  const Matrix t = random_table(1200, 32, 10);
  double prev = -1.0;
  for (uint32_t m : {16u, 8u, 4u, 2u}) {
    PQTrainConfig cfg;
    cfg.m = m;
    cfg.seed = 11;
    cfg.kmeans_iters = 8;
    const double mse = compression_report(t, train_codebook(t, cfg)).mse;
    if (prev >= 0.0) CHECK(mse > prev);
    prev = mse;
  }
}

TEST_CASE("ksub clamps to the row count for small tables") {
  const Matrix t = random_table(100, 8, 12);
  PQTrainConfig cfg;
  cfg.m = 2;
  const PQCodebook cb = train_codebook(t, cfg);
  CHECK(cb.ksub == 100);
  const CompressionReport rep = compression_report(t, cb);
  CHECK(rep.mse >= 0.0);
}

TEST_CASE("codebook and codes files round-trip") {
  const Matrix t = random_table(300, 8, 13);
  PQTrainConfig cfg;
  cfg.m = 2;
  cfg.kmeans_iters = 6;
  const PQCodebook cb = train_codebook(t, cfg);
  const PQCodes codes = encode(t, cb);

  const auto dir = std::filesystem::temp_directory_path();
  const std::string cb_path = (dir / "hinembed_test.pqc").string();
  const std::string codes_path = (dir / "hinembed_test.codes").string();
  cb.save(cb_path);
  codes.save(codes_path);

  const PQCodebook cb2 = PQCodebook::load(cb_path);
  const PQCodes codes2 = PQCodes::load(codes_path);
  CHECK(cb2.m == cb.m);
  CHECK(cb2.subdim == cb.subdim);
  CHECK(cb2.ksub == cb.ksub);
  for (uint32_t s = 0; s < cb.m; ++s) CHECK(cb2.centroids[s] == cb.centroids[s]);
  CHECK(codes2.codes == codes.codes);

  const Matrix a = decode(codes, cb);
  const Matrix b = decode(codes2, cb2);
  CHECK(a == b);
  std::remove(cb_path.c_str());
  std::remove(codes_path.c_str());
}
