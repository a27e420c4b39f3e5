#include "hinembed/product_quantizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "binary_io.hpp"
#include "hinembed/kmeans.hpp"
#include "hinembed/rng.hpp"

namespace hinembed {

namespace {

Matrix subspace(const Matrix& table, uint32_t subdim, uint32_t sub) {
  Matrix out(table.rows(), subdim);
  for (size_t r = 0; r < table.rows(); ++r) {
    const auto row = table.row(r);
    auto dst = out.row(r);
    for (uint32_t c = 0; c < subdim; ++c) dst[c] = row[size_t(sub) * subdim + c];
  }
  return out;
}

uint8_t nearest_code(const Matrix& centroids, std::span<const float> v) {
  uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_l2(centroids.row(c), v);
    if (d < best_d) {
      best_d = d;
      best = uint32_t(c);
    }
  }
  return uint8_t(best);
}

}  // namespace

PQCodebook train_codebook(const Matrix& table, const PQTrainConfig& config) {
  if (table.empty()) throw std::invalid_argument("cannot train a codebook on an empty table");
  if (config.m == 0 || table.cols() % config.m != 0)
    throw std::invalid_argument("M must divide the embedding dim (dim " +
                                std::to_string(table.cols()) + ", M " +
                                std::to_string(config.m) + ")");
  PQCodebook cb;
  cb.m = config.m;
  cb.subdim = uint32_t(table.cols() / config.m);
  cb.ksub = uint32_t(std::min<size_t>(256, table.rows()));
  cb.centroids.reserve(config.m);
  for (uint32_t sub = 0; sub < config.m; ++sub) {
    KMeansConfig kc;
    kc.k = cb.ksub;
    kc.seed = derive_seed(config.seed, 0x70712121u, sub);
    kc.max_iters = config.kmeans_iters;
    cb.centroids.push_back(kmeans(subspace(table, cb.subdim, sub), kc).centroids);
  }
  return cb;
}

PQCodes encode(const Matrix& table, const PQCodebook& codebook) {
  if (table.cols() != codebook.dim())
    throw std::invalid_argument("table dim does not match codebook");
  PQCodes codes;
  codes.m = codebook.m;
  codes.rows = table.rows();
  codes.codes.resize(table.rows() * codebook.m);
  for (size_t r = 0; r < table.rows(); ++r) {
    const auto row = table.row(r);
    for (uint32_t sub = 0; sub < codebook.m; ++sub) {
      const std::span<const float> v(row.data() + size_t(sub) * codebook.subdim,
                                     codebook.subdim);
      codes.codes[r * codebook.m + sub] = nearest_code(codebook.centroids[sub], v);
    }
  }
  return codes;
}

Matrix decode(const PQCodes& codes, const PQCodebook& codebook) {
  if (codes.m != codebook.m) throw std::invalid_argument("codes do not match codebook");
  Matrix out(codes.rows, codebook.dim());
  for (size_t r = 0; r < codes.rows; ++r) {
    auto row = out.row(r);
    for (uint32_t sub = 0; sub < codebook.m; ++sub) {
      const uint8_t code = codes.codes[r * codebook.m + sub];
      if (code >= codebook.ksub)
        throw std::runtime_error("code " + std::to_string(code) +
                                 " exceeds codebook centroid count");
      const auto c = codebook.centroids[sub].row(code);
      for (uint32_t d = 0; d < codebook.subdim; ++d)
        row[size_t(sub) * codebook.subdim + d] = c[d];
    }
  }
  return out;
}

CompressionReport compression_report(const Matrix& table, const PQCodebook& codebook) {
  CompressionReport rep;
  rep.factor = double(table.cols() * sizeof(float)) / double(codebook.m);
  rep.codebook_bytes =
      size_t(codebook.m) * codebook.ksub * codebook.subdim * sizeof(float);
  const PQCodes codes = encode(table, codebook);
  const Matrix decoded = decode(codes, codebook);
  double total = 0.0;
  for (size_t r = 0; r < table.rows(); ++r) {
    const double err = squared_l2(table.row(r), decoded.row(r));
    total += err;
    rep.max_row_l2 = std::max(rep.max_row_l2, std::sqrt(err));
  }
  rep.mse = total / (double(table.rows()) * double(table.cols()));
  return rep;
}

void PQCodebook::save(const std::string& path) const {
  Checkpoint ckpt(subdim);
  for (uint32_t sub = 0; sub < m; ++sub)
    ckpt.add_table("pq_centroids_" + std::to_string(sub), centroids[sub]);
  ckpt.save(path);
}

PQCodebook PQCodebook::load(const std::string& path) {
  const Checkpoint ckpt = Checkpoint::load(path);
  PQCodebook cb;
  cb.m = uint32_t(ckpt.num_tables());
  if (cb.m == 0) throw std::runtime_error("codebook file has no tables: " + path);
  cb.subdim = ckpt.dim();
  for (uint32_t sub = 0; sub < cb.m; ++sub) {
    const std::string name = "pq_centroids_" + std::to_string(sub);
    if (!ckpt.has_table(name))
      throw std::runtime_error("codebook file missing table " + name + ": " + path);
    cb.centroids.push_back(ckpt.table(name));
  }
  cb.ksub = uint32_t(cb.centroids[0].rows());
  for (const Matrix& c : cb.centroids)
    if (c.rows() != cb.ksub)
      throw std::runtime_error("codebook subquantizers disagree on centroid count: " + path);
  if (cb.ksub == 0 || cb.ksub > 256)
    throw std::runtime_error("codebook centroid count out of range: " + path);
  return cb;
}

void PQCodes::save(const std::string& path) const {
  std::string out;
  bio::put_u32(out, m);
  bio::put_u64(out, rows);
  out.append(reinterpret_cast<const char*>(codes.data()), codes.size());
  bio::write_file(path, out);
}

PQCodes PQCodes::load(const std::string& path) {
  const std::string bytes = bio::read_file(path);
  bio::Reader r(bytes, path);
  PQCodes codes;
  codes.m = r.u32();
  codes.rows = r.u64();
  if (codes.m == 0) throw std::runtime_error("codes file has M = 0: " + path);
  const std::string payload = r.bytes(size_t(codes.rows) * codes.m);
  codes.codes.assign(payload.begin(), payload.end());
  r.expect_end("codes");
  return codes;
}

}  // namespace hinembed
