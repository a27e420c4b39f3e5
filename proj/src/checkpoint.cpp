#include "hinembed/checkpoint.hpp"

#include <cstring>
#include <stdexcept>

#include "binary_io.hpp"

namespace hinembed {

void Checkpoint::add_table(const std::string& name, Matrix table) {
  if (has_table(name)) throw std::invalid_argument("duplicate table name: " + name);
  if (table.cols() != dim_)
    throw std::invalid_argument("table '" + name + "' has " + std::to_string(table.cols()) +
                                " columns, checkpoint dim is " + std::to_string(dim_));
  names_.push_back(name);
  tables_.push_back(std::move(table));
}

bool Checkpoint::has_table(const std::string& name) const {
  for (const auto& n : names_)
    if (n == name) return true;
  return false;
}

const Matrix& Checkpoint::table(const std::string& name) const {
  for (size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return tables_[i];
  throw std::runtime_error("no such table in checkpoint: " + name);
}

Matrix& Checkpoint::table(const std::string& name) {
  for (size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return tables_[i];
  throw std::runtime_error("no such table in checkpoint: " + name);
}

void Checkpoint::save(const std::string& path) const {
  std::string out;
  out.append(kMagic, 4);
  bio::put_u32(out, kVersion);
  bio::put_u32(out, dim_);
  bio::put_u32(out, uint32_t(names_.size()));
  for (size_t i = 0; i < names_.size(); ++i) {
    bio::put_str(out, names_[i]);
    bio::put_u64(out, tables_[i].rows());
  }
  for (const Matrix& t : tables_)
    for (size_t r = 0; r < t.rows(); ++r)
      for (float v : t.row(r)) bio::put_f32(out, v);
  bio::write_file(path, out);
}

Checkpoint Checkpoint::load(const std::string& path) {
  const std::string bytes = bio::read_file(path);
  bio::Reader r(bytes, path);

  const std::string magic = r.bytes(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    throw std::runtime_error("bad magic in checkpoint file: " + path);
  const uint32_t version = r.u32();
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) + ": " +
                             path);
  Checkpoint ckpt(r.u32());
  const uint32_t count = r.u32();
  std::vector<uint64_t> rows(count);
  std::vector<std::string> names(count);
  for (uint32_t i = 0; i < count; ++i) {
    names[i] = r.str();
    rows[i] = r.u64();
  }
  for (uint32_t i = 0; i < count; ++i) {
    Matrix m(rows[i], ckpt.dim());
    for (size_t row = 0; row < m.rows(); ++row)
      for (float& v : m.row(row)) v = r.f32();
    ckpt.add_table(names[i], std::move(m));
  }
  r.expect_end("checkpoint");
  return ckpt;
}

}  // namespace hinembed
