#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hinembed/matrix.hpp"

namespace hinembed {

// Binary container of named float32 tables sharing one row width.
//
// Layout (all integers little-endian):
//   magic "HINE" | u32 version | u32 dim | u32 table_count
//   per table: u16 name_len | name bytes | u64 row_count
//   payloads in descriptor order, row-major f32
//
// The byte layout is frozen by a golden-file test.
class Checkpoint {
 public:
  static constexpr char kMagic[4] = {'H', 'I', 'N', 'E'};
  static constexpr uint32_t kVersion = 1;

  Checkpoint() = default;
  explicit Checkpoint(uint32_t dim) : dim_(dim) {}

  uint32_t dim() const { return dim_; }
  size_t num_tables() const { return names_.size(); }
  const std::string& name(size_t i) const { return names_.at(i); }

  void add_table(const std::string& name, Matrix table);
  bool has_table(const std::string& name) const;
  const Matrix& table(const std::string& name) const;
  Matrix& table(const std::string& name);

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  uint32_t dim_ = 0;
  std::vector<std::string> names_;
  std::vector<Matrix> tables_;
};

}  // namespace hinembed
