#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace hinembed {

// Dense row-major float32 matrix. Rows are embedding vectors.
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, float fill = 0.0f)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  std::span<float> row(size_t i) {
    check_row(i);
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const float> row(size_t i) const {
    check_row(i);
    return {data_.data() + i * cols_, cols_};
  }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  void check_row(size_t i) const {
    if (i >= rows_) throw std::out_of_range("matrix row index out of range");
  }

  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<float> data_;
};

// Dot product accumulated in double.
inline double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += double(a[i]) * double(b[i]);
  return s;
}

inline double squared_l2(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = double(a[i]) - double(b[i]);
    s += d * d;
  }
  return s;
}

}  // namespace hinembed
