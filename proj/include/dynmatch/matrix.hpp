#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dynmatch {

// Dense row-major matrix. Small (J x K) sizes only; no expression templates.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T init = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, init) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  const T& operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  std::span<T> flat() { return data_; }
  std::span<const T> flat() const { return data_; }

  std::span<const T> row(std::size_t r) const {
    return std::span<const T>(data_).subspan(r * cols_, cols_);
  }

  T row_sum(std::size_t r) const {
    T s{};
    for (std::size_t c = 0; c < cols_; ++c) s += (*this)(r, c);
    return s;
  }
  T col_sum(std::size_t c) const {
    T s{};
    for (std::size_t r = 0; r < rows_; ++r) s += (*this)(r, c);
    return s;
  }
  T total() const {
    T s{};
    for (const T& x : data_) s += x;
    return s;
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.flat()[i] = static_cast<U>(data_[i]);
    return out;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) = default;

  // Row-major lexicographic order, used for deterministic tie-breaking.
  friend bool lexicographically_less(const Matrix& a, const Matrix& b) {
    return std::lexicographical_compare(a.data_.begin(), a.data_.end(), b.data_.begin(),
                                        b.data_.end());
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using RealMatrix = Matrix<double>;
using CountMatrix = Matrix<std::int64_t>;

inline double max_abs_difference(const RealMatrix& a, const RealMatrix& b) {
  assert(a.rows() == b.rows() && a.cols() == b.cols());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, a.flat()[i] > b.flat()[i] ? a.flat()[i] - b.flat()[i]
                                              : b.flat()[i] - a.flat()[i]);
  }
  return d;
}

// An edge (j, k) of the complete bipartite graph, zero-based.
struct Edge {
  std::size_t demand = 0;
  std::size_t supply = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

}  // namespace dynmatch
