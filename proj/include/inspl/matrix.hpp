#pragma once
// Dense row-major matrix and the handful of kernels the encoder needs.
// Scalar type is a template parameter: float in production, double in the
// finite-difference test builds. Reduction order is fixed so results are
// bitwise independent of the worker count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <thread>
#include <vector>

#include "inspl/common.hpp"

namespace inspl {

// Runs fn(begin, end) over a partition of [0, n). Each index is handled by
// exactly one worker, so outputs do not depend on the thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t grain = 256) {
  const std::size_t hw = std::thread::hardware_concurrency();
  std::size_t workers = hw == 0 ? 1 : hw;
  workers = std::min(workers, (n + grain - 1) / grain);
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  fn(std::size_t{0}, std::min(n, chunk));
  for (auto& t : pool) t.join();
}

template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  T operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  T* row(std::size_t r) { return data_.data() + r * cols_; }
  const T* row(std::size_t r) const { return data_.data() + r * cols_; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  std::vector<T>& raw() { return data_; }
  const std::vector<T>& raw() const { return data_; }

  bool same_shape(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  bool all_finite() const {
    for (T v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i)
      out.data()[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrixf = Matrix<float>;
using Matrixd = Matrix<double>;

// C = A * B. Inner loop streams B rows, so it vectorizes; the k-order is
// fixed per output row.
template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  require(a.cols() == b.rows(), ErrorCode::ShapeMismatch,
          "matmul: " + std::to_string(a.cols()) + " vs " +
              std::to_string(b.rows()));
  Matrix<T> c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  parallel_for(a.rows(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      T* crow = c.row(i);
      const T* arow = a.row(i);
      for (std::size_t k = 0; k < a.cols(); ++k) {
        const T aik = arow[k];
        if (aik == T(0)) continue;
        const T* brow = b.row(k);
        for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
      }
    }
  });
  return c;
}

// C = A^T * B, used for weight gradients.
template <typename T>
Matrix<T> matmul_at_b(const Matrix<T>& a, const Matrix<T>& b) {
  require(a.rows() == b.rows(), ErrorCode::ShapeMismatch, "matmul_at_b");
  Matrix<T> c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  parallel_for(a.cols(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const T* arow = a.row(i);
      const T* brow = b.row(i);
      for (std::size_t k = lo; k < hi; ++k) {
        const T aik = arow[k];
        if (aik == T(0)) continue;
        T* crow = c.row(k);
        for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
      }
    }
  }, 64);
  return c;
}

// C = A * B^T, used for input gradients.
template <typename T>
Matrix<T> matmul_a_bt(const Matrix<T>& a, const Matrix<T>& b) {
  require(a.cols() == b.cols(), ErrorCode::ShapeMismatch, "matmul_a_bt");
  Matrix<T> c(a.rows(), b.rows());
  parallel_for(a.rows(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const T* arow = a.row(i);
      T* crow = c.row(i);
      for (std::size_t j = 0; j < b.rows(); ++j) {
        const T* brow = b.row(j);
        T acc = T(0);
        for (std::size_t k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
        crow[j] = acc;
      }
    }
  });
  return c;
}

template <typename T>
void add_inplace(Matrix<T>& a, const Matrix<T>& b) {
  require(a.same_shape(b), ErrorCode::ShapeMismatch, "add_inplace");
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

// Column means with 64-bit accumulation.
template <typename T>
std::vector<double> col_mean(const Matrix<T>& a) {
  std::vector<double> mean(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const T* row = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) mean[j] += row[j];
  }
  for (auto& m : mean) m /= static_cast<double>(a.rows());
  return mean;
}

}  // namespace inspl
