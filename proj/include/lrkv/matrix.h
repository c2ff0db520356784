// Copyright 2026 The LRKV Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LRKV_MATRIX_H_
#define LRKV_MATRIX_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lrkv/errors.h"

namespace lrkv {

// Accumulator type for every reduction, regardless of storage precision.
using Accum = double;

// Dense row-major matrix with value semantics.
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("matrix data size " + std::to_string(data_.size()) +
                           " != " + std::to_string(rows_) + "x" +
                           std::to_string(cols_));
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::span<T> row(std::size_t i) {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const T> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<const T> values() const { return data_; }
  std::span<T> values() { return data_; }

  // First `n` rows as a new matrix.
  Matrix top_rows(std::size_t n) const {
    Matrix out(n, cols_);
    std::copy_n(data_.begin(), n * cols_, out.data_.begin());
    return out;
  }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    std::transform(data_.begin(), data_.end(), out.data(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

namespace detail {

inline void require(bool ok, const char* op, std::size_t a, std::size_t b) {
  if (!ok) {
    throw DimensionError(std::string(op) + ": inner dimensions " +
                         std::to_string(a) + " and " + std::to_string(b) +
                         " do not match");
  }
}

}  // namespace detail

// A * B
template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  detail::require(a.cols() == b.rows(), "matmul", a.cols(), b.rows());
  const std::size_t n = b.cols();
  Matrix<T> out(a.rows(), n);
  std::vector<Accum> acc(n);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::fill(acc.begin(), acc.end(), Accum(0));
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Accum aik = a(i, k);
      const T* brow = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) acc[j] += aik * brow[j];
    }
    std::copy(acc.begin(), acc.end(), out.row(i).begin());
  }
  return out;
}

// Aᵀ * B
template <typename T>
Matrix<T> matmul_tn(const Matrix<T>& a, const Matrix<T>& b) {
  detail::require(a.rows() == b.rows(), "matmul_tn", a.rows(), b.rows());
  const std::size_t m = a.cols();
  const std::size_t n = b.cols();
  std::vector<Accum> acc(m * n, Accum(0));
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const T* arow = a.row(k).data();
    const T* brow = b.row(k).data();
    for (std::size_t i = 0; i < m; ++i) {
      const Accum aki = arow[i];
      Accum* dst = acc.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) dst[j] += aki * brow[j];
    }
  }
  Matrix<T> out(m, n);
  std::copy(acc.begin(), acc.end(), out.data());
  return out;
}

// A * Bᵀ
template <typename T>
Matrix<T> matmul_nt(const Matrix<T>& a, const Matrix<T>& b) {
  detail::require(a.cols() == b.cols(), "matmul_nt", a.cols(), b.cols());
  Matrix<T> out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const T* arow = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const T* brow = b.row(j).data();
      Accum s = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += Accum(arow[k]) * brow[k];
      out(i, j) = static_cast<T>(s);
    }
  }
  return out;
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

template <typename T>
Matrix<T> operator+(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("matrix add: shape mismatch");
  Matrix<T> out = a;
  T* o = out.data();
  const T* p = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] += p[i];
  return out;
}

template <typename T>
Matrix<T> operator-(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("matrix subtract: shape mismatch");
  Matrix<T> out = a;
  T* o = out.data();
  const T* p = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] -= p[i];
  return out;
}

template <typename T>
Matrix<T> scaled(const Matrix<T>& a, Accum s) {
  Matrix<T> out = a;
  for (T& v : out.values()) v = static_cast<T>(v * s);
  return out;
}

// ⟨A, B⟩_F = tr(Aᵀ B)
template <typename T>
Accum frobenius_inner(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("frobenius_inner: shape mismatch");
  Accum s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += Accum(a.data()[i]) * b.data()[i];
  return s;
}

template <typename T>
Accum frobenius_norm(const Matrix<T>& a) {
  return std::sqrt(frobenius_inner(a, a));
}

template <typename T>
Accum max_abs_diff(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("max_abs_diff: shape mismatch");
  Accum m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(Accum(a.data()[i]) - Accum(b.data()[i])));
  return m;
}

template <typename T>
bool all_finite(const Matrix<T>& a) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](T v) { return std::isfinite(v); });
}

}  // namespace lrkv

#endif  // LRKV_MATRIX_H_
