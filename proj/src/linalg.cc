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

#include "lrkv/linalg.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lrkv/errors.h"

namespace lrkv {
namespace {

double off_diagonal_norm(const Matrix<double>& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

// A ← Jᵀ A J and V ← V J for the rotation zeroing a(p, q).
void rotate(Matrix<double>& a, Matrix<double>& v, std::size_t p, std::size_t q) {
  const double apq = a(p, q);
  if (apq == 0.0) return;
  const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(tau) + std::sqrt(1.0 + tau * tau));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = t * c;
  const std::size_t n = a.rows();
  for (std::size_t k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

SymmetricEigen jacobi_eigen(const Matrix<double>& input, int max_sweeps) {
  const std::size_t n = input.rows();
  if (input.cols() != n) throw DimensionError("jacobi_eigen: matrix is not square");
  const double norm = frobenius_norm(input);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(input(i, j) - input(j, i)) > 1e-9 * std::max(1.0, norm)) {
        throw NumericError("jacobi_eigen: matrix is not symmetric at (" +
                           std::to_string(i) + ", " + std::to_string(j) + ")");
      }
    }
  }
  Matrix<double> a = input;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      a(i, j) = a(j, i) = 0.5 * (input(i, j) + input(j, i));

  SymmetricEigen result;
  Matrix<double> v = Matrix<double>::identity(n);
  const double target = kJacobiTolerance * norm;
  bool converged = off_diagonal_norm(a) <= target;
  while (!converged && result.sweeps < max_sweeps) {
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) rotate(a, v, p, q);
    ++result.sweeps;
    converged = off_diagonal_norm(a) <= target;
  }
  if (!converged) {
    throw NumericError("jacobi_eigen did not converge in " +
                       std::to_string(max_sweeps) + " sweeps");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&a](std::size_t x, std::size_t y) {
    return a(x, x) > a(y, y);
  });
  result.vectors = Matrix<double>(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    result.values.push_back(a(order[c], order[c]));
    for (std::size_t r = 0; r < n; ++r) result.vectors(r, c) = v(r, order[c]);
  }
  return result;
}

TruncatedSvd svd_truncate(const Matrix<double>& w, int r) {
  const std::size_t full = std::min(w.rows(), w.cols());
  if (r < 0 || std::size_t(r) > full) {
    throw ParameterError("svd_truncate: rank " + std::to_string(r) +
                         " outside [0, " + std::to_string(full) + "]");
  }
  const SymmetricEigen eig = jacobi_eigen(matmul_tn(w, w));
  TruncatedSvd out;
  for (std::size_t i = 0; i < full; ++i)
    out.singular_values.push_back(std::sqrt(std::max(eig.values[i], 0.0)));

  out.right = Matrix<double>(w.cols(), r);
  for (std::size_t i = 0; i < w.cols(); ++i)
    for (int c = 0; c < r; ++c) out.right(i, c) = eig.vectors(i, c);
  out.left = matmul(w, out.right);
  out.residual_error = frobenius_norm(w - matmul_nt(out.left, out.right));
  return out;
}

}  // namespace lrkv
