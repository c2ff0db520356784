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

#include <doctest.h>

#include "lrkv/matrix.h"
#include "test_util.h"

namespace lrkv {
namespace {

using testing::naive_matmul;
using testing::random_matrix;

TEST_CASE("matmul variants agree with the triple loop") {
  const auto a = random_matrix(5, 7, 1);
  const auto b = random_matrix(7, 3, 2);
  CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) < 1e-13);
  CHECK(max_abs_diff(matmul_tn(transpose(a), b), naive_matmul(a, b)) < 1e-13);
  CHECK(max_abs_diff(matmul_nt(a, transpose(b)), naive_matmul(a, b)) < 1e-13);
}

TEST_CASE("empty inner dimension yields zeros") {
  const Matrix<double> u(4, 0), b(3, 0);
  const auto p = matmul_nt(u, b);
  CHECK(p.rows() == 4);
  CHECK(p.cols() == 3);
  CHECK(frobenius_norm(p) == 0.0);
}

TEST_CASE("shape mismatches throw DimensionError") {
  CHECK_THROWS_AS(matmul(Matrix<double>(2, 3), Matrix<double>(2, 3)), DimensionError);
  CHECK_THROWS_AS(Matrix<double>(2, 2) + Matrix<double>(2, 3), DimensionError);
  CHECK_THROWS_AS(Matrix<double>(2, 2, std::vector<double>(3)), DimensionError);
}

TEST_CASE("frobenius inner product is tr(AᵀB)") {
  const auto a = random_matrix(4, 3, 3);
  const auto b = random_matrix(4, 3, 4);
  const auto atb = matmul_tn(a, b);
  double trace = 0.0;
  for (std::size_t i = 0; i < 3; ++i) trace += atb(i, i);
  CHECK(frobenius_inner(a, b) == doctest::Approx(trace).epsilon(1e-13));
}

TEST_CASE("float storage accumulates in double") {
  // 1 + 1e-8 is not representable in float, but the sum of 10^4 of them is
  // recovered when the reduction runs in double.
  Matrix<float> a(1, 10000, 1e-8f), b(10000, 1, 1.0f);
  a(0, 0) = 1.0f;
  const auto p = matmul(a, b);
  CHECK(double(p(0, 0)) == doctest::Approx(1.0 + 9999e-8).epsilon(1e-7));
}

}  // namespace
}  // namespace lrkv
