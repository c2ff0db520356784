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

#ifndef LRKV_LINALG_H_
#define LRKV_LINALG_H_

#include <vector>

#include "lrkv/matrix.h"

namespace lrkv {

struct SymmetricEigen {
  std::vector<double> values;  // descending
  Matrix<double> vectors;      // column i pairs with values[i]
  int sweeps = 0;
};

inline constexpr double kJacobiTolerance = 1e-12;

// Cyclic Jacobi on a symmetric matrix. Stops once the off-diagonal Frobenius
// norm drops below kJacobiTolerance·‖A‖_F; throws NumericError if the input
// is not symmetric or the sweeps do not converge.
SymmetricEigen jacobi_eigen(const Matrix<double>& a, int max_sweeps = 100);

// Best rank-r approximation W ≈ left · rightᵀ. The left factor absorbs the
// singular values (left = U_r Σ_r, right = V_r), right has orthonormal
// columns.
struct TruncatedSvd {
  Matrix<double> left;                  // d×r
  Matrix<double> right;                 // d_h×r
  std::vector<double> singular_values;  // all min(d, d_h), descending
  double residual_error = 0.0;          // ‖W − left·rightᵀ‖_F
};

// Computed from the eigendecomposition of WᵀW. Throws ParameterError unless
// 0 <= r <= min(rows, cols).
TruncatedSvd svd_truncate(const Matrix<double>& w, int r);

}  // namespace lrkv

#endif  // LRKV_LINALG_H_
