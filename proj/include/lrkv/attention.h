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

#ifndef LRKV_ATTENTION_H_
#define LRKV_ATTENTION_H_

#include <span>
#include <vector>

#include "lrkv/config.h"
#include "lrkv/matrix.h"
#include "lrkv/weights.h"

namespace lrkv {

inline constexpr double kRmsNormEpsilon = 1e-6;

// y = x / sqrt(mean(x²) + eps), no gain.
template <typename T>
void rms_normalize(std::span<T> row);

// Row-wise RMSNorm applied in place.
template <typename T>
void rms_normalize_rows(Matrix<T>& m);

// Stable softmax over `logits` (already scaled); returns probabilities in
// double precision.
std::vector<Accum> softmax(std::span<const Accum> logits);

// Causal multi-head attention with full K/V materialization (training path).
// Output is T×(H·d_h), heads concatenated head-major. No output projection.
template <typename T>
Matrix<T> forward_attention(const WeightSet<T>& w, const AttentionConfig& config,
                            const Matrix<T>& x);

// Same computation, also returning each head's T×T attention matrix (zero
// above the diagonal).
template <typename T>
struct AttentionTrace {
  Matrix<T> output;
  std::vector<Matrix<Accum>> weights;
};

template <typename T>
AttentionTrace<T> forward_attention_traced(const WeightSet<T>& w,
                                           const AttentionConfig& config,
                                           const Matrix<T>& x);

// Gradients of a loss through K_head = X·(W_shared + U·Bᵀ) given dL/dK_head.
// `shared` is this head's contribution to dW_shared; the total shared
// gradient is the sum over heads.
template <typename T>
struct ProjectionGrad {
  Matrix<T> shared;  // d×d_h
  Matrix<T> u;       // d×r
  Matrix<T> b;       // d_h×r
};

enum class KvPath { kKey, kValue };

template <typename T>
ProjectionGrad<T> projection_backward(const WeightSet<T>& w,
                                      const AttentionConfig& config,
                                      const Matrix<T>& x, const Matrix<T>& grad,
                                      int head, KvPath path = KvPath::kKey);

}  // namespace lrkv

#endif  // LRKV_ATTENTION_H_
