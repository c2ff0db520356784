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

#include "lrkv/attention.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "lrkv/errors.h"

namespace lrkv {

template <typename T>
void rms_normalize(std::span<T> row) {
  if (row.empty()) return;
  Accum sq = 0;
  for (T v : row) sq += Accum(v) * v;
  const Accum inv = 1.0 / std::sqrt(sq / Accum(row.size()) + kRmsNormEpsilon);
  for (T& v : row) v = static_cast<T>(v * inv);
}

template <typename T>
void rms_normalize_rows(Matrix<T>& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) rms_normalize(m.row(i));
}

std::vector<Accum> softmax(std::span<const Accum> logits) {
  std::vector<Accum> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const Accum peak = *std::max_element(p.begin(), p.end());
  Accum total = 0;
  for (Accum& v : p) {
    v = std::exp(v - peak);
    total += v;
  }
  for (Accum& v : p) v /= total;
  return p;
}

template <typename T>
AttentionTrace<T> forward_attention_traced(const WeightSet<T>& w,
                                           const AttentionConfig& config,
                                           const Matrix<T>& x) {
  config.validate();
  w.check(config);
  const std::size_t steps = x.rows();
  const std::size_t dh = config.head_dim;
  if (steps == 0) throw DimensionError("forward_attention requires T >= 1");
  if (x.cols() != std::size_t(config.d_model)) {
    throw DimensionError("input has " + std::to_string(x.cols()) +
                         " columns, expected d=" +
                         std::to_string(config.d_model));
  }
  if (!all_finite(x)) throw NumericError("forward_attention: non-finite input");

  const Accum scale = config.scale();
  AttentionTrace<T> trace;
  trace.output = Matrix<T>(steps, config.n_heads * dh);
  std::vector<Accum> logits;
  std::vector<Accum> acc(dh);
  for (int h = 0; h < config.n_heads; ++h) {
    const auto [wk, wv] = effective_kv_weights(w, config, h);
    Matrix<T> q = matmul(x, w.wq[h]);
    Matrix<T> k = matmul(x, wk);
    const Matrix<T> v = matmul(x, wv);
    if (config.qk_norm) {
      rms_normalize_rows(q);
      rms_normalize_rows(k);
    }
    Matrix<Accum> probs(steps, steps);
    for (std::size_t i = 0; i < steps; ++i) {
      logits.assign(i + 1, 0.0);
      const T* qi = q.row(i).data();
      for (std::size_t j = 0; j <= i; ++j) {
        const T* kj = k.row(j).data();
        Accum s = 0;
        for (std::size_t c = 0; c < dh; ++c) s += Accum(qi[c]) * kj[c];
        logits[j] = scale * s;
      }
      const std::vector<Accum> p = softmax(logits);
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t j = 0; j <= i; ++j) {
        probs(i, j) = p[j];
        const T* vj = v.row(j).data();
        for (std::size_t c = 0; c < dh; ++c) acc[c] += p[j] * vj[c];
      }
      T* out = trace.output.row(i).data() + h * dh;
      for (std::size_t c = 0; c < dh; ++c) out[c] = static_cast<T>(acc[c]);
    }
    trace.weights.push_back(std::move(probs));
  }
  if (!all_finite(trace.output))
    throw NumericError("forward_attention produced non-finite output");
  return trace;
}

template <typename T>
Matrix<T> forward_attention(const WeightSet<T>& w, const AttentionConfig& config,
                            const Matrix<T>& x) {
  return forward_attention_traced(w, config, x).output;
}

template <typename T>
ProjectionGrad<T> projection_backward(const WeightSet<T>& w,
                                      const AttentionConfig& config,
                                      const Matrix<T>& x, const Matrix<T>& grad,
                                      int head, KvPath path) {
  if (config.mechanism != Mechanism::kLRKV) {
    throw UnsupportedError("projection_backward requires the LRKV mechanism");
  }
  if (head < 0 || head >= config.n_heads) {
    throw IndexError("head " + std::to_string(head) + " out of range");
  }
  const bool key = path == KvPath::kKey;
  const Matrix<T>& u = key ? w.u_k.at(head) : w.u_v.at(head);
  const Matrix<T>& b = key ? w.b_k.at(head) : w.b_v.at(head);
  if (x.cols() != std::size_t(config.d_model) || grad.rows() != x.rows() ||
      grad.cols() != std::size_t(config.head_dim) ||
      u.rows() != x.cols() || b.rows() != grad.cols()) {
    throw DimensionError("projection_backward: X is " +
                         std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()) + ", dK is " +
                         std::to_string(grad.rows()) + "x" +
                         std::to_string(grad.cols()));
  }
  ProjectionGrad<T> g;
  g.shared = matmul_tn(x, grad);    // Xᵀ dK
  g.u = matmul(g.shared, b);        // Xᵀ dK B
  g.b = matmul_tn(grad, matmul(x, u));  // dKᵀ X U
  return g;
}

#define LRKV_INSTANTIATE(T)                                                   \
  template void rms_normalize<T>(std::span<T>);                               \
  template void rms_normalize_rows<T>(Matrix<T>&);                            \
  template Matrix<T> forward_attention<T>(                                    \
      const WeightSet<T>&, const AttentionConfig&, const Matrix<T>&);         \
  template AttentionTrace<T> forward_attention_traced<T>(                     \
      const WeightSet<T>&, const AttentionConfig&, const Matrix<T>&);         \
  template ProjectionGrad<T> projection_backward<T>(                          \
      const WeightSet<T>&, const AttentionConfig&, const Matrix<T>&,          \
      const Matrix<T>&, int, KvPath);

LRKV_INSTANTIATE(float)
LRKV_INSTANTIATE(double)
#undef LRKV_INSTANTIATE

}  // namespace lrkv
