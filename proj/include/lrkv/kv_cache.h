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

#ifndef LRKV_KV_CACHE_H_
#define LRKV_KV_CACHE_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lrkv/config.h"
#include "lrkv/matrix.h"
#include "lrkv/rng.h"
#include "lrkv/weights.h"

namespace lrkv {

// Cached decode state, preallocated to `capacity` rows.
//   MHA   k/v: H streams capacity×d_h
//   MQA   k/v: 1 stream
//   GQA   k/v: G streams
//   MLA   z: capacity×d_c (one latent stream for both K and V)
//   LRKV  k/v: 1 shared stream capacity×d_h, rk/rv: H latents capacity×r
// Rows at or beyond `length` are zero and not part of the cached sequence.
template <typename T>
struct DecodeCache {
  Mechanism mechanism = Mechanism::kMHA;
  std::size_t capacity = 0;
  std::size_t length = 0;
  std::vector<Matrix<T>> k;
  std::vector<Matrix<T>> v;
  Matrix<T> z;
  std::vector<Matrix<T>> rk;
  std::vector<Matrix<T>> rv;

  // Elements held by all payload tensors at capacity.
  std::size_t element_count() const;
};

// Optional instrumentation passed through the decode paths. `flops` counts
// multiplies and adds actually executed (multiply-add = 2); softmax is
// charged 5 per position. `buffers` records every transient allocation.
struct DecodeProbe {
  struct Buffer {
    std::string label;
    int head = -1;  // -1 for per-layer buffers
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t elements() const { return rows * cols; }
  };
  std::uint64_t flops = 0;
  std::vector<Buffer> buffers;

  void reset() {
    flops = 0;
    buffers.clear();
  }
  std::size_t transient_elements() const;
};

template <typename T>
struct DecodeStepOutput {
  std::vector<std::vector<Accum>> logits;  // [h][position], scaled, pre-softmax
  std::vector<std::vector<T>> out;         // [h][d_h]
};

template <typename T>
DecodeCache<T> make_cache(const AttentionConfig& config, std::size_t capacity);

// Projects every row of `x` into a cache with room for `capacity` tokens
// (at least x.rows()).
template <typename T>
DecodeCache<T> prefill(const WeightSet<T>& w, const AttentionConfig& config,
                       const Matrix<T>& x, std::size_t capacity = 0);

// Appends the projections of one token. Throws CapacityError when full.
template <typename T>
void append_token(DecodeCache<T>& cache, const WeightSet<T>& w,
                  const AttentionConfig& config, std::span<const T> x,
                  DecodeProbe* probe = nullptr);

// Attention of query token `x` over all cached positions, reconstructing the
// full per-head K_h and V_h first.
template <typename T>
DecodeStepOutput<T> attend_explicit(const DecodeCache<T>& cache,
                                    const WeightSet<T>& w,
                                    const AttentionConfig& config,
                                    std::span<const T> x,
                                    DecodeProbe* probe = nullptr);

// Same attention computed without forming any per-head T×d_h tensor:
//   LRKV  q Kᵀ = q K_sharedᵀ + (q B^K)(R^K)ᵀ,  a V = a V_shared + (a R^V) B^Vᵀ
//   MLA   q Kᵀ = (q W_up^Kᵀ) Zᵀ,              a V = (a Z) W_up^V
// Requires qk_norm off; MHA/MQA/GQA are rejected.
template <typename T>
DecodeStepOutput<T> attend_factored(const DecodeCache<T>& cache,
                                    const WeightSet<T>& w,
                                    const AttentionConfig& config,
                                    std::span<const T> x,
                                    DecodeProbe* probe = nullptr);

// append_token followed by the matching attend.
template <typename T>
DecodeStepOutput<T> decode_explicit(DecodeCache<T>& cache, const WeightSet<T>& w,
                                    const AttentionConfig& config,
                                    std::span<const T> x,
                                    DecodeProbe* probe = nullptr);

template <typename T>
DecodeStepOutput<T> decode_factored(DecodeCache<T>& cache, const WeightSet<T>& w,
                                    const AttentionConfig& config,
                                    std::span<const T> x,
                                    DecodeProbe* probe = nullptr);

// True when attend_factored supports `config`.
bool factored_decode_supported(const AttentionConfig& config);

struct EquivalenceRow {
  int trial = 0;
  int step = 0;
  std::size_t length = 0;  // cached positions attended by this step
  bool factored_applicable = false;
  double max_logit_diff = 0.0;
  double max_output_diff = 0.0;
  std::uint64_t explicit_flops = 0;
  std::uint64_t factored_flops = 0;
  std::size_t explicit_transient_elements = 0;
  std::size_t factored_transient_elements = 0;
};

// Per trial: fresh weights and N(0,1) inputs of `tokens` rows; prefills
// tokens - decode_steps rows, then decodes the remaining rows through both
// paths on the same cache. decode_steps = 0 decodes every token.
template <typename T>
std::vector<EquivalenceRow> equivalence_report(const AttentionConfig& config,
                                               const RngSpec& seed, int tokens,
                                               int trials, int decode_steps = 0);

}  // namespace lrkv

#endif  // LRKV_KV_CACHE_H_
