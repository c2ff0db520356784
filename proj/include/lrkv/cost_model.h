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

#ifndef LRKV_COST_MODEL_H_
#define LRKV_COST_MODEL_H_

#include <cstdint>
#include <string_view>
#include <vector>

#include "lrkv/config.h"
#include "lrkv/kv_cache.h"

namespace lrkv {

inline constexpr double kBytesPerMiB = 1024.0 * 1024.0;

struct CostQuery {
  AttentionConfig config;
  std::int64_t tokens = 0;  // T, cached sequence length
  std::int64_t batch = 1;
  int bytes_per_element = 2;
  // MLA latent streams per token: 1 caches a single Z shared by K and V,
  // 2 counts separate K and V latents (16.7% of MHA at d_c = d/6).
  int mla_latent_streams = 2;

  void validate() const;
};

// Closed-form KV-cache size over all N layers.
std::int64_t cache_bytes(const CostQuery& q);

// LRKV: 1/H + r/d_h. Other mechanisms: cache_bytes relative to MHA with the
// same shapes.
double cache_ratio(const AttentionConfig& config, int mla_latent_streams = 2);

// K/V projection parameters of one layer (queries excluded).
std::int64_t kv_param_count(const AttentionConfig& config);

enum class DecodePath {
  kDefault,   // factored for LRKV, explicit reconstruction for MLA
  kExplicit,  // reconstruct per-head K/V over the cached sequence
  kFactored,  // LRKV and MLA only
};

// FLOPs of one decode step for one layer and `batch` sequences, attending to
// `tokens` cached positions (the new token included). Multiply-add = 2 FLOPs,
// softmax = 5 FLOPs per position.
struct DecodeFlops {
  std::int64_t projections = 0;     // q of the new token, its K/V/latent rows
  std::int64_t scan = 0;            // QK and AV dot products over positions
  std::int64_t reconstruction = 0;  // extra work to reach per-head K/V space
  std::int64_t softmax = 0;
  std::int64_t total = 0;
  double overhead_vs_mha = 0.0;            // total / MHA total - 1
  double attention_overhead_vs_mha = 0.0;  // (scan + reconstruction) vs MHA

  std::int64_t attention_only() const { return scan + reconstruction; }
};

DecodeFlops decode_flops(const CostQuery& q, DecodePath path = DecodePath::kDefault);

// "none" when the reconstruction term does not grow with T, else "linear".
std::string_view reconstruction_t_dependence(const AttentionConfig& config,
                                             DecodePath path = DecodePath::kDefault);

template <typename T>
std::int64_t measured_cache_bytes(const DecodeCache<T>& cache,
                                  int bytes_per_element) {
  return std::int64_t(cache.element_count()) * bytes_per_element;
}

struct AblationRow {
  int rank = 0;
  double cache_ratio = 0.0;
  std::int64_t cache_bytes = 0;
  std::int64_t kv_params = 0;
  double decode_overhead = 0.0;
  double attention_overhead = 0.0;
};

// One row per rank, everything else from `base` (an LRKV config). Cache bytes
// use batch 1 and 2 bytes per element.
std::vector<AblationRow> ablation_table(const AttentionConfig& base,
                                        const std::vector<int>& ranks,
                                        std::int64_t tokens);

}  // namespace lrkv

#endif  // LRKV_COST_MODEL_H_
