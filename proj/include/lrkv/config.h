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

#ifndef LRKV_CONFIG_H_
#define LRKV_CONFIG_H_

#include <optional>
#include <string>
#include <string_view>

namespace lrkv {

enum class Mechanism { kMHA, kMQA, kGQA, kMLA, kLRKV };

inline constexpr Mechanism kAllMechanisms[] = {
    Mechanism::kMHA, Mechanism::kMQA, Mechanism::kGQA, Mechanism::kMLA,
    Mechanism::kLRKV};

// Upper-case display name ("MHA", "LRKV", ...).
std::string_view mechanism_name(Mechanism m);
// Case-insensitive parse; throws ConfigError on unknown names.
Mechanism parse_mechanism(std::string_view name);

// Shape and variant description shared by every module. Fields that do not
// apply to `mechanism` are never read (rank for MHA, latent_dim for GQA, ...).
struct AttentionConfig {
  Mechanism mechanism = Mechanism::kMHA;
  int d_model = 0;     // d
  int n_heads = 0;     // H
  int head_dim = 0;    // d_h
  int n_layers = 1;    // N, cost model only
  int rank = 0;        // LRKV residual rank r
  int latent_dim = 0;  // MLA d_c
  int kv_groups = 0;   // GQA G (number of KV heads)
  bool qk_norm = false;
  std::optional<double> softmax_scale;  // defaults to 1/sqrt(d_h)

  double scale() const;

  // Throws ConfigError naming the first violated invariant.
  void validate() const;

  // Number of distinct full K/V projections: H for MHA, G for GQA, 1 for MQA
  // and LRKV (the shared base), 0 for MLA.
  int kv_projection_count() const;

  // KV projection used by `head` (GQA contiguous blocks: floor(h*G/H)).
  int kv_index(int head) const;

  bool operator==(const AttentionConfig&) const = default;
};

}  // namespace lrkv

#endif  // LRKV_CONFIG_H_
