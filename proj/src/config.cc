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

#include "lrkv/config.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "lrkv/errors.h"

namespace lrkv {

std::string_view mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::kMHA:
      return "MHA";
    case Mechanism::kMQA:
      return "MQA";
    case Mechanism::kGQA:
      return "GQA";
    case Mechanism::kMLA:
      return "MLA";
    case Mechanism::kLRKV:
      return "LRKV";
  }
  return "?";
}

Mechanism parse_mechanism(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  for (Mechanism m : kAllMechanisms) {
    if (mechanism_name(m) == upper) return m;
  }
  throw ConfigError("unknown mechanism '" + std::string(name) +
                    "' (expected mha, mqa, gqa, mla or lrkv)");
}

double AttentionConfig::scale() const {
  return softmax_scale ? *softmax_scale : 1.0 / std::sqrt(double(head_dim));
}

void AttentionConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (d_model <= 0) fail("d must be positive");
  if (n_heads <= 0) fail("H must be positive");
  if (head_dim <= 0) fail("d_h must be positive");
  if (n_layers <= 0) fail("n_layers must be positive");
  if (d_model != n_heads * head_dim) {
    fail("d = H * d_h violated: d=" + std::to_string(d_model) +
         ", H=" + std::to_string(n_heads) +
         ", d_h=" + std::to_string(head_dim));
  }
  if (softmax_scale && !std::isfinite(*softmax_scale))
    fail("softmax_scale must be finite");
  switch (mechanism) {
    case Mechanism::kGQA:
      if (kv_groups <= 0) fail("GQA requires G >= 1");
      if (n_heads % kv_groups != 0) {
        fail("GQA requires H mod G = 0: H=" + std::to_string(n_heads) +
             ", G=" + std::to_string(kv_groups));
      }
      break;
    case Mechanism::kLRKV:
      if (rank < 0) fail("LRKV requires r >= 0");
      if (rank > d_model) {
        fail("LRKV requires r <= d: r=" + std::to_string(rank) +
             ", d=" + std::to_string(d_model));
      }
      break;
    case Mechanism::kMLA:
      if (latent_dim < 1 || latent_dim > d_model) {
        fail("MLA requires 1 <= d_c <= d: d_c=" + std::to_string(latent_dim) +
             ", d=" + std::to_string(d_model));
      }
      break;
    case Mechanism::kMHA:
    case Mechanism::kMQA:
      break;
  }
}

int AttentionConfig::kv_projection_count() const {
  switch (mechanism) {
    case Mechanism::kMHA:
      return n_heads;
    case Mechanism::kGQA:
      return kv_groups;
    case Mechanism::kMQA:
    case Mechanism::kLRKV:
      return 1;
    case Mechanism::kMLA:
      return 0;
  }
  return 0;
}

int AttentionConfig::kv_index(int head) const {
  switch (mechanism) {
    case Mechanism::kMHA:
      return head;
    case Mechanism::kGQA:
      return head * kv_groups / n_heads;
    default:
      return 0;
  }
}

}  // namespace lrkv
