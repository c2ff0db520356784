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

#include "lrkv/presets.h"

#include <array>
#include <string>

#include "lrkv/errors.h"

namespace lrkv {
namespace {

constexpr std::array<ScalePreset, 5> kPresets = {{
    // name    N   H   d     d_h  G  d_c   r_tab r_meas ctx
    {"128M", 12, 6, 768, 128, 3, 128, 46, 64, 2048},
    {"512M", 24, 12, 1536, 128, 4, 256, 51, 64, 8192},
    {"1.2B", 24, 12, 1536, 128, 4, 256, 51, 64, 2048},
    {"2.5B", 18, 18, 2304, 128, 6, 384, 55, 64, 2048},
    {"6.3B", 32, 32, 4096, 128, 2, 1024, 54, 64, 2048},
}};

}  // namespace

std::span<const ScalePreset> scale_presets() { return kPresets; }

const ScalePreset& find_preset(std::string_view name) {
  for (const auto& p : kPresets)
    if (p.name == name) return p;
  std::string known;
  for (const auto& p : kPresets) {
    if (!known.empty()) known += ", ";
    known += p.name;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "' (known: " +
                    known + ")");
}

AttentionConfig preset_config(const ScalePreset& p, Mechanism mechanism,
                              RankSet ranks) {
  AttentionConfig c;
  c.mechanism = mechanism;
  c.d_model = p.d_model;
  c.n_heads = p.n_heads;
  c.head_dim = p.head_dim;
  c.n_layers = p.n_layers;
  c.kv_groups = p.gqa_groups;
  c.latent_dim = p.mla_latent;
  c.rank = ranks == RankSet::kTable ? p.lrkv_rank_table : p.lrkv_rank_measured;
  return c;
}

}  // namespace lrkv
