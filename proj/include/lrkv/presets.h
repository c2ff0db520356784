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

#ifndef LRKV_PRESETS_H_
#define LRKV_PRESETS_H_

#include <span>
#include <string_view>

#include "lrkv/config.h"

namespace lrkv {

// Model scales used for the cost tables. Two LRKV ranks are carried: the
// per-scale rank of the attention-configuration table and the fixed r = 64
// used for the measured-memory table.
struct ScalePreset {
  std::string_view name;
  int n_layers;
  int n_heads;
  int d_model;
  int head_dim;
  int gqa_groups;
  int mla_latent;
  int lrkv_rank_table;
  int lrkv_rank_measured;
  int context;
};

enum class RankSet { kMeasured, kTable };

std::span<const ScalePreset> scale_presets();

// Throws ConfigError listing the known names.
const ScalePreset& find_preset(std::string_view name);

AttentionConfig preset_config(const ScalePreset& preset, Mechanism mechanism,
                              RankSet ranks = RankSet::kMeasured);

}  // namespace lrkv

#endif  // LRKV_PRESETS_H_
