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

#include "lrkv/cost_model.h"

#include <string>

#include "lrkv/errors.h"

namespace lrkv {

void CostQuery::validate() const {
  config.validate();
  if (tokens < 0) throw ParameterError("tokens must be >= 0");
  if (batch < 1) throw ParameterError("batch must be >= 1");
  if (bytes_per_element != 1 && bytes_per_element != 2 &&
      bytes_per_element != 4 && bytes_per_element != 8) {
    throw ParameterError("bytes_per_element must be 1, 2, 4 or 8, got " +
                         std::to_string(bytes_per_element));
  }
  if (mla_latent_streams != 1 && mla_latent_streams != 2) {
    throw ParameterError("mla_latent_streams must be 1 or 2, got " +
                         std::to_string(mla_latent_streams));
  }
}

std::int64_t cache_bytes(const CostQuery& q) {
  q.validate();
  const AttentionConfig& c = q.config;
  const std::int64_t per_token_layer = [&]() -> std::int64_t {
    const std::int64_t dh = c.head_dim;
    switch (c.mechanism) {
      case Mechanism::kMHA:
        return 2 * std::int64_t(c.n_heads) * dh;
      case Mechanism::kMQA:
        return 2 * dh;
      case Mechanism::kGQA:
        return 2 * std::int64_t(c.kv_groups) * dh;
      case Mechanism::kMLA:
        return std::int64_t(q.mla_latent_streams) * c.latent_dim;
      case Mechanism::kLRKV:
        return 2 * (dh + std::int64_t(c.n_heads) * c.rank);
    }
    return 0;
  }();
  return per_token_layer * c.n_layers * q.batch * q.tokens * q.bytes_per_element;
}

double cache_ratio(const AttentionConfig& config, int mla_latent_streams) {
  config.validate();
  if (config.mechanism == Mechanism::kLRKV) {
    return 1.0 / config.n_heads + double(config.rank) / config.head_dim;
  }
  CostQuery q{config, 1, 1, 2, mla_latent_streams};
  CostQuery mha = q;
  mha.config.mechanism = Mechanism::kMHA;
  return double(cache_bytes(q)) / double(cache_bytes(mha));
}

std::int64_t kv_param_count(const AttentionConfig& c) {
  c.validate();
  const std::int64_t d = c.d_model;
  const std::int64_t dh = c.head_dim;
  const std::int64_t h = c.n_heads;
  switch (c.mechanism) {
    case Mechanism::kMHA:
      return 2 * h * d * dh;
    case Mechanism::kMQA:
      return 2 * d * dh;
    case Mechanism::kGQA:
      return 2 * std::int64_t(c.kv_groups) * d * dh;
    case Mechanism::kMLA:
      return d * c.latent_dim + 2 * h * c.latent_dim * dh;
    case Mechanism::kLRKV:
      return 2 * d * dh + 2 * h * c.rank * (d + dh);
  }
  return 0;
}

namespace {

DecodePath resolve(Mechanism m, DecodePath path) {
  if (path == DecodePath::kDefault)
    return m == Mechanism::kLRKV ? DecodePath::kFactored : DecodePath::kExplicit;
  if (path == DecodePath::kFactored && m != Mechanism::kLRKV &&
      m != Mechanism::kMLA) {
    throw UnsupportedError("factored decode is not defined for " +
                           std::string(mechanism_name(m)));
  }
  return path;
}

DecodeFlops count_flops(const AttentionConfig& c, std::int64_t t,
                        DecodePath path) {
  const std::int64_t d = c.d_model;
  const std::int64_t dh = c.head_dim;
  const std::int64_t h = c.n_heads;
  DecodeFlops f;
  f.softmax = h * 5 * t;
  f.projections = h * 2 * d * dh;  // queries
  switch (c.mechanism) {
    case Mechanism::kMHA:
    case Mechanism::kMQA:
    case Mechanism::kGQA:
      f.projections += std::int64_t(c.kv_projection_count()) * 4 * d * dh;
      f.scan = h * 4 * t * dh;
      break;
    case Mechanism::kMLA: {
      const std::int64_t dc = c.latent_dim;
      f.projections += 2 * d * dc;
      if (path == DecodePath::kExplicit) {
        f.reconstruction = h * 4 * t * dc * dh;
        f.scan = h * 4 * t * dh;
      } else {
        f.reconstruction = h * 4 * dc * dh;
        f.scan = h * 4 * t * dc;
      }
      break;
    }
    case Mechanism::kLRKV: {
      const std::int64_t r = c.rank;
      f.projections += 4 * d * dh + h * 4 * d * r;
      if (path == DecodePath::kExplicit) {
        f.reconstruction = h * 4 * t * dh * r;
        f.scan = h * 4 * t * dh;
      } else {
        f.reconstruction = h * 4 * r * dh;
        f.scan = h * 4 * t * (dh + r);
      }
      break;
    }
  }
  f.total = f.projections + f.scan + f.reconstruction + f.softmax;
  return f;
}

DecodeFlops scale_batch(DecodeFlops f, std::int64_t batch) {
  f.projections *= batch;
  f.scan *= batch;
  f.reconstruction *= batch;
  f.softmax *= batch;
  f.total *= batch;
  return f;
}

}  // namespace

DecodeFlops decode_flops(const CostQuery& q, DecodePath path) {
  q.validate();
  const DecodePath p = resolve(q.config.mechanism, path);
  DecodeFlops f = scale_batch(count_flops(q.config, q.tokens, p), q.batch);
  AttentionConfig mha = q.config;
  mha.mechanism = Mechanism::kMHA;
  const DecodeFlops base =
      scale_batch(count_flops(mha, q.tokens, DecodePath::kExplicit), q.batch);
  f.overhead_vs_mha = base.total > 0 ? double(f.total) / base.total - 1.0 : 0.0;
  f.attention_overhead_vs_mha =
      base.attention_only() > 0
          ? double(f.attention_only()) / base.attention_only() - 1.0
          : 0.0;
  return f;
}

std::string_view reconstruction_t_dependence(const AttentionConfig& config,
                                             DecodePath path) {
  config.validate();
  const DecodePath p = resolve(config.mechanism, path);
  const auto at1 = count_flops(config, 1, p).reconstruction;
  const auto at2 = count_flops(config, 2, p).reconstruction;
  return at1 == at2 ? "none" : "linear";
}

std::vector<AblationRow> ablation_table(const AttentionConfig& base,
                                        const std::vector<int>& ranks,
                                        std::int64_t tokens) {
  if (base.mechanism != Mechanism::kLRKV)
    throw UnsupportedError("ablation_table requires an LRKV base config");
  std::vector<AblationRow> rows;
  for (int r : ranks) {
    AttentionConfig c = base;
    c.rank = r;
    c.validate();
    CostQuery q{c, tokens, 1, 2};
    const DecodeFlops f = decode_flops(q);
    rows.push_back({r, cache_ratio(c), cache_bytes(q), kv_param_count(c),
                    f.overhead_vs_mha, f.attention_overhead_vs_mha});
  }
  return rows;
}

}  // namespace lrkv
