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

#include "lrkv/kv_cache.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lrkv/attention.h"
#include "lrkv/errors.h"

namespace lrkv {
namespace {

void charge(DecodeProbe* probe, std::uint64_t flops) {
  if (probe) probe->flops += flops;
}

template <typename U>
std::vector<U> scratch(DecodeProbe* probe, const char* label, int head,
                       std::size_t rows, std::size_t cols) {
  if (probe) probe->buffers.push_back({label, head, rows, cols});
  return std::vector<U>(rows * cols, U(0));
}

// out = x · W for one row, accumulating over the input dimension in order.
// Prefill and append both go through here so their rows agree exactly.
template <typename T>
void project_row(std::span<const T> x, const Matrix<T>& w, std::span<T> out,
                 DecodeProbe* probe) {
  const std::size_t n = w.cols();
  std::vector<Accum> acc(n, 0.0);
  for (std::size_t k = 0; k < w.rows(); ++k) {
    const Accum xk = x[k];
    const T* wrow = w.row(k).data();
    for (std::size_t j = 0; j < n; ++j) acc[j] += xk * wrow[j];
  }
  std::copy(acc.begin(), acc.end(), out.begin());
  charge(probe, 2 * w.rows() * n);
}

template <typename T>
std::vector<T> project_query(std::span<const T> x, const Matrix<T>& wq,
                             int head, DecodeProbe* probe) {
  std::vector<T> q = scratch<T>(probe, "q", head, 1, wq.cols());
  project_row<T>(x, wq, q, probe);
  return q;
}

template <typename T>
void check_step(const DecodeCache<T>& cache, const AttentionConfig& config,
                std::span<const T> x) {
  if (cache.mechanism != config.mechanism)
    throw DimensionError("cache mechanism does not match config");
  if (x.size() != std::size_t(config.d_model)) {
    throw DimensionError("token has " + std::to_string(x.size()) +
                         " features, expected d=" +
                         std::to_string(config.d_model));
  }
  if (cache.length == 0)
    throw DimensionError("attention over an empty cache (append the token first)");
  for (T v : x)
    if (!std::isfinite(v)) throw NumericError("decode: non-finite token");
}

// Scaled logits -> probabilities, charging the scale and softmax.
std::vector<Accum> normalize_logits(std::vector<Accum>& logits, Accum scale,
                                    int head, DecodeProbe* probe) {
  for (Accum& s : logits) s *= scale;
  charge(probe, logits.size());
  if (probe) probe->buffers.push_back({"probs", head, 1, logits.size()});
  charge(probe, 5 * logits.size());
  return softmax(logits);
}

template <typename T>
void finish(DecodeStepOutput<T>& step) {
  for (const auto& l : step.logits)
    for (Accum v : l)
      if (!std::isfinite(v)) throw NumericError("decode produced non-finite logits");
  for (const auto& o : step.out)
    for (T v : o)
      if (!std::isfinite(v)) throw NumericError("decode produced non-finite output");
}

}  // namespace

template <typename T>
std::size_t DecodeCache<T>::element_count() const {
  std::size_t n = z.size();
  for (const auto& m : k) n += m.size();
  for (const auto& m : v) n += m.size();
  for (const auto& m : rk) n += m.size();
  for (const auto& m : rv) n += m.size();
  return n;
}

std::size_t DecodeProbe::transient_elements() const {
  std::size_t n = 0;
  for (const auto& b : buffers) n += b.elements();
  return n;
}

bool factored_decode_supported(const AttentionConfig& config) {
  return !config.qk_norm && (config.mechanism == Mechanism::kLRKV ||
                             config.mechanism == Mechanism::kMLA);
}

template <typename T>
DecodeCache<T> make_cache(const AttentionConfig& config, std::size_t capacity) {
  config.validate();
  DecodeCache<T> cache;
  cache.mechanism = config.mechanism;
  cache.capacity = capacity;
  const std::size_t dh = config.head_dim;
  for (int i = 0; i < config.kv_projection_count(); ++i) {
    cache.k.emplace_back(capacity, dh);
    cache.v.emplace_back(capacity, dh);
  }
  if (config.mechanism == Mechanism::kMLA)
    cache.z = Matrix<T>(capacity, config.latent_dim);
  if (config.mechanism == Mechanism::kLRKV) {
    for (int h = 0; h < config.n_heads; ++h) {
      cache.rk.emplace_back(capacity, config.rank);
      cache.rv.emplace_back(capacity, config.rank);
    }
  }
  return cache;
}

template <typename T>
void append_token(DecodeCache<T>& cache, const WeightSet<T>& w,
                  const AttentionConfig& config, std::span<const T> x,
                  DecodeProbe* probe) {
  if (cache.mechanism != config.mechanism)
    throw DimensionError("cache mechanism does not match config");
  if (x.size() != std::size_t(config.d_model)) {
    throw DimensionError("token has " + std::to_string(x.size()) +
                         " features, expected d=" +
                         std::to_string(config.d_model));
  }
  if (cache.length >= cache.capacity) {
    throw CapacityError("cache full: capacity " +
                        std::to_string(cache.capacity));
  }
  const std::size_t row = cache.length;
  for (std::size_t i = 0; i < cache.k.size(); ++i) {
    project_row<T>(x, w.wk[i], cache.k[i].row(row), probe);
    project_row<T>(x, w.wv[i], cache.v[i].row(row), probe);
  }
  if (config.mechanism == Mechanism::kMLA)
    project_row<T>(x, w.w_down, cache.z.row(row), probe);
  for (std::size_t h = 0; h < cache.rk.size(); ++h) {
    project_row<T>(x, w.u_k[h], cache.rk[h].row(row), probe);
    project_row<T>(x, w.u_v[h], cache.rv[h].row(row), probe);
  }
  ++cache.length;
}

template <typename T>
DecodeCache<T> prefill(const WeightSet<T>& w, const AttentionConfig& config,
                       const Matrix<T>& x, std::size_t capacity) {
  w.check(config);
  if (x.cols() != std::size_t(config.d_model) && x.rows() > 0) {
    throw DimensionError("prefill input has " + std::to_string(x.cols()) +
                         " columns, expected d=" +
                         std::to_string(config.d_model));
  }
  DecodeCache<T> cache = make_cache<T>(config, std::max(capacity, x.rows()));
  for (std::size_t i = 0; i < x.rows(); ++i) append_token(cache, w, config, x.row(i));
  return cache;
}

template <typename T>
DecodeStepOutput<T> attend_explicit(const DecodeCache<T>& cache,
                                    const WeightSet<T>& w,
                                    const AttentionConfig& config,
                                    std::span<const T> x, DecodeProbe* probe) {
  check_step(cache, config, x);
  const std::size_t len = cache.length;
  const std::size_t dh = config.head_dim;
  DecodeStepOutput<T> step;
  for (int h = 0; h < config.n_heads; ++h) {
    std::vector<T> q = project_query(x, w.wq[h], h, probe);

    // Full K_h and V_h over the cached positions.
    std::vector<T> kbuf, vbuf;
    const T* keys = nullptr;
    const T* values = nullptr;
    switch (config.mechanism) {
      case Mechanism::kMHA:
      case Mechanism::kMQA:
      case Mechanism::kGQA: {
        const int g = config.kv_index(h);
        keys = cache.k[g].data();
        values = cache.v[g].data();
        break;
      }
      case Mechanism::kLRKV: {
        const std::size_t r = config.rank;
        kbuf = scratch<T>(probe, "K_h", h, len, dh);
        vbuf = scratch<T>(probe, "V_h", h, len, dh);
        auto rebuild = [&](const Matrix<T>& shared, const Matrix<T>& lat,
                           const Matrix<T>& basis, std::vector<T>& dst) {
          for (std::size_t j = 0; j < len; ++j) {
            const T* rj = lat.row(j).data();
            for (std::size_t a = 0; a < dh; ++a) {
              const T* ba = basis.row(a).data();
              Accum s = shared(j, a);
              for (std::size_t c = 0; c < r; ++c) s += Accum(rj[c]) * ba[c];
              dst[j * dh + a] = static_cast<T>(s);
            }
          }
          charge(probe, 2 * len * dh * r);
        };
        rebuild(cache.k[0], cache.rk[h], w.b_k[h], kbuf);
        rebuild(cache.v[0], cache.rv[h], w.b_v[h], vbuf);
        keys = kbuf.data();
        values = vbuf.data();
        break;
      }
      case Mechanism::kMLA: {
        const std::size_t dc = config.latent_dim;
        kbuf = scratch<T>(probe, "K_h", h, len, dh);
        vbuf = scratch<T>(probe, "V_h", h, len, dh);
        Matrix<T> zs(len, dc);
        std::copy_n(cache.z.data(), len * dc, zs.data());
        const Matrix<T> kh = matmul(zs, w.w_up_k[h]);
        const Matrix<T> vh = matmul(zs, w.w_up_v[h]);
        std::copy_n(kh.data(), len * dh, kbuf.data());
        std::copy_n(vh.data(), len * dh, vbuf.data());
        charge(probe, 2 * 2 * len * dc * dh);
        keys = kbuf.data();
        values = vbuf.data();
        break;
      }
    }

    if (config.qk_norm) {
      if (kbuf.empty()) {
        kbuf = scratch<T>(probe, "K_h", h, len, dh);
        std::copy_n(keys, len * dh, kbuf.data());
      }
      for (std::size_t j = 0; j < len; ++j)
        rms_normalize(std::span<T>(kbuf.data() + j * dh, dh));
      rms_normalize(std::span<T>(q));
      keys = kbuf.data();
    }

    std::vector<Accum> logits = scratch<Accum>(probe, "logits", h, 1, len);
    for (std::size_t j = 0; j < len; ++j) {
      const T* kj = keys + j * dh;
      Accum s = 0;
      for (std::size_t a = 0; a < dh; ++a) s += Accum(q[a]) * kj[a];
      logits[j] = s;
    }
    charge(probe, 2 * len * dh);
    const std::vector<Accum> p = normalize_logits(logits, config.scale(), h, probe);

    std::vector<Accum> acc = scratch<Accum>(probe, "out", h, 1, dh);
    for (std::size_t j = 0; j < len; ++j) {
      const T* vj = values + j * dh;
      for (std::size_t a = 0; a < dh; ++a) acc[a] += p[j] * vj[a];
    }
    charge(probe, 2 * len * dh);
    step.logits.push_back(std::move(logits));
    step.out.emplace_back(acc.begin(), acc.end());
  }
  finish(step);
  return step;
}

template <typename T>
DecodeStepOutput<T> attend_factored(const DecodeCache<T>& cache,
                                    const WeightSet<T>& w,
                                    const AttentionConfig& config,
                                    std::span<const T> x, DecodeProbe* probe) {
  if (config.qk_norm) {
    throw UnsupportedError(
        "factored decode is undefined with qk_norm on (normalization does not "
        "distribute over the shared/latent split)");
  }
  if (config.mechanism != Mechanism::kLRKV && config.mechanism != Mechanism::kMLA) {
    throw UnsupportedError("factored decode is not defined for " +
                           std::string(mechanism_name(config.mechanism)));
  }
  check_step(cache, config, x);
  const std::size_t len = cache.length;
  const std::size_t dh = config.head_dim;
  const Accum scale = config.scale();
  DecodeStepOutput<T> step;

  if (config.mechanism == Mechanism::kLRKV) {
    const std::size_t r = config.rank;
    const Matrix<T>& k_shared = cache.k[0];
    const Matrix<T>& v_shared = cache.v[0];
    for (int h = 0; h < config.n_heads; ++h) {
      const std::vector<T> q = project_query(x, w.wq[h], h, probe);
      const Matrix<T>& bk = w.b_k[h];
      const Matrix<T>& bv = w.b_v[h];
      const Matrix<T>& rk = cache.rk[h];
      const Matrix<T>& rv = cache.rv[h];

      // q B^K, the query seen through the residual basis.
      std::vector<Accum> qb = scratch<Accum>(probe, "qB", h, 1, r);
      for (std::size_t a = 0; a < dh; ++a) {
        const T* ba = bk.row(a).data();
        for (std::size_t c = 0; c < r; ++c) qb[c] += Accum(q[a]) * ba[c];
      }
      charge(probe, 2 * dh * r);

      std::vector<Accum> logits = scratch<Accum>(probe, "logits", h, 1, len);
      for (std::size_t j = 0; j < len; ++j) {
        const T* kj = k_shared.row(j).data();
        const T* rj = rk.row(j).data();
        Accum s = 0;
        for (std::size_t a = 0; a < dh; ++a) s += Accum(q[a]) * kj[a];
        for (std::size_t c = 0; c < r; ++c) s += qb[c] * rj[c];
        logits[j] = s;
      }
      charge(probe, 2 * len * (dh + r));
      const std::vector<Accum> p = normalize_logits(logits, scale, h, probe);

      std::vector<Accum> acc = scratch<Accum>(probe, "aV_shared", h, 1, dh);
      std::vector<Accum> ar = scratch<Accum>(probe, "aR", h, 1, r);
      for (std::size_t j = 0; j < len; ++j) {
        const T* vj = v_shared.row(j).data();
        const T* rj = rv.row(j).data();
        for (std::size_t a = 0; a < dh; ++a) acc[a] += p[j] * vj[a];
        for (std::size_t c = 0; c < r; ++c) ar[c] += p[j] * rj[c];
      }
      charge(probe, 2 * len * (dh + r));

      // Lift the r-dim value summary back through B^V.
      std::vector<T> out = scratch<T>(probe, "out", h, 1, dh);
      for (std::size_t a = 0; a < dh; ++a) {
        const T* ba = bv.row(a).data();
        Accum s = acc[a];
        for (std::size_t c = 0; c < r; ++c) s += ar[c] * ba[c];
        out[a] = static_cast<T>(s);
      }
      charge(probe, 2 * dh * r);
      step.logits.push_back(std::move(logits));
      step.out.push_back(std::move(out));
    }
  } else {
    const std::size_t dc = config.latent_dim;
    const Matrix<T>& z = cache.z;
    for (int h = 0; h < config.n_heads; ++h) {
      const std::vector<T> q = project_query(x, w.wq[h], h, probe);
      const Matrix<T>& up_k = w.w_up_k[h];
      const Matrix<T>& up_v = w.w_up_v[h];

      // q W_up^Kᵀ: the query absorbed into latent space.
      std::vector<Accum> qz = scratch<Accum>(probe, "qW_upK", h, 1, dc);
      for (std::size_t c = 0; c < dc; ++c) {
        const T* uc = up_k.row(c).data();
        Accum s = 0;
        for (std::size_t a = 0; a < dh; ++a) s += Accum(q[a]) * uc[a];
        qz[c] = s;
      }
      charge(probe, 2 * dc * dh);

      std::vector<Accum> logits = scratch<Accum>(probe, "logits", h, 1, len);
      for (std::size_t j = 0; j < len; ++j) {
        const T* zj = z.row(j).data();
        Accum s = 0;
        for (std::size_t c = 0; c < dc; ++c) s += qz[c] * zj[c];
        logits[j] = s;
      }
      charge(probe, 2 * len * dc);
      const std::vector<Accum> p = normalize_logits(logits, scale, h, probe);

      std::vector<Accum> az = scratch<Accum>(probe, "aZ", h, 1, dc);
      for (std::size_t j = 0; j < len; ++j) {
        const T* zj = z.row(j).data();
        for (std::size_t c = 0; c < dc; ++c) az[c] += p[j] * zj[c];
      }
      charge(probe, 2 * len * dc);

      std::vector<Accum> acc = scratch<Accum>(probe, "out", h, 1, dh);
      for (std::size_t c = 0; c < dc; ++c) {
        const T* uc = up_v.row(c).data();
        for (std::size_t a = 0; a < dh; ++a) acc[a] += az[c] * uc[a];
      }
      charge(probe, 2 * dc * dh);
      step.logits.push_back(std::move(logits));
      step.out.emplace_back(acc.begin(), acc.end());
    }
  }
  finish(step);
  return step;
}

template <typename T>
DecodeStepOutput<T> decode_explicit(DecodeCache<T>& cache, const WeightSet<T>& w,
                                    const AttentionConfig& config,
                                    std::span<const T> x, DecodeProbe* probe) {
  append_token(cache, w, config, x, probe);
  return attend_explicit(cache, w, config, x, probe);
}

template <typename T>
DecodeStepOutput<T> decode_factored(DecodeCache<T>& cache, const WeightSet<T>& w,
                                    const AttentionConfig& config,
                                    std::span<const T> x, DecodeProbe* probe) {
  if (!factored_decode_supported(config)) {
    // Reject before mutating the cache.
    return attend_factored(cache, w, config, x, probe);
  }
  append_token(cache, w, config, x, probe);
  return attend_factored(cache, w, config, x, probe);
}

template <typename T>
std::vector<EquivalenceRow> equivalence_report(const AttentionConfig& config,
                                               const RngSpec& seed, int tokens,
                                               int trials, int decode_steps) {
  if (tokens < 1) throw ParameterError("equivalence_report requires T >= 1");
  if (trials < 1) throw ParameterError("equivalence_report requires trials >= 1");
  if (decode_steps < 0) throw ParameterError("decode_steps must be >= 0");
  config.validate();
  const int steps = decode_steps == 0 ? tokens : std::min(decode_steps, tokens);
  const bool factored = factored_decode_supported(config);

  std::vector<EquivalenceRow> rows;
  for (int t = 0; t < trials; ++t) {
    const RngSpec wseed{derive_seed(seed.seed, 2 * t)};
    const WeightSet<T> w = init_weights<T>(config, wseed);
    NormalSampler input_rng(derive_seed(seed.seed, 2 * t + 1));
    Matrix<T> x(tokens, config.d_model);
    for (T& v : x.values()) v = static_cast<T>(input_rng.next());

    const std::size_t prompt = tokens - steps;
    DecodeCache<T> cache = prefill(w, config, x.top_rows(prompt), tokens);
    for (int s = 0; s < steps; ++s) {
      const std::span<const T> tok = x.row(prompt + s);
      append_token(cache, w, config, tok);

      EquivalenceRow row;
      row.trial = t;
      row.step = s;
      row.length = cache.length;
      row.factored_applicable = factored;
      DecodeProbe explicit_probe;
      const auto ex = attend_explicit(cache, w, config, tok, &explicit_probe);
      row.explicit_flops = explicit_probe.flops;
      row.explicit_transient_elements = explicit_probe.transient_elements();
      if (factored) {
        DecodeProbe factored_probe;
        const auto fa = attend_factored(cache, w, config, tok, &factored_probe);
        row.factored_flops = factored_probe.flops;
        row.factored_transient_elements = factored_probe.transient_elements();
        for (int h = 0; h < config.n_heads; ++h) {
          for (std::size_t j = 0; j < ex.logits[h].size(); ++j) {
            row.max_logit_diff = std::max(
                row.max_logit_diff, std::abs(ex.logits[h][j] - fa.logits[h][j]));
          }
          for (std::size_t a = 0; a < ex.out[h].size(); ++a) {
            row.max_output_diff =
                std::max(row.max_output_diff,
                         std::abs(Accum(ex.out[h][a]) - Accum(fa.out[h][a])));
          }
        }
      } else {
        row.max_logit_diff = std::numeric_limits<double>::quiet_NaN();
        row.max_output_diff = std::numeric_limits<double>::quiet_NaN();
      }
      rows.push_back(row);
    }
  }
  return rows;
}

#define LRKV_INSTANTIATE(T)                                                    \
  template struct DecodeCache<T>;                                              \
  template DecodeCache<T> make_cache<T>(const AttentionConfig&, std::size_t);  \
  template DecodeCache<T> prefill<T>(const WeightSet<T>&,                      \
                                     const AttentionConfig&, const Matrix<T>&, \
                                     std::size_t);                             \
  template void append_token<T>(DecodeCache<T>&, const WeightSet<T>&,          \
                                const AttentionConfig&, std::span<const T>,    \
                                DecodeProbe*);                                 \
  template DecodeStepOutput<T> attend_explicit<T>(                             \
      const DecodeCache<T>&, const WeightSet<T>&, const AttentionConfig&,      \
      std::span<const T>, DecodeProbe*);                                       \
  template DecodeStepOutput<T> attend_factored<T>(                             \
      const DecodeCache<T>&, const WeightSet<T>&, const AttentionConfig&,      \
      std::span<const T>, DecodeProbe*);                                       \
  template DecodeStepOutput<T> decode_explicit<T>(                             \
      DecodeCache<T>&, const WeightSet<T>&, const AttentionConfig&,            \
      std::span<const T>, DecodeProbe*);                                       \
  template DecodeStepOutput<T> decode_factored<T>(                             \
      DecodeCache<T>&, const WeightSet<T>&, const AttentionConfig&,            \
      std::span<const T>, DecodeProbe*);                                       \
  template std::vector<EquivalenceRow> equivalence_report<T>(                  \
      const AttentionConfig&, const RngSpec&, int, int, int);

LRKV_INSTANTIATE(float)
LRKV_INSTANTIATE(double)
#undef LRKV_INSTANTIATE

}  // namespace lrkv
