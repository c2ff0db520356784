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

#ifndef LRKV_WEIGHTS_H_
#define LRKV_WEIGHTS_H_

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lrkv/config.h"
#include "lrkv/matrix.h"
#include "lrkv/rng.h"

namespace lrkv {

// Projection weights for one attention layer. Which members are populated
// depends on the mechanism:
//   MHA   wk/wv: H matrices d×d_h
//   MQA   wk/wv: 1 shared matrix d×d_h
//   GQA   wk/wv: G matrices d×d_h, head h uses group floor(h*G/H)
//   MLA   w_down: d×d_c, w_up_k/w_up_v: H matrices d_c×d_h
//   LRKV  wk/wv: 1 shared base d×d_h, u_k/u_v: H × (d×r), b_k/b_v: H × (d_h×r)
// wq always holds H matrices d×d_h. No biases anywhere.
template <typename T>
struct WeightSet {
  std::vector<Matrix<T>> wq;
  std::vector<Matrix<T>> wk;
  std::vector<Matrix<T>> wv;
  Matrix<T> w_down;
  std::vector<Matrix<T>> w_up_k;
  std::vector<Matrix<T>> w_up_v;
  std::vector<Matrix<T>> u_k;
  std::vector<Matrix<T>> u_v;
  std::vector<Matrix<T>> b_k;
  std::vector<Matrix<T>> b_v;

  const Matrix<T>& shared_k() const { return wk.at(0); }
  const Matrix<T>& shared_v() const { return wv.at(0); }

  // Visits every populated tensor with a stable name ("wq.0", "w_down", ...)
  // in a fixed order.
  void for_each_tensor(
      const std::function<void(const std::string&, const Matrix<T>&)>& fn) const;
  void for_each_tensor(
      const std::function<void(const std::string&, Matrix<T>&)>& fn);

  // Throws DimensionError if any tensor has the wrong count or shape for
  // `config`, NumericError if any entry is non-finite.
  void check(const AttentionConfig& config) const;

  template <typename U>
  WeightSet<U> cast() const;

  bool operator==(const WeightSet&) const = default;
};

// Kaiming-style draws (std sqrt(2/fan_in)); LRKV residuals are rescaled so
// that ‖U_h B_hᵀ‖_F = 0.1 ‖W_shared‖_F exactly, per head and per K/V path.
// All draws happen in double, so float and double weight sets from the same
// seed agree up to the final rounding.
template <typename T>
WeightSet<T> init_weights(const AttentionConfig& config, const RngSpec& rng);

inline constexpr double kInitResidualRatio = 0.1;

// (W_h^K, W_h^V) for `head`, each d×d_h.
template <typename T>
std::pair<Matrix<T>, Matrix<T>> effective_kv_weights(const WeightSet<T>& w,
                                                     const AttentionConfig& config,
                                                     int head);

// U·Bᵀ (d×d_h); a zero matrix when r = 0.
template <typename T>
Matrix<T> low_rank_product(const Matrix<T>& u, const Matrix<T>& b,
                           std::size_t d, std::size_t d_h);

template <typename T>
template <typename U>
WeightSet<U> WeightSet<T>::cast() const {
  auto conv = [](const std::vector<Matrix<T>>& v) {
    std::vector<Matrix<U>> out;
    out.reserve(v.size());
    for (const auto& m : v) out.push_back(m.template cast<U>());
    return out;
  };
  WeightSet<U> out;
  out.wq = conv(wq);
  out.wk = conv(wk);
  out.wv = conv(wv);
  out.w_down = w_down.template cast<U>();
  out.w_up_k = conv(w_up_k);
  out.w_up_v = conv(w_up_v);
  out.u_k = conv(u_k);
  out.u_v = conv(u_v);
  out.b_k = conv(b_k);
  out.b_v = conv(b_v);
  return out;
}

}  // namespace lrkv

#endif  // LRKV_WEIGHTS_H_
