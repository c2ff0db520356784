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

#include "lrkv/weights.h"

#include <cmath>
#include <string>

#include "lrkv/errors.h"

namespace lrkv {
namespace {

Matrix<double> draw(NormalSampler& rng, std::size_t rows, std::size_t cols,
                    double stddev) {
  Matrix<double> m(rows, cols);
  for (double& v : m.values()) v = rng.next() * stddev;
  return m;
}

template <typename T>
void visit_list(const std::string& prefix, std::vector<Matrix<T>>& list,
                const std::function<void(const std::string&, Matrix<T>&)>& fn) {
  for (std::size_t i = 0; i < list.size(); ++i)
    fn(prefix + "." + std::to_string(i), list[i]);
}

void expect_shape(const std::string& name, std::size_t rows, std::size_t cols,
                  std::size_t want_rows, std::size_t want_cols) {
  if (rows != want_rows || cols != want_cols) {
    throw DimensionError(name + " has shape " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", expected " +
                         std::to_string(want_rows) + "x" +
                         std::to_string(want_cols));
  }
}

template <typename T>
void expect_list(const std::string& name, const std::vector<Matrix<T>>& list,
                 std::size_t count, std::size_t rows, std::size_t cols) {
  if (list.size() != count) {
    throw DimensionError(name + " holds " + std::to_string(list.size()) +
                         " matrices, expected " + std::to_string(count));
  }
  for (std::size_t i = 0; i < list.size(); ++i) {
    expect_shape(name + "." + std::to_string(i), list[i].rows(),
                 list[i].cols(), rows, cols);
  }
}

// Residual pair (U, B) with ‖U Bᵀ‖_F = ratio * shared_norm; only U is scaled.
void draw_residual(NormalSampler& rng, std::size_t d, std::size_t d_h,
                   std::size_t r, double shared_norm, Matrix<double>& u,
                   Matrix<double>& b) {
  const double stddev = r > 0 ? 1.0 / std::sqrt(double(r)) : 0.0;
  u = draw(rng, d, r, stddev);
  b = draw(rng, d_h, r, stddev);
  if (r == 0) return;
  const double current = frobenius_norm(matmul_nt(u, b));
  if (current > 0.0) {
    const double factor = kInitResidualRatio * shared_norm / current;
    for (double& v : u.values()) v *= factor;
  }
}

}  // namespace

template <typename T>
void WeightSet<T>::for_each_tensor(
    const std::function<void(const std::string&, Matrix<T>&)>& fn) {
  visit_list("wq", wq, fn);
  visit_list("wk", wk, fn);
  visit_list("wv", wv, fn);
  if (!w_down.empty()) fn("w_down", w_down);
  visit_list("w_up_k", w_up_k, fn);
  visit_list("w_up_v", w_up_v, fn);
  visit_list("u_k", u_k, fn);
  visit_list("u_v", u_v, fn);
  visit_list("b_k", b_k, fn);
  visit_list("b_v", b_v, fn);
}

template <typename T>
void WeightSet<T>::for_each_tensor(
    const std::function<void(const std::string&, const Matrix<T>&)>& fn) const {
  const_cast<WeightSet*>(this)->for_each_tensor(
      [&fn](const std::string& name, Matrix<T>& m) { fn(name, m); });
}

template <typename T>
void WeightSet<T>::check(const AttentionConfig& config) const {
  const std::size_t d = config.d_model;
  const std::size_t h = config.n_heads;
  const std::size_t dh = config.head_dim;
  expect_list("wq", wq, h, d, dh);
  const std::size_t kv = config.kv_projection_count();
  expect_list("wk", wk, kv, d, dh);
  expect_list("wv", wv, kv, d, dh);
  if (config.mechanism == Mechanism::kMLA) {
    const std::size_t dc = config.latent_dim;
    expect_shape("w_down", w_down.rows(), w_down.cols(), d, dc);
    expect_list("w_up_k", w_up_k, h, dc, dh);
    expect_list("w_up_v", w_up_v, h, dc, dh);
  }
  if (config.mechanism == Mechanism::kLRKV) {
    const std::size_t r = config.rank;
    expect_list("u_k", u_k, h, d, r);
    expect_list("u_v", u_v, h, d, r);
    expect_list("b_k", b_k, h, dh, r);
    expect_list("b_v", b_v, h, dh, r);
  }
  for_each_tensor([](const std::string& name, const Matrix<T>& m) {
    if (!all_finite(m)) throw NumericError(name + " has non-finite entries");
  });
}

template <typename T>
WeightSet<T> init_weights(const AttentionConfig& config, const RngSpec& spec) {
  config.validate();
  NormalSampler rng(spec);
  const std::size_t d = config.d_model;
  const std::size_t h = config.n_heads;
  const std::size_t dh = config.head_dim;
  const double std_d = std::sqrt(2.0 / double(d));

  WeightSet<T> w;
  for (std::size_t i = 0; i < h; ++i)
    w.wq.push_back(draw(rng, d, dh, std_d).template cast<T>());

  const int kv = config.kv_projection_count();
  std::vector<Matrix<double>> wk, wv;
  for (int i = 0; i < kv; ++i) wk.push_back(draw(rng, d, dh, std_d));
  for (int i = 0; i < kv; ++i) wv.push_back(draw(rng, d, dh, std_d));
  for (const auto& m : wk) w.wk.push_back(m.template cast<T>());
  for (const auto& m : wv) w.wv.push_back(m.template cast<T>());

  if (config.mechanism == Mechanism::kMLA) {
    const std::size_t dc = config.latent_dim;
    const double std_c = std::sqrt(2.0 / double(dc));
    w.w_down = draw(rng, d, dc, std_d).template cast<T>();
    for (std::size_t i = 0; i < h; ++i)
      w.w_up_k.push_back(draw(rng, dc, dh, std_c).template cast<T>());
    for (std::size_t i = 0; i < h; ++i)
      w.w_up_v.push_back(draw(rng, dc, dh, std_c).template cast<T>());
  }

  if (config.mechanism == Mechanism::kLRKV) {
    const std::size_t r = config.rank;
    const double norm_k = frobenius_norm(wk[0]);
    const double norm_v = frobenius_norm(wv[0]);
    Matrix<double> u, b;
    for (std::size_t i = 0; i < h; ++i) {
      draw_residual(rng, d, dh, r, norm_k, u, b);
      w.u_k.push_back(u.template cast<T>());
      w.b_k.push_back(b.template cast<T>());
      draw_residual(rng, d, dh, r, norm_v, u, b);
      w.u_v.push_back(u.template cast<T>());
      w.b_v.push_back(b.template cast<T>());
    }
  }
  return w;
}

template <typename T>
Matrix<T> low_rank_product(const Matrix<T>& u, const Matrix<T>& b,
                           std::size_t d, std::size_t d_h) {
  if (u.cols() != b.cols() || u.rows() != d || b.rows() != d_h) {
    throw DimensionError("low_rank_product: factor shapes " +
                         std::to_string(u.rows()) + "x" +
                         std::to_string(u.cols()) + " and " +
                         std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + " do not form a " +
                         std::to_string(d) + "x" + std::to_string(d_h) +
                         " product");
  }
  return matmul_nt(u, b);
}

template <typename T>
std::pair<Matrix<T>, Matrix<T>> effective_kv_weights(
    const WeightSet<T>& w, const AttentionConfig& config, int head) {
  if (head < 0 || head >= config.n_heads) {
    throw IndexError("head " + std::to_string(head) + " out of range [0, " +
                     std::to_string(config.n_heads) + ")");
  }
  const std::size_t d = config.d_model;
  const std::size_t dh = config.head_dim;
  switch (config.mechanism) {
    case Mechanism::kMHA:
    case Mechanism::kMQA:
    case Mechanism::kGQA: {
      const int g = config.kv_index(head);
      return {w.wk.at(g), w.wv.at(g)};
    }
    case Mechanism::kMLA:
      return {matmul(w.w_down, w.w_up_k.at(head)),
              matmul(w.w_down, w.w_up_v.at(head))};
    case Mechanism::kLRKV:
      return {w.shared_k() + low_rank_product(w.u_k.at(head), w.b_k.at(head), d, dh),
              w.shared_v() + low_rank_product(w.u_v.at(head), w.b_v.at(head), d, dh)};
  }
  throw UnsupportedError("unknown mechanism");
}

#define LRKV_INSTANTIATE(T)                                                  \
  template struct WeightSet<T>;                                              \
  template WeightSet<T> init_weights<T>(const AttentionConfig&,              \
                                        const RngSpec&);                     \
  template std::pair<Matrix<T>, Matrix<T>> effective_kv_weights<T>(          \
      const WeightSet<T>&, const AttentionConfig&, int);                     \
  template Matrix<T> low_rank_product<T>(const Matrix<T>&, const Matrix<T>&, \
                                         std::size_t, std::size_t);

LRKV_INSTANTIATE(float)
LRKV_INSTANTIATE(double)
#undef LRKV_INSTANTIATE

}  // namespace lrkv
