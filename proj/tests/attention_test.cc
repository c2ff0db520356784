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

#include <doctest.h>

#include <cmath>
#include <vector>

#include "lrkv/attention.h"
#include "lrkv/errors.h"
#include "lrkv/linalg.h"
#include "lrkv/weights.h"
#include "test_util.h"

namespace lrkv {
namespace {

using testing::finite_difference;
using testing::make_config;
using testing::naive_matmul;
using testing::random_matrix;
using testing::relative_error;

// Straight-line causal attention built from the effective per-head matrices.
Matrix<double> reference_attention(const WeightSet<double>& w, const AttentionConfig& c,
                                   const Matrix<double>& x) {
  const std::size_t t = x.rows(), dh = c.head_dim;
  Matrix<double> out(t, c.n_heads * dh);
  for (int h = 0; h < c.n_heads; ++h) {
    Matrix<double> wk, wv;
    if (c.mechanism == Mechanism::kLRKV) {
      wk = w.wk[0] + naive_matmul(w.u_k[h], transpose(w.b_k[h]));
      wv = w.wv[0] + naive_matmul(w.u_v[h], transpose(w.b_v[h]));
    } else if (c.mechanism == Mechanism::kMLA) {
      wk = naive_matmul(w.w_down, w.w_up_k[h]);
      wv = naive_matmul(w.w_down, w.w_up_v[h]);
    } else {
      wk = w.wk[c.kv_index(h)];
      wv = w.wv[c.kv_index(h)];
    }
    auto q = naive_matmul(x, w.wq[h]);
    auto k = naive_matmul(x, wk);
    const auto v = naive_matmul(x, wv);
    if (c.qk_norm) {
      for (auto* m : {&q, &k})
        for (std::size_t i = 0; i < t; ++i) {
          double ms = 0.0;
          for (std::size_t a = 0; a < dh; ++a) ms += (*m)(i, a) * (*m)(i, a);
          const double inv = 1.0 / std::sqrt(ms / dh + 1e-6);
          for (std::size_t a = 0; a < dh; ++a) (*m)(i, a) *= inv;
        }
    }
    for (std::size_t i = 0; i < t; ++i) {
      std::vector<double> s(i + 1);
      double peak = -INFINITY;
      for (std::size_t j = 0; j <= i; ++j) {
        double dot = 0.0;
        for (std::size_t a = 0; a < dh; ++a) dot += q(i, a) * k(j, a);
        s[j] = dot / std::sqrt(double(dh));
        peak = std::max(peak, s[j]);
      }
      double z = 0.0;
      for (double& e : s) z += (e = std::exp(e - peak));
      for (std::size_t a = 0; a < dh; ++a) {
        double acc = 0.0;
        for (std::size_t j = 0; j <= i; ++j) acc += s[j] / z * v(j, a);
        out(i, h * dh + a) = acc;
      }
    }
  }
  return out;
}

TEST_CASE("forward attention matches a direct evaluation for every mechanism") {
  for (Mechanism m : kAllMechanisms) {
    for (bool norm : {false, true}) {
      auto c = make_config(m, 4, 6, 3, 5, 2);
      c.qk_norm = norm;
      const auto w = init_weights<double>(c, RngSpec{11});
      const auto x = random_matrix(7, c.d_model, 12);
      CHECK(max_abs_diff(forward_attention(w, c, x), reference_attention(w, c, x)) < 1e-12);
    }
  }
}

TEST_CASE("single token returns its own value row") {
  const auto c = make_config(Mechanism::kLRKV, 2, 4, 2);
  const auto w = init_weights<double>(c, RngSpec{1});
  const auto x = random_matrix(1, c.d_model, 2);
  const auto out = forward_attention(w, c, x);
  for (int h = 0; h < 2; ++h) {
    const auto v = matmul(x, effective_kv_weights(w, c, h).second);
    for (int a = 0; a < 4; ++a) CHECK(out(0, h * 4 + a) == doctest::Approx(v(0, a)).epsilon(1e-12));
  }
}

TEST_CASE("identical tokens attend uniformly") {
  const auto c = make_config(Mechanism::kMHA, 2, 4);
  const auto w = init_weights<double>(c, RngSpec{3});
  const auto row = random_matrix(1, c.d_model, 4);
  Matrix<double> x(5, c.d_model);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) = row(0, j);
  const auto trace = forward_attention_traced(w, c, x);
  for (int h = 0; h < 2; ++h)
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j <= i; ++j)
        CHECK(trace.weights[h](i, j) == doctest::Approx(1.0 / (i + 1)).epsilon(1e-12));
}

TEST_CASE("attention weights are causal and row-stochastic") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto c = make_config(Mechanism::kLRKV, 3, 4, 2);
    const auto w = init_weights<double>(c, RngSpec{seed});
    const auto x = random_matrix(9, c.d_model, seed + 100, 3.0);
    const auto trace = forward_attention_traced(w, c, x);
    for (const auto& a : trace.weights)
      for (std::size_t i = 0; i < a.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) {
          CHECK(a(i, j) >= 0.0);
          if (j > i) CHECK(a(i, j) == 0.0);
          sum += a(i, j);
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
      }
  }
}

TEST_CASE("LRKV with r = 0 equals MQA with the same base") {
  const auto lc = make_config(Mechanism::kLRKV, 3, 4, 0);
  const auto mc = make_config(Mechanism::kMQA, 3, 4);
  const auto lw = init_weights<double>(lc, RngSpec{8});
  WeightSet<double> mw;
  mw.wq = lw.wq;
  mw.wk = lw.wk;
  mw.wv = lw.wv;
  const auto x = random_matrix(6, lc.d_model, 9);
  CHECK(forward_attention(lw, lc, x) == forward_attention(mw, mc, x));
}

TEST_CASE("LRKV at r = d_h represents any MHA layer") {
  const auto mc = make_config(Mechanism::kMHA, 2, 4);  // d = 8
  const auto lc = make_config(Mechanism::kLRKV, 2, 4, 4);
  const auto mw = init_weights<double>(mc, RngSpec{21});
  auto lw = init_weights<double>(lc, RngSpec{22});
  lw.wq = mw.wq;
  // Fit each head residual W_h - W_shared exactly with a rank-d_h SVD.
  for (int h = 0; h < 2; ++h) {
    const auto fk = svd_truncate(mw.wk[h] - lw.wk[0], 4);
    const auto fv = svd_truncate(mw.wv[h] - lw.wv[0], 4);
    lw.u_k[h] = fk.left;
    lw.b_k[h] = fk.right;
    lw.u_v[h] = fv.left;
    lw.b_v[h] = fv.right;
  }
  const auto x = random_matrix(5, 8, 23);
  CHECK(max_abs_diff(forward_attention(lw, lc, x), forward_attention(mw, mc, x)) <= 1e-6);
}

TEST_CASE("forward attention rejects bad input") {
  const auto c = make_config(Mechanism::kMHA, 2, 2);
  const auto w = init_weights<double>(c, RngSpec{1});
  CHECK_THROWS_AS(forward_attention(w, c, Matrix<double>(0, 4)), DimensionError);
  CHECK_THROWS_AS(forward_attention(w, c, Matrix<double>(2, 3)), DimensionError);
  Matrix<double> x(2, 4);
  x(1, 1) = INFINITY;
  CHECK_THROWS_AS(forward_attention(w, c, x), NumericError);
}

TEST_CASE("rms normalization") {
  std::vector<double> row = {3.0, -4.0, 0.0, 12.0};
  rms_normalize(std::span<double>(row));
  double ms = 0.0;
  for (double v : row) ms += v * v;
  CHECK(ms / 4 == doctest::Approx(1.0).epsilon(1e-6));
  std::vector<double> zero(3, 0.0);
  rms_normalize(std::span<double>(zero));
  for (double v : zero) CHECK(v == 0.0);
}

TEST_CASE("softmax is shift invariant and stable for large logits") {
  const std::vector<Accum> a = {1.0, 2.0, 3.0};
  const std::vector<Accum> b = {1001.0, 1002.0, 1003.0};
  const auto pa = softmax(a), pb = softmax(b);
  for (int i = 0; i < 3; ++i) CHECK(pa[i] == doctest::Approx(pb[i]).epsilon(1e-14));
  CHECK(pa[2] == doctest::Approx(std::exp(2.0) / (1 + std::exp(1.0) + std::exp(2.0))));
}

// Loss = <G, X W_h> for the key path, W_h = W_shared + U Bᵀ.
double key_loss(const Matrix<double>& x, const Matrix<double>& g, const Matrix<double>& shared,
                const Matrix<double>& u, const Matrix<double>& b) {
  return frobenius_inner(naive_matmul(x, shared + naive_matmul(u, transpose(b))), g);
}

TEST_CASE("projection gradients match finite differences") {
  const auto c = make_config(Mechanism::kLRKV, 2, 4, 2);
  const auto w = init_weights<double>(c, RngSpec{31});
  const auto x = random_matrix(3, c.d_model, 32);
  const auto g = random_matrix(3, 4, 33);
  for (int h = 0; h < 2; ++h) {
    const auto grad = projection_backward(w, c, x, g, h, KvPath::kKey);
    const auto& s = w.wk[0];
    const auto& u = w.u_k[h];
    const auto& b = w.b_k[h];
    const auto fd_s = finite_difference(s, 1e-5, [&](const Matrix<double>& p) {
      return key_loss(x, g, p, u, b);
    });
    const auto fd_u = finite_difference(u, 1e-5, [&](const Matrix<double>& p) {
      return key_loss(x, g, s, p, b);
    });
    const auto fd_b = finite_difference(b, 1e-5, [&](const Matrix<double>& p) {
      return key_loss(x, g, s, u, p);
    });
    CHECK(relative_error(grad.shared, fd_s) <= 1e-6);
    CHECK(relative_error(grad.u, fd_u) <= 1e-6);
    CHECK(relative_error(grad.b, fd_b) <= 1e-6);
  }
}

TEST_CASE("shared gradient sums the per-head contributions") {
  const auto c = make_config(Mechanism::kLRKV, 3, 4, 2);
  const auto w = init_weights<double>(c, RngSpec{41});
  const auto x = random_matrix(4, c.d_model, 42);
  std::vector<Matrix<double>> g;
  for (int h = 0; h < 3; ++h) g.push_back(random_matrix(4, 4, 43 + h));
  Matrix<double> total(c.d_model, 4);
  for (int h = 0; h < 3; ++h)
    total = total + projection_backward(w, c, x, g[h], h, KvPath::kValue).shared;
  // Loss summed over heads; finite differences on the shared value base.
  const auto fd = finite_difference(w.wv[0], 1e-5, [&](const Matrix<double>& p) {
    double sum = 0.0;
    for (int h = 0; h < 3; ++h) sum += key_loss(x, g[h], p, w.u_v[h], w.b_v[h]);
    return sum;
  });
  CHECK(relative_error(total, fd) <= 1e-4);
}

TEST_CASE("projection gradient edge cases") {
  const auto c = make_config(Mechanism::kLRKV, 2, 4, 2);
  const auto w = init_weights<double>(c, RngSpec{51});
  const auto x = random_matrix(3, c.d_model, 52);
  const auto zero = projection_backward(w, c, x, Matrix<double>(3, 4), 0);
  CHECK(frobenius_norm(zero.shared) == 0.0);
  CHECK(frobenius_norm(zero.u) == 0.0);
  CHECK(frobenius_norm(zero.b) == 0.0);

  const auto c0 = make_config(Mechanism::kLRKV, 2, 4, 0);
  const auto w0 = init_weights<double>(c0, RngSpec{53});
  const auto g = random_matrix(3, 4, 54);
  const auto r0 = projection_backward(w0, c0, x, g, 1);
  CHECK(r0.u.cols() == 0);
  CHECK(r0.b.cols() == 0);
  CHECK(max_abs_diff(r0.shared, naive_matmul(transpose(x), g)) < 1e-12);

  CHECK_THROWS_AS(projection_backward(w, c, x, g, 2), IndexError);
  const auto mc = make_config(Mechanism::kMHA, 2, 4);
  CHECK_THROWS_AS(projection_backward(init_weights<double>(mc, RngSpec{}), mc, x, g, 0),
                  UnsupportedError);
}

}  // namespace
}  // namespace lrkv
