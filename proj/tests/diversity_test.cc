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

#include "lrkv/diversity.h"
#include "lrkv/errors.h"
#include "test_util.h"

namespace lrkv {
namespace {

using testing::make_config;
using testing::naive_matmul;
using testing::random_matrix;
using testing::random_orthogonal;

GramMatrix from_values(const Matrix<double>& v, bool normalized) {
  GramMatrix g;
  g.values = v;
  g.normalized = normalized;
  return g;
}

// Direct d×d construction of each form, then Frobenius inner products.
Matrix<double> direct_gram(const BilinearFormSet& f, bool normalize) {
  const int h = f.heads();
  std::vector<Matrix<double>> a;
  for (int i = 0; i < h; ++i) a.push_back(naive_matmul(f.query[i], transpose(f.key[i])));
  Matrix<double> g(h, h);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < h; ++j) {
      g(i, j) = frobenius_inner(a[i], a[j]);
      if (normalize) g(i, j) /= frobenius_norm(a[i]) * frobenius_norm(a[j]);
    }
  return g;
}

TEST_CASE("trace identity matches the direct Gram matrix") {
  for (Mechanism m : kAllMechanisms) {
    const auto c = make_config(m, 4, 6, 3, 8, 2);
    const auto w = init_weights<double>(c, RngSpec{3});
    const auto f = bilinear_forms(w, c);
    for (bool norm : {false, true}) {
      const auto want = direct_gram(f, norm);
      const auto got = gram(f, norm).values;
      CHECK(max_abs_diff(got, want) <= 1e-10 * std::max(1.0, frobenius_norm(want)));
    }
  }
}

TEST_CASE("forms are invariant to a per-head change of basis") {
  const auto c = make_config(Mechanism::kLRKV, 3, 5, 2);
  auto w = init_weights<double>(c, RngSpec{4});
  const auto before = bilinear_forms(w, c);
  // A_h = Wq R (Wk R)ᵀ for orthogonal R: rotate queries and the effective keys.
  const auto r = random_orthogonal(5, 6);
  for (auto& q : w.wq) q = matmul(q, r);
  w.wk[0] = matmul(w.wk[0], r);
  for (int h = 0; h < 3; ++h) w.b_k[h] = matmul_tn(r, w.b_k[h]);
  const auto after = bilinear_forms(w, c);
  for (int h = 0; h < 3; ++h) CHECK(max_abs_diff(after.form(h), before.form(h)) <= 1e-10);
  const auto d0 = diversity_report(init_weights<double>(c, RngSpec{4}), c);
  const auto d1 = diversity_report(w, c);
  CHECK(d1.centered_spectrum.effective_rank_abs ==
        doctest::Approx(d0.centered_spectrum.effective_rank_abs).epsilon(1e-9));
}

TEST_CASE("identical heads give an all-ones similarity") {
  const auto c = make_config(Mechanism::kMQA, 4, 4);
  auto w = init_weights<double>(c, RngSpec{5});
  for (auto& q : w.wq) q = w.wq[0];
  const auto g = gram(bilinear_forms(w, c), true).values;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(g(i, j) == doctest::Approx(1.0).epsilon(1e-12));
  const auto s = spectrum(from_values(g, true));
  CHECK(s.effective_rank_pct == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(s.n_components_for_90pct == 1);
  const auto centered = spectrum(center_gram(from_values(g, true)));
  CHECK(centered.degenerate);
  CHECK(centered.effective_rank_abs == 0.0);
}

TEST_CASE("orthogonal heads give the identity") {
  // Disjoint query blocks make the forms mutually orthogonal.
  const int h = 4, dh = 2, d = 8;
  BilinearFormSet f;
  for (int i = 0; i < h; ++i) {
    Matrix<double> q(d, dh), k(d, dh);
    for (int a = 0; a < dh; ++a) {
      q(i * dh + a, a) = 1.0;
      k(a, a) = 1.0;
    }
    f.query.push_back(q);
    f.key.push_back(k);
  }
  const auto g = gram(f, true);
  CHECK(max_abs_diff(g.values, Matrix<double>::identity(h)) <= 1e-14);
  const auto s = spectrum(g);
  CHECK(s.effective_rank_pct == doctest::Approx(1.0).epsilon(1e-12));
  const auto cs = spectrum(center_gram(g));
  CHECK(cs.effective_rank_abs == doctest::Approx(h - 1).epsilon(0.02));
}

TEST_CASE("zero-norm heads") {
  const auto c = make_config(Mechanism::kMHA, 3, 4);
  auto w = init_weights<double>(c, RngSpec{6});
  w.wq[1] = Matrix<double>(12, 4);
  const auto f = bilinear_forms(w, c);
  CHECK(frobenius_norm(f.form(1)) == 0.0);
  try {
    gram(f, true);
    FAIL("expected DegenerateHeadError");
  } catch (const DegenerateHeadError& e) {
    CHECK(e.head() == 1);
  }
  CHECK_NOTHROW(gram(f, false));
  const auto r = diversity_report(w, c);
  CHECK(r.degenerate_heads == std::vector<int>{1});
  for (std::size_t j = 0; j < 3; ++j) CHECK(r.similarity.values(1, j) == 0.0);
}

TEST_CASE("double centering") {
  const auto g = gram(bilinear_forms(init_weights<double>(make_config(Mechanism::kMHA, 5, 3),
                                                          RngSpec{7}),
                                     make_config(Mechanism::kMHA, 5, 3)),
                      true);
  const auto c = center_gram(g);
  CHECK(c.centered);
  for (std::size_t i = 0; i < 5; ++i) {
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      row += c.values(i, j);
      col += c.values(j, i);
    }
    CHECK(std::abs(row) <= 1e-12);
    CHECK(std::abs(col) <= 1e-12);
  }
  const auto twice = center_gram(c);
  CHECK(max_abs_diff(twice.values, c.values) <= 1e-12);
  // Independent formula: J G J with J = I - 11ᵀ/H.
  Matrix<double> j = Matrix<double>::identity(5);
  for (auto& v : j.values()) v -= 0.2;
  CHECK(max_abs_diff(naive_matmul(naive_matmul(j, g.values), j), c.values) <= 1e-12);

  GramMatrix one;
  one.values = Matrix<double>(1, 1, 1.0);
  CHECK(center_gram(one).values(0, 0) == 0.0);
}

TEST_CASE("spectrum fixtures") {
  const auto flat = spectrum_from_eigenvalues({1.0, 1.0, 1.0, 1.0});
  CHECK(flat.effective_rank_abs == doctest::Approx(4.0));
  CHECK(flat.effective_rank_pct == doctest::Approx(1.0));
  CHECK(flat.n_components_for_90pct == 4);

  const auto spike = spectrum_from_eigenvalues({2.0, 0.0, 0.0});
  CHECK(spike.effective_rank_abs == doctest::Approx(1.0));
  CHECK(spike.cumulative_variance.back() == doctest::Approx(1.0));

  // exp(-(0.5 ln 0.5 + 2 * 0.25 ln 0.25)) = 2^1.5.
  const auto mix = spectrum_from_eigenvalues({0.25, 0.5, 0.25});
  CHECK(mix.eigenvalues.front() == 0.5);
  CHECK(mix.effective_rank_abs == doctest::Approx(std::pow(2.0, 1.5)).epsilon(1e-12));
  CHECK(mix.n_components_for_90pct == 3);

  const auto tiny_negative = spectrum_from_eigenvalues({1.0, -1e-14});
  CHECK(tiny_negative.eigenvalues[1] == 0.0);
  CHECK_THROWS_AS(spectrum_from_eigenvalues({1.0, -0.1}), NumericError);

  const auto zero = spectrum_from_eigenvalues({0.0, 0.0});
  CHECK(zero.degenerate);
  CHECK(zero.effective_rank_pct == 0.0);
}

TEST_CASE("magnitude report") {
  const auto c = make_config(Mechanism::kLRKV, 3, 4, 2);
  auto w = init_weights<double>(c, RngSpec{8});
  const auto rows = magnitude_report(w, c);
  CHECK(rows.size() == 6);
  for (const auto& r : rows) {
    CHECK(r.residual_norm / r.shared_norm == doctest::Approx(0.1).epsilon(1e-6));
    CHECK(r.total_norm <= r.shared_norm + r.residual_norm + 1e-12);
    CHECK(r.total_norm >= std::abs(r.shared_norm - r.residual_norm) - 1e-12);
    CHECK(std::abs(r.cosine) <= 1.0);
  }
  for (auto& u : w.u_v) u = Matrix<double>(u.rows(), u.cols());
  for (const auto& r : magnitude_report(w, c))
    if (r.path == 'V') {
      CHECK(r.residual_norm == 0.0);
      CHECK(r.cosine == 0.0);
      CHECK(r.total_norm == r.shared_norm);
    }
  const auto mc = make_config(Mechanism::kMHA, 3, 4);
  CHECK_THROWS_AS(magnitude_report(init_weights<double>(mc, RngSpec{}), mc), UnsupportedError);
}

TEST_CASE("factorization gap") {
  const auto mc = make_config(Mechanism::kMHA, 2, 4);
  const auto lc = make_config(Mechanism::kLRKV, 2, 4, 2);
  const auto ref = init_weights<double>(mc, RngSpec{9});
  auto w = init_weights<double>(lc, RngSpec{10});

  SUBCASE("optimal factors give ratio 1") {
    for (int h = 0; h < 2; ++h) {
      const auto k = svd_truncate(ref.wk[h] - w.wk[0], 2);
      const auto v = svd_truncate(ref.wv[h] - w.wv[0], 2);
      w.u_k[h] = k.left;
      w.b_k[h] = k.right;
      w.u_v[h] = v.left;
      w.b_v[h] = v.right;
    }
    for (const auto& r : factorization_gap(w, lc, ref, mc))
      CHECK(r.ratio == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("random factors never beat the optimum") {
    for (std::uint64_t t = 0; t < 1000; ++t) {
      for (int h = 0; h < 2; ++h) {
        w.u_k[h] = random_matrix(8, 2, 2 * t + 100);
        w.b_k[h] = random_matrix(4, 2, 2 * t + 101);
      }
      for (const auto& r : factorization_gap(w, lc, ref, mc, 2))
        if (r.path == 'K') CHECK(r.ratio >= 1.0 - 1e-12);
    }
  }
  SUBCASE("zero residual") {
    for (auto& u : w.u_k) u = Matrix<double>(u.rows(), u.cols());
    for (const auto& r : factorization_gap(w, lc, ref, mc))
      if (r.path == 'K')
        CHECK(r.learned_error ==
              doctest::Approx(frobenius_norm(ref.wk[r.head] - w.wk[0])).epsilon(1e-12));
  }
  SUBCASE("dimension mismatch") {
    const auto other = make_config(Mechanism::kMHA, 2, 3);
    CHECK_THROWS_AS(factorization_gap(w, lc, init_weights<double>(other, RngSpec{}), other),
                    ParameterError);
  }
}

}  // namespace
}  // namespace lrkv
