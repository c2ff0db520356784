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

#include "lrkv/diversity.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lrkv/errors.h"

namespace lrkv {
namespace {

// tr(M1 · M2) without forming the product.
double trace_of_product(const Matrix<double>& m1, const Matrix<double>& m2) {
  double s = 0.0;
  for (std::size_t a = 0; a < m1.rows(); ++a)
    for (std::size_t b = 0; b < m1.cols(); ++b) s += m1(a, b) * m2(b, a);
  return s;
}

Matrix<double> raw_inner_products(const BilinearFormSet& f) {
  const int h = f.heads();
  Matrix<double> g(h, h);
  for (int i = 0; i < h; ++i) {
    for (int j = i; j < h; ++j) {
      const Matrix<double> qq = matmul_tn(f.query[i], f.query[j]);  // Qiᵀ Qj
      const Matrix<double> kk = matmul_tn(f.key[j], f.key[i]);      // Kjᵀ Ki
      g(i, j) = g(j, i) = trace_of_product(qq, kk);
    }
  }
  return g;
}

}  // namespace

Matrix<double> BilinearFormSet::form(int head) const {
  return matmul_nt(query.at(head), key.at(head));
}

template <typename T>
BilinearFormSet bilinear_forms(const WeightSet<T>& w, const AttentionConfig& config) {
  w.check(config);
  BilinearFormSet f;
  for (int h = 0; h < config.n_heads; ++h) {
    f.query.push_back(w.wq[h].template cast<double>());
    f.key.push_back(effective_kv_weights(w, config, h).first.template cast<double>());
  }
  return f;
}

GramMatrix gram(const BilinearFormSet& forms, bool normalize) {
  if (forms.heads() < 1) throw ParameterError("gram requires at least one head");
  GramMatrix g{raw_inner_products(forms), normalize, false};
  if (!normalize) return g;
  const int h = forms.heads();
  std::vector<double> norms(h);
  for (int i = 0; i < h; ++i) {
    norms[i] = std::sqrt(std::max(g.values(i, i), 0.0));
    if (norms[i] == 0.0) {
      throw DegenerateHeadError(
          i, "head " + std::to_string(i) + " has a zero bilinear form");
    }
  }
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < h; ++j) g.values(i, j) /= norms[i] * norms[j];
  return g;
}

GramMatrix center_gram(const GramMatrix& g) {
  const std::size_t n = g.values.rows();
  if (g.values.cols() != n) throw DimensionError("center_gram: matrix is not square");
  std::vector<double> row_mean(n, 0.0), col_mean(n, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      row_mean[i] += g.values(i, j);
      col_mean[j] += g.values(i, j);
      grand += g.values(i, j);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    row_mean[i] /= double(n);
    col_mean[i] /= double(n);
  }
  grand /= double(n) * double(n);
  GramMatrix out{Matrix<double>(n, n), g.normalized, true};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out.values(i, j) = g.values(i, j) - row_mean[i] - col_mean[j] + grand;
  return out;
}

SpectrumReport spectrum_from_eigenvalues(std::vector<double> eigenvalues) {
  std::sort(eigenvalues.begin(), eigenvalues.end(), std::greater<>());
  const double peak = eigenvalues.empty() ? 0.0 : std::abs(eigenvalues.front());
  const double floor = -kNegativeEigenTolerance * std::max(1.0, peak);
  for (double& l : eigenvalues) {
    if (l < floor) {
      throw NumericError("eigenvalue " + std::to_string(l) +
                         " is negative beyond tolerance; matrix is not PSD");
    }
    l = std::max(l, 0.0);
  }

  SpectrumReport s;
  s.eigenvalues = eigenvalues;
  const std::size_t n = eigenvalues.size();
  const double total = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
  if (total <= 1e-12 * std::max(1.0, peak) || n == 0) {
    s.degenerate = true;
    s.variance_fractions.assign(n, 0.0);
    s.cumulative_variance.assign(n, 0.0);
    return s;
  }
  double entropy = 0.0;
  double running = 0.0;
  for (double l : eigenvalues) {
    const double v = l / total;
    s.variance_fractions.push_back(v);
    running += v;
    s.cumulative_variance.push_back(running);
    if (v > 0.0) entropy -= v * std::log(v);
  }
  s.effective_rank_abs = std::exp(entropy);
  s.effective_rank_pct = s.effective_rank_abs / double(n);
  // Smallest k reaching 90%, allowing for the rounding in the running sum.
  s.n_components_for_90pct = int(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (s.cumulative_variance[k] >= 0.90 - 1e-12) {
      s.n_components_for_90pct = int(k + 1);
      break;
    }
  }
  return s;
}

SpectrumReport spectrum(const GramMatrix& g) {
  return spectrum_from_eigenvalues(jacobi_eigen(g.values).values);
}

template <typename T>
DiversityReport diversity_report(const WeightSet<T>& w, const AttentionConfig& config) {
  const BilinearFormSet forms = bilinear_forms(w, config);
  DiversityReport report;
  const Matrix<double> raw = raw_inner_products(forms);
  const int h = forms.heads();
  std::vector<double> norms(h);
  for (int i = 0; i < h; ++i) {
    norms[i] = std::sqrt(std::max(raw(i, i), 0.0));
    if (norms[i] == 0.0) report.degenerate_heads.push_back(i);
  }
  report.similarity = GramMatrix{Matrix<double>(h, h), true, false};
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < h; ++j) {
      if (norms[i] > 0.0 && norms[j] > 0.0)
        report.similarity.values(i, j) = raw(i, j) / (norms[i] * norms[j]);
    }
  }
  report.centered = center_gram(report.similarity);
  report.uncentered_spectrum = spectrum(report.similarity);
  report.centered_spectrum = spectrum(report.centered);
  return report;
}

template <typename T>
std::vector<MagnitudeRow> magnitude_report(const WeightSet<T>& w,
                                           const AttentionConfig& config) {
  if (config.mechanism != Mechanism::kLRKV)
    throw UnsupportedError("magnitude_report requires the LRKV mechanism");
  w.check(config);
  const std::size_t d = config.d_model;
  const std::size_t dh = config.head_dim;
  std::vector<MagnitudeRow> rows;
  for (int h = 0; h < config.n_heads; ++h) {
    for (char path : {'K', 'V'}) {
      const bool key = path == 'K';
      const Matrix<double> shared =
          (key ? w.shared_k() : w.shared_v()).template cast<double>();
      const Matrix<double> residual =
          low_rank_product(key ? w.u_k[h] : w.u_v[h], key ? w.b_k[h] : w.b_v[h], d, dh)
              .template cast<double>();
      MagnitudeRow row;
      row.head = h;
      row.path = path;
      row.shared_norm = frobenius_norm(shared);
      row.residual_norm = frobenius_norm(residual);
      row.total_norm = frobenius_norm(shared + residual);
      const double denom = row.shared_norm * row.residual_norm;
      row.cosine = denom > 0.0
                       ? std::clamp(frobenius_inner(shared, residual) / denom, -1.0, 1.0)
                       : 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

template <typename T>
std::vector<FactorizationGapRow> factorization_gap(
    const WeightSet<T>& w, const AttentionConfig& config,
    const WeightSet<T>& reference, const AttentionConfig& reference_config,
    int rank) {
  if (config.mechanism != Mechanism::kLRKV)
    throw ParameterError("factorization_gap: weights must be LRKV");
  if (reference_config.d_model != config.d_model ||
      reference_config.head_dim != config.head_dim ||
      reference_config.n_heads != config.n_heads) {
    throw ParameterError(
        "factorization_gap: reference dims (d, H, d_h) do not match the LRKV "
        "config");
  }
  w.check(config);
  reference.check(reference_config);
  const int r = rank < 0 ? config.rank : rank;
  std::vector<FactorizationGapRow> rows;
  for (int h = 0; h < config.n_heads; ++h) {
    const auto [ref_k, ref_v] = effective_kv_weights(reference, reference_config, h);
    const auto [eff_k, eff_v] = effective_kv_weights(w, config, h);
    for (char path : {'K', 'V'}) {
      const bool key = path == 'K';
      const Matrix<double> target = (key ? ref_k : ref_v).template cast<double>();
      const Matrix<double> learned = (key ? eff_k : eff_v).template cast<double>();
      const Matrix<double> shared =
          (key ? w.shared_k() : w.shared_v()).template cast<double>();
      FactorizationGapRow row;
      row.head = h;
      row.path = path;
      row.rank = r;
      row.learned_error = frobenius_norm(target - learned);
      row.optimal_error = svd_truncate(target - shared, r).residual_error;
      if (row.optimal_error > 0.0) {
        row.ratio = row.learned_error / row.optimal_error;
      } else {
        row.ratio = row.learned_error == 0.0
                        ? 1.0
                        : std::numeric_limits<double>::infinity();
      }
      rows.push_back(row);
    }
  }
  return rows;
}

#define LRKV_INSTANTIATE(T)                                                    \
  template BilinearFormSet bilinear_forms<T>(const WeightSet<T>&,              \
                                             const AttentionConfig&);          \
  template DiversityReport diversity_report<T>(const WeightSet<T>&,            \
                                               const AttentionConfig&);        \
  template std::vector<MagnitudeRow> magnitude_report<T>(                      \
      const WeightSet<T>&, const AttentionConfig&);                            \
  template std::vector<FactorizationGapRow> factorization_gap<T>(              \
      const WeightSet<T>&, const AttentionConfig&, const WeightSet<T>&,        \
      const AttentionConfig&, int);

LRKV_INSTANTIATE(float)
LRKV_INSTANTIATE(double)
#undef LRKV_INSTANTIATE

}  // namespace lrkv
