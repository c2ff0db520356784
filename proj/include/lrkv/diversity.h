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

#ifndef LRKV_DIVERSITY_H_
#define LRKV_DIVERSITY_H_

#include <string>
#include <vector>

#include "lrkv/config.h"
#include "lrkv/linalg.h"
#include "lrkv/matrix.h"
#include "lrkv/weights.h"

namespace lrkv {

// Per-head bilinear forms A_h = W_h^Q (W_h^K)ᵀ, kept in factored form. The
// d×d operator is only built on request.
struct BilinearFormSet {
  std::vector<Matrix<double>> query;  // W_h^Q, d×d_h
  std::vector<Matrix<double>> key;    // effective W_h^K, d×d_h

  int heads() const { return int(query.size()); }
  Matrix<double> form(int head) const;
};

template <typename T>
BilinearFormSet bilinear_forms(const WeightSet<T>& w, const AttentionConfig& config);

struct GramMatrix {
  Matrix<double> values;  // H×H
  bool normalized = false;
  bool centered = false;
};

// G_ij = ⟨A_i, A_j⟩_F evaluated as tr((W_i^Qᵀ W_j^Q)(W_j^Kᵀ W_i^K)), so only
// d_h×d_h products are formed. With `normalize`, entries are divided by
// ‖A_i‖_F ‖A_j‖_F; a zero-norm head then raises DegenerateHeadError.
GramMatrix gram(const BilinearFormSet& forms, bool normalize);

// Double centering: G − row means − column means + grand mean.
GramMatrix center_gram(const GramMatrix& g);

struct SpectrumReport {
  std::vector<double> eigenvalues;  // descending, clipped at 0
  std::vector<double> variance_fractions;
  std::vector<double> cumulative_variance;
  double effective_rank_abs = 0.0;  // exp(−Σ v ln v)
  double effective_rank_pct = 0.0;  // relative to H, in [0, 1]
  int n_components_for_90pct = 0;
  bool degenerate = false;  // Σλ = 0; effective rank reported as 0
};

inline constexpr double kNegativeEigenTolerance = 1e-10;

SpectrumReport spectrum(const GramMatrix& g);

// The same statistics from an eigenvalue list (need not be sorted).
SpectrumReport spectrum_from_eigenvalues(std::vector<double> eigenvalues);

struct DiversityReport {
  GramMatrix similarity;  // normalized, uncentered
  GramMatrix centered;
  SpectrumReport uncentered_spectrum;
  SpectrumReport centered_spectrum;
  std::vector<int> degenerate_heads;  // zero-norm forms, excluded from G
};

template <typename T>
DiversityReport diversity_report(const WeightSet<T>& w, const AttentionConfig& config);

struct MagnitudeRow {
  int head = 0;
  char path = 'K';  // 'K' or 'V'
  double shared_norm = 0.0;
  double residual_norm = 0.0;
  double total_norm = 0.0;
  double cosine = 0.0;  // Frobenius cosine of shared and residual, 0 if either is 0
};

// LRKV only; one row per head and path.
template <typename T>
std::vector<MagnitudeRow> magnitude_report(const WeightSet<T>& w,
                                           const AttentionConfig& config);

struct FactorizationGapRow {
  int head = 0;
  char path = 'K';
  int rank = 0;
  double learned_error = 0.0;  // ‖W_ref − (W_shared + U Bᵀ)‖_F
  double optimal_error = 0.0;  // best rank-r residual of W_ref − W_shared
  double ratio = 1.0;          // learned / optimal
};

// Compares an LRKV weight set against per-head targets from a reference
// (usually MHA) of matching d and d_h. `rank` < 0 uses config.rank.
template <typename T>
std::vector<FactorizationGapRow> factorization_gap(
    const WeightSet<T>& w, const AttentionConfig& config,
    const WeightSet<T>& reference, const AttentionConfig& reference_config,
    int rank = -1);

}  // namespace lrkv

#endif  // LRKV_DIVERSITY_H_
