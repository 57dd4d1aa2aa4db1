// Copyright 2026 The TEA Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "tea/tensor.hpp"

namespace tea::decomp {

using Ranks = std::vector<std::size_t>;

/// Core tensor plus one orthonormal-column loading matrix per mode:
/// t ≈ core ×_0 U_0 ×_1 U_1 … ×_{M-1} U_{M-1}.
struct TuckerFactors {
  Tensor core;
  std::vector<Matrix> loadings;  // U_m is D_m × R_m

  Ranks ranks() const { return core.shape(); }
};

/// Weighted sum of rank-1 terms with unit-norm loading columns.
struct CpFactors {
  std::vector<double> weights;   // c_r
  std::vector<Matrix> loadings;  // U_m is D_m × R, columns unit norm

  std::size_t rank() const { return weights.size(); }
};

/// Chain of order-3 cores C_m of shape R_{m-1} × D_m × R_m with R_0 = 1,
/// closed by a terminal R_M × 1 × 1 core so that every entry is the product
///   c_0[0, i_0, :] · C_1[:, i_1, :] ⋯ C_{M-1}[:, i_{M-1}, :] · terminal[:, 0, 0].
struct TtFactors {
  std::vector<Tensor> cores;
  Tensor terminal;

  /// R_1 … R_{M-1} (the interior bond dimensions).
  Ranks ranks() const;
  Shape shape() const;
};

/// Per-iteration trace of an iterative fit. `fit` is 1 − ‖t − t̂‖/‖t‖.
struct FitTrace {
  std::vector<double> fit;
  std::vector<double> residual;  // ‖t − t̂‖_F per sweep
  std::size_t iterations = 0;
  bool converged = false;
};

struct HooiOptions {
  std::size_t max_iter = 50;
  double tol = 1e-8;
};

struct CpOptions {
  std::size_t max_iter = 500;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  double ridge = 0.0;
};

/// Either `eps` (relative accuracy) or `max_ranks` (one per interior bond), or
/// both; the tighter constraint wins.
struct TtOptions {
  std::optional<double> eps;
  Ranks max_ranks;
};

/// Left singular vectors (descending singular values) of a matrix, with each
/// vector's largest-magnitude entry made positive.
struct LeftSvd {
  Matrix vectors;  // rows × k, k = min(rows, cols) or rows for the Gram route
  std::vector<double> singular_values;
};

/// Gram-matrix eigensolver when rows ≤ 64, Eigen's bidiagonal SVD otherwise.
LeftSvd left_singular_vectors(const Matrix& a);

/// Truncated HOSVD. Throws InvalidRank unless 1 ≤ R_m ≤ D_m for every mode.
TuckerFactors hosvd(const Tensor& t, const Ranks& ranks);

/// HOOI initialised from `hosvd`. Never throws on non-convergence; returns the
/// last (best) iterate.
TuckerFactors hooi(const Tensor& t, const Ranks& ranks, const HooiOptions& opts = {},
                   FitTrace* trace = nullptr);

Tensor tucker_reconstruct(const TuckerFactors& f);

/// Projects t onto fixed loadings: t ×_0 U_0ᵀ ×_1 U_1ᵀ ….
Tensor tucker_project(const Tensor& t, const std::vector<Matrix>& loadings);

/// Expands a core with fixed loadings: core ×_0 U_0 ×_1 U_1 ….
Tensor tucker_expand(const Tensor& core, const std::vector<Matrix>& loadings);

/// CP via alternating least squares; normal equations solved in the minimum-norm sense.
CpFactors cp_als(const Tensor& t, std::size_t rank, const CpOptions& opts = {},
                 FitTrace* trace = nullptr);

Tensor cp_reconstruct(const CpFactors& f);

/// The equivalent Tucker form: super-diagonal core holding the weights.
TuckerFactors cp_to_tucker(const CpFactors& f);

TtFactors tt_svd(const Tensor& t, const TtOptions& opts);

/// One entry through the matrix-product chain, without materialising t.
double tt_element(const TtFactors& f, std::span<const std::size_t> index);

Tensor tt_reconstruct(const TtFactors& f);

double relative_error(const Tensor& original, const Tensor& approx);

/// Stored scalars in a factor bundle.
std::size_t stored_size(const TuckerFactors& f);
std::size_t stored_size(const CpFactors& f);
std::size_t stored_size(const TtFactors& f);

}  // namespace tea::decomp
