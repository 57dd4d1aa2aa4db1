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
#include <span>
#include <utility>
#include <vector>

#include "tea/tensor.hpp"

namespace tea::attention {

enum class ActivationKind { kRelu, kLeakyRelu, kIdentity };

/// Element-wise nonlinearity applied after the attention-weighted sum. Every
/// kind satisfies σ(0) = 0. `kIdentity` exists for tests and oracles.
struct Activation {
  ActivationKind kind = ActivationKind::kRelu;
  double alpha = 0.01;  // negative slope for leaky ReLU

  static Activation relu() { return {ActivationKind::kRelu, 0.0}; }
  static Activation leaky_relu(double alpha) { return {ActivationKind::kLeakyRelu, alpha}; }
  static Activation identity() { return {ActivationKind::kIdentity, 0.0}; }

  double apply(double z) const;
  /// Derivative, taking the right-hand value at the ReLU kink.
  double derivative(double z) const;
  double lipschitz() const;
};

/// Weights of one head. For inputs of shape L × A × B:
/// w_q, w_k, w_v are A × B × D_attn and w_o is D_attn × A × B.
struct HeadParams {
  Tensor w_q;
  Tensor w_k;
  Tensor w_v;
  Tensor w_o;

  std::size_t attn_dim() const { return w_q.dim(2); }
};

struct AttentionParams {
  std::vector<HeadParams> heads;
  Tensor head_weights;  // shape {H}

  std::size_t num_heads() const { return heads.size(); }
};

/// Boolean visibility matrix over (query position, key position).
class AttentionMask {
 public:
  AttentionMask(std::size_t queries, std::size_t keys, bool fill = true);

  /// Lower-triangular: query q may see keys k ≤ q.
  static AttentionMask causal(std::size_t n);

  bool allowed(std::size_t q, std::size_t k) const { return allowed_[q * keys_ + k] != 0; }
  void set(std::size_t q, std::size_t k, bool v) { allowed_[q * keys_ + k] = v ? 1 : 0; }
  std::size_t queries() const { return queries_; }
  std::size_t keys() const { return keys_; }

 private:
  std::size_t queries_;
  std::size_t keys_;
  std::vector<std::uint8_t> allowed_;
};

/// Masked logits are set to this value before the softmax.
inline constexpr double kMaskedLogit = -1e30;

/// Multiply-add tally for the matrix products of attention forward passes.
/// Softmax exponentials and the activation are not counted.
struct FlopCounter {
  std::uint64_t multiply_adds = 0;
  std::vector<std::pair<std::size_t, std::size_t>> score_shapes;

  void reset() {
    multiply_adds = 0;
    score_shapes.clear();
  }
};

struct AttentionOptions {
  const AttentionMask* mask = nullptr;
  /// Multiply scores by 1/√D_attn. Off by default: the tensor attention used
  /// here has no scaling term.
  bool scale_scores = false;
  FlopCounter* counter = nullptr;
};

/// Closed-form multiply-add count of one multi-head forward pass with
/// `queries` query positions, `keys` key positions and feature size
/// `features` (= A·B): per head 4 projections-worth of contractions, two
/// score-sized products, plus the head combination.
std::uint64_t attention_flops(std::size_t queries, std::size_t keys, std::size_t features,
                              std::size_t attn_dim, std::size_t heads);

/// Softmax of every row, with max subtraction.
Matrix row_softmax(const Matrix& m);

/// Single-head tensor attention:
///   σ(RowSoftmax(⟨X,W_Q⟩⟨X,W_K⟩ᵀ) ⟨X,W_V⟩) W_O.
/// Note that σ sits between the attention-weighted sum and W_O, not in a
/// separate feed-forward block.
Tensor sha_forward(const Tensor& x, const HeadParams& h, const Activation& act,
                   const AttentionOptions& opts = {});

/// Σ_h w_H[h] · sha_forward(x, head_h), i.e. the per-head outputs stacked on
/// a fourth mode and contracted with w_H.
Tensor mha_forward(const Tensor& x, const AttentionParams& p, const Activation& act,
                   const AttentionOptions& opts = {});

/// Self-attention entry point: queries, keys and values all come from x.
inline Tensor msa_forward(const Tensor& x, const AttentionParams& p, const Activation& act,
                          const AttentionOptions& opts = {}) {
  return mha_forward(x, p, act, opts);
}

/// Queries from `queries`, keys and values from `memory`. The two may differ
/// in their first (time) mode only.
Tensor mha_cross_forward(const Tensor& queries, const Tensor& memory, const AttentionParams& p,
                         const Activation& act, const AttentionOptions& opts = {});

struct AttentionLayer {
  AttentionParams params;
  Activation activation;
};

/// T^(S) ∘ ⋯ ∘ T^(0)(x). An empty list returns x.
Tensor stack_forward(const Tensor& x, std::span<const AttentionLayer> layers,
                     const AttentionOptions& opts = {});

// Intermediates retained for the backward pass.
struct HeadTrace {
  Matrix q, k, v;  // projections
  Matrix probs;    // row-softmax output
  Matrix mixed;    // probs · v, before σ
  Matrix act;      // σ(mixed)
  Tensor out;      // act · W_O, same shape as the queries
};

struct MhaTrace {
  std::vector<HeadTrace> heads;
};

Tensor mha_cross_forward_traced(const Tensor& queries, const Tensor& memory,
                                const AttentionParams& p, const Activation& act,
                                const AttentionOptions& opts, MhaTrace& trace);

/// Checks weight shapes against an input feature shape A × B.
void validate(const AttentionParams& p, std::size_t a, std::size_t b);

}  // namespace tea::attention
