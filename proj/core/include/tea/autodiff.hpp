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
#include <string>
#include <vector>

#include "tea/attention.hpp"
#include "tea/data.hpp"
#include "tea/model.hpp"
#include "tea/tensor.hpp"

namespace tea::autodiff {

// Vector-Jacobian products of the primitives. Each takes the gradient of the
// output and returns the gradient of the input.

/// p = row_softmax(s). Entries with p == 0 (masked) get zero gradient.
Matrix row_softmax_backward(const Matrix& probs, const Matrix& grad_out);

Tensor activation_backward(const Tensor& pre_activation, const Tensor& grad_out,
                           const attention::Activation& act);

/// y = t ×_mode U with U held constant.
Tensor mode_n_product_backward(const Tensor& grad_out, const Matrix& u, std::size_t mode);

/// y = contract(x, w, k). Returns dx and writes dw.
Tensor contract_backward(const Tensor& x, const Tensor& w, std::size_t k, const Tensor& grad_out,
                         Tensor& grad_w);

/// Accumulates gain/bias gradients into `grad` and returns dx.
Tensor layer_norm_backward(const Tensor& grad_out, const model::LayerNormParams& p,
                           const model::NormTrace& trace, model::LayerNormParams& grad);

/// Accumulates parameter gradients of one (cross-)attention call and adds the
/// input gradients to `grad_queries` and `grad_memory`. For self-attention
/// pass the same tensor for both.
void mha_backward(const Tensor& queries, const Tensor& memory, const attention::AttentionParams& p,
                  const attention::Activation& act, bool scale_scores,
                  const attention::MhaTrace& trace, const Tensor& grad_out,
                  attention::AttentionParams& grad, Tensor& grad_queries, Tensor& grad_memory);

/// Accumulates embedding gradients. `raw` is the un-embedded input.
void embed_backward(const Tensor& raw, const model::EmbeddingParams& p, const Tensor& grad_out,
                    model::EmbeddingParams& grad);

Tensor encoder_layer_backward(const model::TeaLayerParams& p, const model::LayerOptions& opts,
                              const model::EncoderLayerTrace& trace, const Tensor& grad_out,
                              model::TeaLayerParams& grad);

/// Returns the gradient with respect to the decoder input and adds the
/// encoder-memory gradient to `grad_memory`.
Tensor decoder_layer_backward(const model::DecoderLayerParams& p, const Tensor& memory,
                              const model::LayerOptions& opts,
                              const model::DecoderLayerTrace& trace, const Tensor& grad_out,
                              model::DecoderLayerParams& grad, Tensor& grad_memory);

/// Backpropagates d(loss)/d(prediction) through a recorded forward pass.
void model_backward(const data::ForecastWindow& window, const model::ModelParams& params,
                    const model::ModelConfig& cfg, const model::ModelTrace& trace,
                    const Tensor& grad_prediction, model::ModelParams& grad);

struct LossAndGrad {
  double loss = 0.0;
  model::ModelParams grad;
};

/// Mean over the batch of the per-window MSE on standardized targets.
/// Tucker loadings are fitted inside each forward pass and treated as
/// constants. With `frozen`, the given loadings (one set per window) are used
/// instead; with `captured`, the fitted ones are returned. Throws
/// NumericalError naming `step` when the loss or a gradient is not finite.
LossAndGrad loss_and_grad(const model::ModelParams& params, const model::ModelConfig& cfg,
                          std::span<const data::ForecastWindow> batch, std::size_t step = 0,
                          const std::vector<model::FrozenFactors>* frozen = nullptr,
                          std::vector<model::FrozenFactors>* captured = nullptr);

double batch_loss(const model::ModelParams& params, const model::ModelConfig& cfg,
                  std::span<const data::ForecastWindow> batch,
                  const std::vector<model::FrozenFactors>* frozen = nullptr);

/// |a − n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor);

struct GradCheckOptions {
  double step = 1e-6;
  double tolerance = 1e-4;
  double floor = 1e-8;
  /// 0 checks every element; otherwise a seeded sample per tensor.
  std::size_t max_per_tensor = 0;
  std::uint64_t seed = 7;
  /// Evaluate the perturbed losses with the extended-precision reference
  /// forward instead of model_forward.
  bool extended = true;
};

struct GradCheckFailure {
  std::string name;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct TensorCheck {
  std::string name;
  std::size_t checked = 0;
  std::size_t failed = 0;
  double max_rel_error = 0.0;
};

struct GradCheckResult {
  std::vector<TensorCheck> tensors;
  std::vector<GradCheckFailure> failures;
  std::size_t checked = 0;
  double max_rel_error = 0.0;

  bool passed() const { return failures.empty() && checked > 0; }
};

/// Central finite differences on every trainable tensor, with the Tucker
/// loadings frozen at their values from an unperturbed forward pass so both
/// sides differentiate the same function. The divisor is the perturbation
/// actually realised in double arithmetic.
GradCheckResult gradcheck(const model::ModelParams& params, const model::ModelConfig& cfg,
                          std::span<const data::ForecastWindow> batch,
                          const GradCheckOptions& opts = {});

}  // namespace tea::autodiff
