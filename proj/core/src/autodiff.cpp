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

#include "tea/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tea/decomp.hpp"
#include "tea/errors.hpp"
#include "tea/reference.hpp"

namespace tea::autodiff {
namespace {

using attention::AttentionParams;
using model::FrozenFactors;
using model::ModelParams;

Matrix as_matrix(const Tensor& t, std::size_t rows) {
  return Matrix(rows, t.size() / rows, t.values());
}

void add_into(Tensor& dst, const Matrix& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

void add_into(Tensor& dst, const Tensor& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

Tensor norm_backward(const Tensor& g, const model::LayerNormParams& p,
                     const model::NormTrace& trace, const model::LayerOptions& opts,
                     model::LayerNormParams& grad) {
  return opts.layer_norm ? layer_norm_backward(g, p, trace, grad) : g;
}

bool params_finite(const ModelParams& p) {
  bool ok = true;
  model::for_each_param(p, [&ok](const std::string&, const Tensor& t) {
    ok = ok && all_finite(t.data());
  });
  return ok;
}

}  // namespace

Matrix row_softmax_backward(const Matrix& probs, const Matrix& grad_out) {
  Matrix out(probs.rows(), probs.cols());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto p = probs.row(r);
    auto g = grad_out.row(r);
    double dot = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) dot += p[c] * g[c];
    auto o = out.row(r);
    for (std::size_t c = 0; c < p.size(); ++c) o[c] = p[c] * (g[c] - dot);
  }
  return out;
}

Tensor activation_backward(const Tensor& pre_activation, const Tensor& grad_out,
                           const attention::Activation& act) {
  Tensor out(grad_out.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = grad_out[i] * act.derivative(pre_activation[i]);
  }
  return out;
}

Tensor mode_n_product_backward(const Tensor& grad_out, const Matrix& u, std::size_t mode) {
  return mode_n_product_transposed(grad_out, u, mode);
}

Tensor contract_backward(const Tensor& x, const Tensor& w, std::size_t k, const Tensor& grad_out,
                         Tensor& grad_w) {
  if (k > x.order() || k > w.order()) throw InvalidArgument("contract_backward: k exceeds order");
  std::size_t inner_size = 1;
  for (std::size_t m = x.order() - k; m < x.order(); ++m) inner_size *= x.dim(m);
  const std::size_t rows = x.size() / inner_size;
  const std::size_t cols = w.size() / inner_size;
  const Matrix xm(rows, inner_size, x.values());
  const Matrix wm(inner_size, cols, w.values());
  const Matrix gm(rows, cols, grad_out.values());
  const Matrix dw = matmul_tn(xm, gm);
  grad_w = Tensor(w.shape(), std::vector<double>(dw.data().begin(), dw.data().end()));
  const Matrix dx = matmul_nt(gm, wm);
  return Tensor(x.shape(), std::vector<double>(dx.data().begin(), dx.data().end()));
}

Tensor layer_norm_backward(const Tensor& grad_out, const model::LayerNormParams& p,
                           const model::NormTrace& trace, model::LayerNormParams& grad) {
  const std::size_t rows = grad_out.dim(0);
  const std::size_t n = grad_out.size() / rows;
  const double inv_n = 1.0 / static_cast<double>(n);
  Tensor dx(grad_out.shape());
  std::vector<double> dxh(n);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* g = grad_out.data().data() + r * n;
    const double* xh = trace.normalized.data().data() + r * n;
    double mean_dxh = 0.0, mean_dxh_xh = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      grad.gain[i] += g[i] * xh[i];
      grad.bias[i] += g[i];
      dxh[i] = g[i] * p.gain[i];
      mean_dxh += dxh[i];
      mean_dxh_xh += dxh[i] * xh[i];
    }
    mean_dxh *= inv_n;
    mean_dxh_xh *= inv_n;
    for (std::size_t i = 0; i < n; ++i) {
      dx[r * n + i] = trace.inv_std[r] * (dxh[i] - mean_dxh - xh[i] * mean_dxh_xh);
    }
  }
  return dx;
}

void mha_backward(const Tensor& queries, const Tensor& memory, const AttentionParams& p,
                  const attention::Activation& act, bool scale_scores,
                  const attention::MhaTrace& trace, const Tensor& grad_out,
                  AttentionParams& grad, Tensor& grad_queries, Tensor& grad_memory) {
  const std::size_t lq = queries.dim(0);
  const std::size_t lk = memory.dim(0);
  const std::size_t features = queries.size() / lq;
  const Matrix xq = as_matrix(queries, lq);
  const Matrix xkv = as_matrix(memory, lk);
  const Matrix g = as_matrix(grad_out, lq);
  Matrix dxq(lq, features);
  Matrix dxkv(lk, features);

  for (std::size_t h = 0; h < p.heads.size(); ++h) {
    const auto& hp = p.heads[h];
    const auto& tr = trace.heads[h];
    auto& hg = grad.heads[h];
    const std::size_t da = hp.attn_dim();

    grad.head_weights[h] += inner(grad_out, tr.out);
    Matrix gh = g;
    for (auto& v : gh.data()) v *= p.head_weights[h];

    const Matrix wo = as_matrix(hp.w_o, da);
    add_into(hg.w_o, matmul_tn(tr.act, gh));
    Matrix d_mixed = matmul_nt(gh, wo);
    for (std::size_t i = 0; i < d_mixed.size(); ++i) {
      d_mixed.data()[i] *= act.derivative(tr.mixed.data()[i]);
    }
    const Matrix d_probs = matmul_nt(d_mixed, tr.v);
    const Matrix d_v = matmul_tn(tr.probs, d_mixed);
    Matrix d_scores = row_softmax_backward(tr.probs, d_probs);
    if (scale_scores) {
      const double s = 1.0 / std::sqrt(static_cast<double>(da));
      for (auto& v : d_scores.data()) v *= s;
    }
    const Matrix d_q = matmul(d_scores, tr.k);
    const Matrix d_k = matmul_tn(d_scores, tr.q);

    add_into(hg.w_q, matmul_tn(xq, d_q));
    add_into(hg.w_k, matmul_tn(xkv, d_k));
    add_into(hg.w_v, matmul_tn(xkv, d_v));

    const auto accumulate = [](Matrix& dst, const Matrix& src) {
      for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
    };
    accumulate(dxq, matmul_nt(d_q, as_matrix(hp.w_q, features)));
    accumulate(dxkv, matmul_nt(d_k, as_matrix(hp.w_k, features)));
    accumulate(dxkv, matmul_nt(d_v, as_matrix(hp.w_v, features)));
  }
  add_into(grad_queries, dxq);
  add_into(grad_memory, dxkv);
}

void embed_backward(const Tensor& raw, const model::EmbeddingParams& p, const Tensor& grad_out,
                    model::EmbeddingParams& grad) {
  const std::size_t len = raw.dim(0);
  const std::size_t features = raw.size() / len;
  const std::size_t lm = p.expansion.size();
  const std::size_t dm = p.value_proj.dim(1);
  const Matrix raw_m(len, features, raw.values());
  const Matrix values = matmul(raw_m, Matrix(features, dm, p.value_proj.values()));
  add_into(grad.positional, grad_out);
  Matrix d_values(len, dm);
  for (std::size_t l = 0; l < len; ++l)
    for (std::size_t i = 0; i < lm; ++i)
      for (std::size_t j = 0; j < dm; ++j) {
        const double g = grad_out(l, i, j);
        grad.expansion[i] += g * values(l, j);
        d_values(l, j) += g * p.expansion[i];
      }
  add_into(grad.value_proj, matmul_tn(raw_m, d_values));
}

Tensor encoder_layer_backward(const model::TeaLayerParams& p, const model::LayerOptions& opts,
                              const model::EncoderLayerTrace& trace, const Tensor& grad_out,
                              model::TeaLayerParams& grad) {
  const bool tea = !p.ranks.empty();
  const Tensor d_normed = tea ? decomp::tucker_project(grad_out, trace.loadings) : grad_out;
  const Tensor d_pre = norm_backward(d_normed, p.norm, trace.norm, opts, grad.norm);
  Tensor d_in = d_pre;
  mha_backward(trace.attn_input, trace.attn_input, p.attention, opts.activation, opts.scale_scores,
               trace.attn, d_pre, grad.attention, d_in, d_in);
  return tea ? decomp::tucker_expand(d_in, trace.loadings) : d_in;
}

Tensor decoder_layer_backward(const model::DecoderLayerParams& p, const Tensor& memory,
                              const model::LayerOptions& opts,
                              const model::DecoderLayerTrace& trace, const Tensor& grad_out,
                              model::DecoderLayerParams& grad, Tensor& grad_memory) {
  const Tensor d_cross_pre = norm_backward(grad_out, p.cross_norm, trace.cross_norm, opts,
                                           grad.cross_norm);
  Tensor d_queries = d_cross_pre;
  mha_backward(trace.queries, memory, p.cross_attention, opts.activation, opts.scale_scores,
               trace.cross_attn, d_cross_pre, grad.cross_attention, d_queries, grad_memory);

  const bool tea = !p.ranks.empty();
  const Tensor d_normed = tea ? decomp::tucker_project(d_queries, trace.loadings) : d_queries;
  const Tensor d_self_pre = norm_backward(d_normed, p.self_norm, trace.self_norm, opts,
                                          grad.self_norm);
  Tensor d_in = d_self_pre;
  mha_backward(trace.self_input, trace.self_input, p.self_attention, opts.activation,
               opts.scale_scores, trace.self_attn, d_self_pre, grad.self_attention, d_in, d_in);
  return tea ? decomp::tucker_expand(d_in, trace.loadings) : d_in;
}

void model_backward(const data::ForecastWindow& window, const ModelParams& params,
                    const model::ModelConfig& cfg, const model::ModelTrace& trace,
                    const Tensor& grad_prediction, ModelParams& grad) {
  const model::LayerOptions opts = model::layer_options(cfg);
  const std::size_t dm = cfg.model_dim, lm = cfg.model_len, pred = cfg.pred_len;
  const Matrix d_pred(pred, cfg.features, grad_prediction.values());
  const Matrix head_in(pred, dm, trace.head_input.values());

  add_into(grad.head.weight, matmul_tn(head_in, d_pred));
  for (std::size_t t = 0; t < pred; ++t)
    for (std::size_t d = 0; d < cfg.features; ++d) grad.head.bias[d] += d_pred(t, d);
  const Matrix d_head = matmul_nt(d_pred, Matrix(dm, cfg.features, params.head.weight.values()));

  Tensor d_y = Tensor::zeros({cfg.decoder_len(), lm, dm});
  const std::size_t first = cfg.decoder_len() - pred;
  for (std::size_t t = 0; t < pred; ++t)
    for (std::size_t i = 0; i < lm; ++i)
      for (std::size_t j = 0; j < dm; ++j) d_y(first + t, i, j) = d_head(t, j) / static_cast<double>(lm);

  Tensor d_memory = Tensor::zeros(trace.encoder_output.shape());
  for (std::size_t i = cfg.dec_layers; i-- > 0;) {
    d_y = decoder_layer_backward(params.decoder[i], trace.encoder_output, opts, trace.decoder[i],
                                 d_y, grad.decoder[i], d_memory);
  }
  embed_backward(trace.dec_raw, params.dec_embed, d_y, grad.dec_embed);

  Tensor d_x = std::move(d_memory);
  for (std::size_t i = cfg.enc_layers; i-- > 0;) {
    d_x = encoder_layer_backward(params.encoder[i], opts, trace.encoder[i], d_x, grad.encoder[i]);
  }
  embed_backward(window.encoder_input, params.enc_embed, d_x, grad.enc_embed);
}

LossAndGrad loss_and_grad(const ModelParams& params, const model::ModelConfig& cfg,
                          std::span<const data::ForecastWindow> batch, std::size_t step,
                          const std::vector<FrozenFactors>* frozen,
                          std::vector<FrozenFactors>* captured) {
  if (batch.empty()) throw DataError("loss_and_grad: empty batch");
  if (frozen && frozen->size() != batch.size()) {
    throw ShapeError("loss_and_grad: one set of frozen factors per window is required");
  }
  const std::string where = "step " + std::to_string(step);
  LossAndGrad out;
  out.grad = model::zeros_like(params);
  if (captured) captured->clear();
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  // Samples are reduced in batch order so results do not depend on scheduling.
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& w = batch[b];
    model::ModelTrace trace;
    const Tensor pred = model::model_forward(w, params, cfg, &trace, frozen ? &(*frozen)[b] : nullptr);
    if (pred.shape() != w.target.reshaped({cfg.pred_len, cfg.features}).shape()) {
      throw ShapeError("prediction and target shapes differ");
    }
    const double n = static_cast<double>(pred.size());
    Tensor d_pred(pred.shape());
    double loss = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double r = pred[i] - w.target[i];
      loss += r * r;
      d_pred[i] = 2.0 * r * inv_b / n;
    }
    loss /= n;
    if (!std::isfinite(loss)) {
      throw NumericalError(where, "non-finite loss on window starting at row " +
                                      std::to_string(w.start));
    }
    out.loss += loss * inv_b;
    model_backward(w, params, cfg, trace, d_pred, out.grad);
    if (captured) captured->push_back(model::frozen_factors(trace));
  }
  if (!params_finite(out.grad)) throw NumericalError(where, "non-finite gradient");
  return out;
}

double batch_loss(const ModelParams& params, const model::ModelConfig& cfg,
                  std::span<const data::ForecastWindow> batch,
                  const std::vector<FrozenFactors>* frozen) {
  if (batch.empty()) throw DataError("batch_loss: empty batch");
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Tensor pred = model::model_forward(batch[b], params, cfg, nullptr,
                                             frozen ? &(*frozen)[b] : nullptr);
    double loss = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double r = pred[i] - batch[b].target[i];
      loss += r * r;
    }
    total += loss / static_cast<double>(pred.size());
  }
  return total / static_cast<double>(batch.size());
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult gradcheck(const ModelParams& params, const model::ModelConfig& cfg,
                          std::span<const data::ForecastWindow> batch,
                          const GradCheckOptions& opts) {
  std::vector<FrozenFactors> frozen;
  const LossAndGrad base = loss_and_grad(params, cfg, batch, 0, nullptr, &frozen);

  std::vector<const Tensor*> analytic;
  model::for_each_param(base.grad, [&analytic](const std::string&, const Tensor& t) {
    analytic.push_back(&t);
  });

  GradCheckResult result;
  ModelParams probe = params;
  std::mt19937_64 rng(opts.seed);
  std::size_t slot = 0;
  model::for_each_param(probe, [&](const std::string& name, Tensor& t) {
    const Tensor& g = *analytic[slot++];
    std::vector<std::size_t> indices(t.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (opts.max_per_tensor > 0 && indices.size() > opts.max_per_tensor) {
      std::shuffle(indices.begin(), indices.end(), rng);
      indices.resize(opts.max_per_tensor);
      std::sort(indices.begin(), indices.end());
    }
    TensorCheck tc{name, 0, 0, 0.0};
    const auto loss_at = [&]() -> reference::Real {
      return opts.extended ? reference::batch_loss(probe, cfg, batch, frozen)
                           : batch_loss(probe, cfg, batch, &frozen);
    };
    for (const std::size_t i : indices) {
      const double saved = t[i];
      const double up = saved + opts.step;
      const double down = saved - opts.step;
      t[i] = up;
      const reference::Real plus = loss_at();
      t[i] = down;
      const reference::Real minus = loss_at();
      t[i] = saved;
      const double numeric = static_cast<double>((plus - minus) / static_cast<reference::Real>(up - down));
      const double err = relative_error(g[i], numeric, opts.floor);
      ++tc.checked;
      tc.max_rel_error = std::max(tc.max_rel_error, err);
      if (!(err <= opts.tolerance)) {
        ++tc.failed;
        result.failures.push_back({name, i, g[i], numeric, err});
      }
    }
    result.checked += tc.checked;
    result.max_rel_error = std::max(result.max_rel_error, tc.max_rel_error);
    result.tensors.push_back(std::move(tc));
  });
  return result;
}

}  // namespace tea::autodiff
