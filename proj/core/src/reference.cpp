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

#include "tea/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tea/errors.hpp"

namespace tea::reference {
namespace {

struct T3 {
  std::size_t n0 = 0, n1 = 0, n2 = 0;
  std::vector<Real> v;

  T3() = default;
  T3(std::size_t a, std::size_t b, std::size_t c) : n0(a), n1(b), n2(c), v(a * b * c, 0.0L) {}

  Real& operator()(std::size_t i, std::size_t j, std::size_t k) { return v[(i * n1 + j) * n2 + k]; }
  Real operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return v[(i * n1 + j) * n2 + k];
  }
};

Real act_apply(const attention::Activation& a, Real z) {
  switch (a.kind) {
    case attention::ActivationKind::kRelu: return z > 0 ? z : 0.0L;
    case attention::ActivationKind::kLeakyRelu: return z > 0 ? z : static_cast<Real>(a.alpha) * z;
    case attention::ActivationKind::kIdentity: return z;
  }
  return z;
}

// t ×_mode Uᵀ when `down`, t ×_mode U otherwise; U is D × R.
T3 mode_product(const T3& t, const Matrix& u, std::size_t mode, bool down) {
  std::size_t dims[3] = {t.n0, t.n1, t.n2};
  const std::size_t from = dims[mode];
  const std::size_t to = down ? u.cols() : u.rows();
  dims[mode] = to;
  T3 out(dims[0], dims[1], dims[2]);
  for (std::size_t i = 0; i < out.n0; ++i)
    for (std::size_t j = 0; j < out.n1; ++j)
      for (std::size_t k = 0; k < out.n2; ++k) {
        const std::size_t idx[3] = {i, j, k};
        Real s = 0;
        for (std::size_t q = 0; q < from; ++q) {
          std::size_t src[3] = {i, j, k};
          src[mode] = q;
          const Real w = down ? u(q, idx[mode]) : u(idx[mode], q);
          s += w * t(src[0], src[1], src[2]);
        }
        out(i, j, k) = s;
      }
  return out;
}

T3 project(const T3& x, const std::vector<Matrix>& u) {
  T3 c = x;
  for (std::size_t m = 0; m < 3; ++m) c = mode_product(c, u[m], m, true);
  return c;
}

T3 expand(const T3& c, const std::vector<Matrix>& u) {
  T3 x = c;
  for (std::size_t m = 0; m < 3; ++m) x = mode_product(x, u[m], m, false);
  return x;
}

T3 attend(const T3& xq, const T3& xkv, const attention::AttentionParams& p,
          const attention::Activation& act, bool scale, bool causal) {
  const std::size_t lq = xq.n0, lk = xkv.n0, a = xq.n1, b = xq.n2;
  T3 out(lq, a, b);
  for (std::size_t h = 0; h < p.heads.size(); ++h) {
    const auto& hp = p.heads[h];
    const std::size_t da = hp.w_q.dim(2);
    std::vector<Real> q(lq * da, 0), k(lk * da, 0), v(lk * da, 0);
    for (std::size_t l = 0; l < lq; ++l)
      for (std::size_t d = 0; d < da; ++d)
        for (std::size_t i = 0; i < a; ++i)
          for (std::size_t j = 0; j < b; ++j) q[l * da + d] += xq(l, i, j) * hp.w_q(i, j, d);
    for (std::size_t l = 0; l < lk; ++l)
      for (std::size_t d = 0; d < da; ++d)
        for (std::size_t i = 0; i < a; ++i)
          for (std::size_t j = 0; j < b; ++j) {
            k[l * da + d] += xkv(l, i, j) * hp.w_k(i, j, d);
            v[l * da + d] += xkv(l, i, j) * hp.w_v(i, j, d);
          }
    const Real s = scale ? 1.0L / std::sqrt(static_cast<Real>(da)) : 1.0L;
    for (std::size_t r = 0; r < lq; ++r) {
      std::vector<Real> prob(lk, 0);
      Real mx = -std::numeric_limits<Real>::infinity();
      for (std::size_t c = 0; c < lk; ++c) {
        if (causal && c > r) continue;
        Real dot = 0;
        for (std::size_t d = 0; d < da; ++d) dot += q[r * da + d] * k[c * da + d];
        prob[c] = dot * s;
        mx = std::max(mx, prob[c]);
      }
      Real z = 0;
      for (std::size_t c = 0; c < lk; ++c) {
        prob[c] = (causal && c > r) ? 0.0L : std::exp(prob[c] - mx);
        z += prob[c];
      }
      std::vector<Real> mixed(da, 0);
      for (std::size_t c = 0; c < lk; ++c)
        for (std::size_t d = 0; d < da; ++d) mixed[d] += prob[c] / z * v[c * da + d];
      for (auto& m : mixed) m = act_apply(act, m);
      const Real wh = p.head_weights[h];
      for (std::size_t i = 0; i < a; ++i)
        for (std::size_t j = 0; j < b; ++j) {
          Real o = 0;
          for (std::size_t d = 0; d < da; ++d) o += mixed[d] * hp.w_o(d, i, j);
          out(r, i, j) += wh * o;
        }
    }
  }
  return out;
}

T3 norm(const T3& x, const model::LayerNormParams& p, bool enabled) {
  if (!enabled) return x;
  T3 out(x.n0, x.n1, x.n2);
  const std::size_t n = x.n1 * x.n2;
  for (std::size_t l = 0; l < x.n0; ++l) {
    Real mean = 0, var = 0;
    for (std::size_t i = 0; i < n; ++i) mean += x.v[l * n + i];
    mean /= static_cast<Real>(n);
    for (std::size_t i = 0; i < n; ++i) var += (x.v[l * n + i] - mean) * (x.v[l * n + i] - mean);
    var /= static_cast<Real>(n);
    const Real inv = 1.0L / std::sqrt(var + static_cast<Real>(model::kLayerNormEps));
    for (std::size_t i = 0; i < n; ++i) {
      out.v[l * n + i] = p.gain[i] * (x.v[l * n + i] - mean) * inv + p.bias[i];
    }
  }
  return out;
}

T3 add(const T3& a, const T3& b) {
  T3 out = a;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += b.v[i];
  return out;
}

T3 embed(const Tensor& raw, std::size_t rows, const model::EmbeddingParams& p) {
  const std::size_t features = p.value_proj.dim(0);
  const std::size_t lm = p.expansion.size(), dm = p.value_proj.dim(1);
  T3 out(rows, lm, dm);
  for (std::size_t l = 0; l < rows; ++l)
    for (std::size_t j = 0; j < dm; ++j) {
      Real val = 0;
      for (std::size_t f = 0; f < features; ++f) {
        const Real x = l * features + f < raw.size() ? raw[l * features + f] : 0.0;
        val += x * p.value_proj(f, j);
      }
      for (std::size_t i = 0; i < lm; ++i) out(l, i, j) = p.expansion[i] * val + p.positional(l, i, j);
    }
  return out;
}

}  // namespace

std::vector<Real> forward(const data::ForecastWindow& window, const model::ModelParams& params,
                          const model::ModelConfig& cfg, const model::FrozenFactors& frozen) {
  const bool ln = cfg.layer_norm;
  T3 x = embed(window.encoder_input, cfg.seq_len, params.enc_embed);
  for (std::size_t i = 0; i < cfg.enc_layers; ++i) {
    const auto& lp = params.encoder[i];
    const bool tea = !lp.ranks.empty();
    if (tea && frozen.encoder.at(i).size() != 3) throw ShapeError("reference: missing loadings");
    const T3 in = tea ? project(x, frozen.encoder[i]) : x;
    const T3 normed = norm(add(in, attend(in, in, lp.attention, cfg.activation, cfg.scale_scores,
                                          false)),
                           lp.norm, ln);
    x = tea ? expand(normed, frozen.encoder[i]) : normed;
  }

  // Seed rows then zeros: embed() reads past the seed as zeros.
  T3 y = embed(window.decoder_seed, cfg.decoder_len(), params.dec_embed);
  for (std::size_t i = 0; i < cfg.dec_layers; ++i) {
    const auto& lp = params.decoder[i];
    const bool tea = !lp.ranks.empty();
    if (tea && frozen.decoder.at(i).size() != 3) throw ShapeError("reference: missing loadings");
    const T3 in = tea ? project(y, frozen.decoder[i]) : y;
    const T3 normed = norm(add(in, attend(in, in, lp.self_attention, cfg.activation,
                                          cfg.scale_scores, true)),
                           lp.self_norm, ln);
    const T3 queries = tea ? expand(normed, frozen.decoder[i]) : normed;
    y = norm(add(queries, attend(queries, x, lp.cross_attention, cfg.activation, cfg.scale_scores,
                                 false)),
             lp.cross_norm, ln);
  }

  const std::size_t first = cfg.decoder_len() - cfg.pred_len;
  std::vector<Real> out(cfg.pred_len * cfg.features, 0);
  for (std::size_t t = 0; t < cfg.pred_len; ++t)
    for (std::size_t d = 0; d < cfg.features; ++d) {
      Real s = params.head.bias[d];
      for (std::size_t j = 0; j < cfg.model_dim; ++j) {
        Real mean = 0;
        for (std::size_t i = 0; i < cfg.model_len; ++i) mean += y(first + t, i, j);
        s += mean / static_cast<Real>(cfg.model_len) * params.head.weight(j, d);
      }
      out[t * cfg.features + d] = s;
    }
  return out;
}

Real batch_loss(const model::ModelParams& params, const model::ModelConfig& cfg,
                std::span<const data::ForecastWindow> batch,
                const std::vector<model::FrozenFactors>& frozen) {
  if (frozen.size() != batch.size()) throw ShapeError("reference: one factor set per window");
  Real total = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto pred = forward(batch[b], params, cfg, frozen[b]);
    Real loss = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const Real r = pred[i] - static_cast<Real>(batch[b].target[i]);
      loss += r * r;
    }
    total += loss / static_cast<Real>(pred.size());
  }
  return total / static_cast<Real>(batch.size());
}

}  // namespace tea::reference
