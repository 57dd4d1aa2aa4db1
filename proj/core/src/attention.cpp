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

#include "tea/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tea/errors.hpp"

namespace tea::attention {
namespace {

Matrix flatten_positions(const Tensor& x) {
  return Matrix(x.dim(0), x.size() / x.dim(0), x.values());
}

Matrix weight_matrix(const Tensor& w, std::size_t rows) {
  return Matrix(rows, w.size() / rows, w.values());
}

void require_order3(const Tensor& x, const char* what) {
  if (x.order() != 3) {
    throw ShapeError(std::string(what) + " must be order 3 (L x A x B), got " +
                     shape_string(x.shape()));
  }
}

HeadTrace run_head(const Matrix& xq, const Matrix& xkv, const Shape& out_shape,
                   const HeadParams& h, const Activation& act, const AttentionOptions& opts) {
  const std::size_t features = xq.cols();
  const std::size_t da = h.attn_dim();
  HeadTrace tr;
  tr.q = matmul(xq, weight_matrix(h.w_q, features));
  tr.k = matmul(xkv, weight_matrix(h.w_k, features));
  tr.v = matmul(xkv, weight_matrix(h.w_v, features));
  Matrix scores = matmul_nt(tr.q, tr.k);
  if (opts.scale_scores) {
    const double s = 1.0 / std::sqrt(static_cast<double>(da));
    for (auto& v : scores.data()) v *= s;
  }
  if (opts.mask) {
    if (opts.mask->queries() != scores.rows() || opts.mask->keys() != scores.cols()) {
      throw ShapeError("attention mask shape does not match the score matrix");
    }
    for (std::size_t i = 0; i < scores.rows(); ++i)
      for (std::size_t j = 0; j < scores.cols(); ++j)
        if (!opts.mask->allowed(i, j)) scores(i, j) = kMaskedLogit;
  }
  tr.probs = row_softmax(scores);
  tr.mixed = matmul(tr.probs, tr.v);
  tr.act = tr.mixed;
  for (auto& v : tr.act.data()) v = act.apply(v);
  Matrix out = matmul(tr.act, weight_matrix(h.w_o, da));
  tr.out = Tensor(out_shape, std::vector<double>(out.data().begin(), out.data().end()));
  if (opts.counter) {
    const std::size_t lq = xq.rows(), lk = xkv.rows();
    opts.counter->multiply_adds += static_cast<std::uint64_t>(lq * features * da +
                                                              2 * lk * features * da +
                                                              2 * lq * lk * da + lq * da * features);
    opts.counter->score_shapes.emplace_back(lq, lk);
  }
  return tr;
}

}  // namespace

double Activation::apply(double z) const {
  switch (kind) {
    case ActivationKind::kRelu: return z > 0.0 ? z : 0.0;
    case ActivationKind::kLeakyRelu: return z > 0.0 ? z : alpha * z;
    case ActivationKind::kIdentity: return z;
  }
  return z;
}

double Activation::derivative(double z) const {
  switch (kind) {
    case ActivationKind::kRelu: return z >= 0.0 ? 1.0 : 0.0;
    case ActivationKind::kLeakyRelu: return z >= 0.0 ? 1.0 : alpha;
    case ActivationKind::kIdentity: return 1.0;
  }
  return 1.0;
}

double Activation::lipschitz() const {
  return kind == ActivationKind::kLeakyRelu ? std::max(1.0, std::abs(alpha)) : 1.0;
}

AttentionMask::AttentionMask(std::size_t queries, std::size_t keys, bool fill)
    : queries_(queries), keys_(keys), allowed_(queries * keys, fill ? 1 : 0) {}

AttentionMask AttentionMask::causal(std::size_t n) {
  AttentionMask m(n, n, false);
  for (std::size_t q = 0; q < n; ++q)
    for (std::size_t k = 0; k <= q; ++k) m.set(q, k, true);
  return m;
}

std::uint64_t attention_flops(std::size_t queries, std::size_t keys, std::size_t features,
                              std::size_t attn_dim, std::size_t heads) {
  const std::uint64_t per_head = std::uint64_t{queries} * features * attn_dim  // Q
                                 + 2ull * keys * features * attn_dim           // K, V
                                 + 2ull * queries * keys * attn_dim            // QKᵀ, A·V
                                 + std::uint64_t{queries} * attn_dim * features;  // W_O
  const std::uint64_t combine = std::uint64_t{queries} * features;
  return heads * (per_head + combine);
}

Matrix row_softmax(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto in = m.row(r);
    auto dst = out.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      dst[c] = std::exp(in[c] - mx);
      sum += dst[c];
    }
    for (auto& v : dst) v /= sum;
  }
  return out;
}

void validate(const AttentionParams& p, std::size_t a, std::size_t b) {
  if (p.heads.empty()) throw ShapeError("attention needs at least one head");
  if (p.head_weights.order() != 1 || p.head_weights.size() != p.heads.size()) {
    throw ShapeError("head weight vector length must equal the number of heads");
  }
  for (const auto& h : p.heads) {
    const std::size_t da = h.w_q.order() == 3 ? h.w_q.dim(2) : 0;
    const Shape in_shape{a, b, da};
    const Shape out_shape{da, a, b};
    if (h.w_q.shape() != in_shape || h.w_k.shape() != in_shape || h.w_v.shape() != in_shape ||
        h.w_o.shape() != out_shape) {
      throw ShapeError("head weights do not match feature shape " + shape_string({a, b}));
    }
  }
}

Tensor sha_forward(const Tensor& x, const HeadParams& h, const Activation& act,
                   const AttentionOptions& opts) {
  require_order3(x, "attention input");
  AttentionParams p{{h}, Tensor({1}, 1.0)};
  validate(p, x.dim(1), x.dim(2));
  const Matrix xm = flatten_positions(x);
  return run_head(xm, xm, x.shape(), h, act, opts).out;
}

Tensor mha_cross_forward_traced(const Tensor& queries, const Tensor& memory,
                                const AttentionParams& p, const Activation& act,
                                const AttentionOptions& opts, MhaTrace& trace) {
  require_order3(queries, "attention queries");
  require_order3(memory, "attention memory");
  if (queries.dim(1) != memory.dim(1) || queries.dim(2) != memory.dim(2)) {
    throw ShapeError("queries " + shape_string(queries.shape()) + " and memory " +
                     shape_string(memory.shape()) + " differ in feature modes");
  }
  validate(p, queries.dim(1), queries.dim(2));
  const Matrix xq = flatten_positions(queries);
  const Matrix xkv = &queries == &memory ? xq : flatten_positions(memory);
  trace.heads.clear();
  Tensor out = Tensor::zeros(queries.shape());
  // Fixed head order keeps the combination bitwise reproducible.
  for (std::size_t h = 0; h < p.heads.size(); ++h) {
    trace.heads.push_back(run_head(xq, xkv, queries.shape(), p.heads[h], act, opts));
    const double w = p.head_weights[h];
    const auto& ho = trace.heads.back().out;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * ho[i];
    if (opts.counter) opts.counter->multiply_adds += out.size();
  }
  return out;
}

Tensor mha_cross_forward(const Tensor& queries, const Tensor& memory, const AttentionParams& p,
                         const Activation& act, const AttentionOptions& opts) {
  MhaTrace trace;
  return mha_cross_forward_traced(queries, memory, p, act, opts, trace);
}

Tensor mha_forward(const Tensor& x, const AttentionParams& p, const Activation& act,
                   const AttentionOptions& opts) {
  MhaTrace trace;
  return mha_cross_forward_traced(x, x, p, act, opts, trace);
}

Tensor stack_forward(const Tensor& x, std::span<const AttentionLayer> layers,
                     const AttentionOptions& opts) {
  Tensor cur = x;
  for (const auto& layer : layers) {
    Tensor next = mha_forward(cur, layer.params, layer.activation, opts);
    if (next.shape() != cur.shape()) throw ShapeError("attention layer changed the tensor shape");
    cur = std::move(next);
  }
  return cur;
}

}  // namespace tea::attention
