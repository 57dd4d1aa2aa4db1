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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "tea/autodiff.hpp"
#include "tea/errors.hpp"
#include "tea/train.hpp"

namespace tea::autodiff {
namespace {

using model::ModelConfig;
using model::ModelParams;
using attention::row_softmax;

ModelConfig toy_config() {
  ModelConfig c;
  c.seq_len = 8;
  c.label_len = 4;
  c.pred_len = 4;
  c.features = 7;
  c.model_len = 4;
  c.model_dim = 4;
  c.attn_dim = 3;
  c.heads = 2;
  c.enc_layers = 2;
  c.dec_layers = 1;
  c.enc_ranks = {3, 2, 2};
  c.seed = 11;
  return c;
}

std::vector<data::ForecastWindow> random_batch(const ModelConfig& c, std::size_t n,
                                               std::mt19937_64& rng) {
  std::vector<data::ForecastWindow> out;
  for (std::size_t k = 0; k < n; ++k) {
    data::ForecastWindow w;
    w.encoder_input = random_normal({c.seq_len, c.features}, rng);
    w.decoder_seed = Tensor({c.label_len, c.features});
    for (std::size_t l = 0; l < c.label_len; ++l)
      for (std::size_t f = 0; f < c.features; ++f)
        w.decoder_seed(l, f) = w.encoder_input(c.seq_len - c.label_len + l, f);
    w.target = random_normal({c.pred_len, c.features}, rng);
    w.start = k;
    out.push_back(std::move(w));
  }
  return out;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

constexpr double kTol = 1e-4;

TEST(Vjp, RowSoftmax) {
  std::mt19937_64 rng(1);
  const Tensor s0 = random_normal({3, 5}, rng);
  const Tensor g = random_normal({3, 5}, rng);
  const Matrix p = row_softmax(Matrix::from_tensor(s0));
  const Tensor analytic = row_softmax_backward(p, Matrix::from_tensor(g)).as_tensor();
  const Tensor numeric = oracle::numeric_gradient(
      [&](const Tensor& s) { return dot(row_softmax(Matrix::from_tensor(s)).as_tensor(), g); }, s0);
  EXPECT_LT(oracle::max_rel_error(analytic, numeric), kTol);
}

TEST(Vjp, RowSoftmaxMaskedEntriesGetNothing) {
  Matrix s(1, 3, {0.3, attention::kMaskedLogit, -0.2});
  const Matrix p = row_softmax(s);
  const Matrix d = row_softmax_backward(p, Matrix(1, 3, {1.0, 5.0, -2.0}));
  EXPECT_EQ(d(0, 1), 0.0);
}

TEST(Vjp, Activations) {
  std::mt19937_64 rng(2);
  Tensor z0 = random_normal({4, 6}, rng);
  for (double& v : z0.data()) {
    if (std::abs(v) < 1e-3) v = 0.5;
  }
  const Tensor g = random_normal({4, 6}, rng);
  for (const auto& act : {attention::Activation::relu(), attention::Activation::leaky_relu(0.1),
                          attention::Activation::identity()}) {
    const Tensor analytic = activation_backward(z0, g, act);
    const Tensor numeric = oracle::numeric_gradient(
        [&](const Tensor& z) {
          double s = 0.0;
          for (std::size_t i = 0; i < z.size(); ++i) s += act.apply(z[i]) * g[i];
          return s;
        },
        z0);
    EXPECT_LT(oracle::max_rel_error(analytic, numeric), kTol);
  }
}

TEST(Vjp, ModeProductWithConstantMatrix) {
  std::mt19937_64 rng(3);
  const Tensor x0 = random_normal({3, 4, 2}, rng);
  for (std::size_t mode = 0; mode < 3; ++mode) {
    const Matrix u = Matrix::from_tensor(random_normal({5, x0.dim(mode)}, rng));
    const Tensor g = random_normal(oracle::mode_product(x0, u, mode).shape(), rng);
    const Tensor analytic = mode_n_product_backward(g, u, mode);
    const Tensor numeric = oracle::numeric_gradient(
        [&](const Tensor& x) { return dot(mode_n_product(x, u, mode), g); }, x0);
    EXPECT_LT(oracle::max_rel_error(analytic, numeric), kTol);
  }
}

TEST(Vjp, Contract) {
  std::mt19937_64 rng(4);
  const Tensor x0 = random_normal({3, 2, 4}, rng);
  const Tensor w0 = random_normal({2, 4, 5}, rng);
  const Tensor g = random_normal({3, 5}, rng);
  Tensor gw = Tensor::zeros_like(w0);
  const Tensor gx = contract_backward(x0, w0, 2, g, gw);
  const Tensor nx =
      oracle::numeric_gradient([&](const Tensor& x) { return dot(contract(x, w0, 2), g); }, x0);
  const Tensor nw =
      oracle::numeric_gradient([&](const Tensor& w) { return dot(contract(x0, w, 2), g); }, w0);
  EXPECT_LT(oracle::max_rel_error(gx, nx), kTol);
  EXPECT_LT(oracle::max_rel_error(gw, nw), kTol);
}

TEST(Vjp, LayerNorm) {
  std::mt19937_64 rng(5);
  const Tensor x0 = random_normal({3, 2, 3}, rng);
  model::LayerNormParams p{random_normal({2, 3}, rng), random_normal({2, 3}, rng)};
  const Tensor g = random_normal({3, 2, 3}, rng);
  model::NormTrace trace;
  (void)model::layer_norm(x0, p, &trace);
  model::LayerNormParams grad{Tensor::zeros({2, 3}), Tensor::zeros({2, 3})};
  const Tensor dx = layer_norm_backward(g, p, trace, grad);
  EXPECT_LT(oracle::max_rel_error(
                dx, oracle::numeric_gradient(
                        [&](const Tensor& x) { return dot(model::layer_norm(x, p), g); }, x0)),
            kTol);
  EXPECT_LT(oracle::max_rel_error(
                grad.gain, oracle::numeric_gradient(
                               [&](const Tensor& gain) {
                                 return dot(model::layer_norm(x0, {gain, p.bias}), g);
                               },
                               p.gain)),
            kTol);
  EXPECT_LT(oracle::max_rel_error(
                grad.bias, oracle::numeric_gradient(
                               [&](const Tensor& bias) {
                                 return dot(model::layer_norm(x0, {p.gain, bias}), g);
                               },
                               p.bias)),
            kTol);
}

attention::AttentionParams zeros_like(const attention::AttentionParams& p) {
  attention::AttentionParams z = p;
  for (auto& h : z.heads) {
    h.w_q = Tensor::zeros_like(h.w_q);
    h.w_k = Tensor::zeros_like(h.w_k);
    h.w_v = Tensor::zeros_like(h.w_v);
    h.w_o = Tensor::zeros_like(h.w_o);
  }
  z.head_weights = Tensor::zeros_like(p.head_weights);
  return z;
}

TEST(Vjp, CrossAttentionAllInputs) {
  std::mt19937_64 rng(6);
  attention::AttentionParams p;
  for (int h = 0; h < 2; ++h) p.heads.push_back(oracle::random_head(2, 2, 3, rng));
  p.head_weights = Tensor({2}, {0.7, -0.4});
  const auto act = attention::Activation::leaky_relu(0.2);
  const Tensor q0 = random_normal({3, 2, 2}, rng);
  const Tensor m0 = random_normal({4, 2, 2}, rng);
  const Tensor g = random_normal({3, 2, 2}, rng);
  attention::MhaTrace trace;
  (void)attention::mha_cross_forward_traced(q0, m0, p, act, {}, trace);
  auto grad = zeros_like(p);
  Tensor gq = Tensor::zeros_like(q0), gm = Tensor::zeros_like(m0);
  mha_backward(q0, m0, p, act, false, trace, g, grad, gq, gm);

  auto f = [&](const Tensor& q, const Tensor& m, const attention::AttentionParams& pp) {
    return dot(attention::mha_cross_forward(q, m, pp, act), g);
  };
  EXPECT_LT(oracle::max_rel_error(gq, oracle::numeric_gradient(
                                          [&](const Tensor& q) { return f(q, m0, p); }, q0)),
            kTol);
  EXPECT_LT(oracle::max_rel_error(gm, oracle::numeric_gradient(
                                          [&](const Tensor& m) { return f(q0, m, p); }, m0)),
            kTol);
  EXPECT_LT(oracle::max_rel_error(grad.head_weights,
                                  oracle::numeric_gradient(
                                      [&](const Tensor& w) {
                                        auto pp = p;
                                        pp.head_weights = w;
                                        return f(q0, m0, pp);
                                      },
                                      p.head_weights)),
            kTol);
  for (std::size_t h = 0; h < 2; ++h) {
    for (int which = 0; which < 4; ++which) {
      auto pick = [&](attention::HeadParams& hp) -> Tensor& {
        return which == 0 ? hp.w_q : which == 1 ? hp.w_k : which == 2 ? hp.w_v : hp.w_o;
      };
      auto base = p;
      const Tensor numeric = oracle::numeric_gradient(
          [&](const Tensor& w) {
            auto pp = p;
            pick(pp.heads[h]) = w;
            return f(q0, m0, pp);
          },
          pick(base.heads[h]));
      EXPECT_LT(oracle::max_rel_error(pick(grad.heads[h]), numeric), kTol)
          << "head " << h << " weight " << which;
    }
  }
}

TEST(Loss, HeadOnlyModelMatchesLeastSquaresGradient) {
  ModelConfig c = toy_config();
  c.enc_layers = 0;
  c.dec_layers = 0;
  const ModelParams p = init_params(c);
  std::mt19937_64 rng(7);
  const auto batch = random_batch(c, 3, rng);
  const LossAndGrad lg = loss_and_grad(p, c, batch);

  // With no layers and zero future rows, the head sees only the positional
  // table of the decoder: H[t, j] = mean_i P[label + t, i, j].
  Tensor dw = Tensor::zeros({c.model_dim, c.features});
  Tensor db = Tensor::zeros({c.features});
  double loss = 0.0;
  const double n = static_cast<double>(c.pred_len * c.features);
  for (const auto& w : batch) {
    Tensor h({c.pred_len, c.model_dim});
    for (std::size_t t = 0; t < c.pred_len; ++t)
      for (std::size_t j = 0; j < c.model_dim; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < c.model_len; ++i) s += p.dec_embed.positional(c.label_len + t, i, j);
        h(t, j) = s / static_cast<double>(c.model_len);
      }
    for (std::size_t t = 0; t < c.pred_len; ++t)
      for (std::size_t f = 0; f < c.features; ++f) {
        double y = p.head.bias[f];
        for (std::size_t j = 0; j < c.model_dim; ++j) y += h(t, j) * p.head.weight(j, f);
        const double r = y - w.target(t, f);
        loss += r * r / n / batch.size();
        for (std::size_t j = 0; j < c.model_dim; ++j) dw(j, f) += 2.0 * r * h(t, j) / n / batch.size();
        db[f] += 2.0 * r / n / batch.size();
      }
  }
  EXPECT_NEAR(lg.loss, loss, 1e-12);
  EXPECT_LT(max_abs_diff(lg.grad.head.weight, dw), 1e-12);
  EXPECT_LT(max_abs_diff(lg.grad.head.bias, db), 1e-12);
}

TEST(Loss, ZeroResidualGivesZeroGradient) {
  const ModelConfig c = toy_config();
  const ModelParams p = init_params(c);
  std::mt19937_64 rng(8);
  auto batch = random_batch(c, 2, rng);
  for (auto& w : batch) w.target = model::model_forward(w, p, c);
  const LossAndGrad lg = loss_and_grad(p, c, batch);
  EXPECT_EQ(lg.loss, 0.0);
  model::for_each_param(lg.grad, [](const std::string& name, const Tensor& t) {
    for (double v : t.values()) EXPECT_LE(std::abs(v), 1e-12) << name;
  });
}

TEST(Loss, EmptyBatch) {
  const ModelConfig c = toy_config();
  EXPECT_THROW(loss_and_grad(init_params(c), c, {}), DataError);
}

TEST(Loss, NonFiniteInput) {
  ModelConfig c = toy_config();
  c.tea_encoder = false;
  std::mt19937_64 rng(9);
  auto batch = random_batch(c, 2, rng);
  batch[1].encoder_input[3] = std::numeric_limits<double>::infinity();
  try {
    (void)loss_and_grad(init_params(c), c, batch, 17);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.step(), "step 17");
  }
  // On the TEA path the Tucker fit sees the bad value first.
  c.tea_encoder = true;
  EXPECT_THROW(loss_and_grad(init_params(c), c, batch), DecompositionError);
}

TEST(Loss, SmallStepDecreasesLoss) {
  const ModelConfig c = toy_config();
  ModelParams p = init_params(c);
  std::mt19937_64 rng(10);
  const auto batch = random_batch(c, 4, rng);
  const LossAndGrad lg = loss_and_grad(p, c, batch);
  train::sgd_step(p, lg.grad, 1e-4);
  EXPECT_LT(batch_loss(p, c, batch), lg.loss);
}

struct Variant {
  const char* name;
  void (*apply)(ModelConfig&);
};

class GradcheckVariants : public ::testing::TestWithParam<Variant> {};

TEST_P(GradcheckVariants, EveryParameterAgrees) {
  ModelConfig c = toy_config();
  GetParam().apply(c);
  const ModelParams p = init_params(c);
  std::mt19937_64 rng(c.seed);
  const auto batch = random_batch(c, 2, rng);
  const GradCheckResult r = gradcheck(p, c, batch);
  std::size_t tensors = 0;
  model::for_each_param(p, [&](const std::string&, const Tensor&) { ++tensors; });
  EXPECT_EQ(r.tensors.size(), tensors);
  EXPECT_EQ(r.checked, parameter_count(p));
  for (const auto& f : r.failures) {
    ADD_FAILURE() << f.name << "[" << f.index << "] analytic " << f.analytic << " numeric "
                  << f.numeric << " rel " << f.rel_error;
  }
  EXPECT_TRUE(r.passed());
  EXPECT_LE(r.max_rel_error, 1e-4);
}

INSTANTIATE_TEST_SUITE_P(
    Toy, GradcheckVariants,
    ::testing::Values(
        Variant{"default", [](ModelConfig&) {}},
        Variant{"tea_decoder", [](ModelConfig& c) { c.tea_decoder = true; }},
        Variant{"scaled_leaky",
                [](ModelConfig& c) {
                  c.scale_scores = true;
                  c.activation = attention::Activation::leaky_relu(0.1);
                  c.seed = 3;
                }},
        Variant{"plain_control", [](ModelConfig& c) { c.tea_encoder = false; }},
        Variant{"hooi",
                [](ModelConfig& c) {
                  c.tucker = model::TuckerAlgorithm::kHooi;
                  c.seed = 19;
                }}),
    [](const ::testing::TestParamInfo<Variant>& info) { return std::string(info.param.name); });

TEST(Gradcheck, DetectsAWrongGradient) {
  // Sanity of the checker itself: compare against a deliberately broken
  // analytic value through relative_error.
  EXPECT_GT(relative_error(1.0, 1.1, 1e-8), 1e-4);
  EXPECT_LT(relative_error(1.0, 1.0 + 1e-9, 1e-8), 1e-4);
  EXPECT_EQ(relative_error(0.0, 0.0, 1e-8), 0.0);
  EXPECT_NEAR(relative_error(1e-12, 0.0, 1e-8), 1e-4, 1e-16);
}

}  // namespace
}  // namespace tea::autodiff
