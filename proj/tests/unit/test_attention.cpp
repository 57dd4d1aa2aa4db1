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

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "tea/attention.hpp"
#include "tea/errors.hpp"

namespace tea::attention {
namespace {

AttentionParams random_params(std::size_t a, std::size_t b, std::size_t d, std::size_t heads,
                              std::mt19937_64& rng) {
  AttentionParams p;
  for (std::size_t h = 0; h < heads; ++h) p.heads.push_back(oracle::random_head(a, b, d, rng));
  p.head_weights = random_uniform({heads}, rng, -1.0, 1.0);
  return p;
}

TEST(Softmax, Cases) {
  const Matrix z = row_softmax(Matrix(1, 4, 0.0));
  for (double v : z.data()) EXPECT_DOUBLE_EQ(v, 0.25);
  const Matrix big = row_softmax(Matrix(1, 2, {1000.0, 1000.0}));
  EXPECT_DOUBLE_EQ(big(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(big(0, 1), 0.5);
  const Matrix l3 = row_softmax(Matrix(1, 2, {0.0, std::log(3.0)}));
  EXPECT_NEAR(l3(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(l3(0, 1), 0.75, 1e-15);
  const Matrix masked = row_softmax(Matrix(1, 3, {0.5, kMaskedLogit, 0.5}));
  EXPECT_EQ(masked(0, 1), 0.0);
}

TEST(Sha, ZeroInputGivesZero) {
  std::mt19937_64 rng(1);
  const HeadParams h = oracle::random_head(2, 3, 4, rng);
  for (const Activation& act : {Activation::relu(), Activation::leaky_relu(0.1), Activation::identity()}) {
    const Tensor out = sha_forward(Tensor::zeros({5, 2, 3}), h, act);
    EXPECT_EQ(frobenius_norm(out), 0.0);
  }
}

TEST(Sha, SinglePositionIgnoresQueryAndKey) {
  std::mt19937_64 rng(2);
  const Tensor x = random_normal({1, 2, 2}, rng);
  HeadParams h = oracle::random_head(2, 2, 3, rng);
  const Tensor a = sha_forward(x, h, Activation::relu());
  h.w_q = random_normal({2, 2, 3}, rng);
  h.w_k = random_normal({2, 2, 3}, rng);
  EXPECT_EQ(a, sha_forward(x, h, Activation::relu()));
  const Matrix v = contract_feature_modes(x, h.w_v);
  Tensor want({1, 2, 2});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t d = 0; d < 3; ++d) want(0, i, j) += std::max(v(0, d), 0.0) * h.w_o(d, i, j);
  EXPECT_LT(max_abs_diff(a, want), 1e-14);
}

TEST(Sha, MatchesNestedLoopsOnRandomInstances) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> ext(1, 5);
  double worst = 0.0;
  for (int rep = 0; rep < 150; ++rep) {
    const std::size_t L = ext(rng), A = ext(rng), B = ext(rng), D = ext(rng);
    const Tensor x = random_normal({L, A, B}, rng);
    const HeadParams h = oracle::random_head(A, B, D, rng);
    const Activation act = rep % 3 == 0 ? Activation::identity()
                           : rep % 3 == 1 ? Activation::relu()
                                          : Activation::leaky_relu(0.2);
    const bool causal = rep % 2 == 0;
    const bool scale = rep % 5 == 0;
    const AttentionMask mask = AttentionMask::causal(L);
    AttentionOptions opts;
    opts.mask = causal ? &mask : nullptr;
    opts.scale_scores = scale;
    const Tensor got = sha_forward(x, h, act, opts);
    const Tensor want = oracle::sha(x, h, act, causal ? &mask : nullptr, scale);
    worst = std::max(worst, oracle::max_rel_error(got, want, 1.0));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Sha, ShapeErrors) {
  std::mt19937_64 rng(4);
  const HeadParams h = oracle::random_head(2, 3, 4, rng);
  EXPECT_THROW(sha_forward(Tensor::zeros({5, 3, 2}), h, Activation::relu()), ShapeError);
  EXPECT_THROW(sha_forward(Tensor::zeros({5, 6}), h, Activation::relu()), ShapeError);
  const AttentionMask wrong = AttentionMask::causal(4);
  AttentionOptions opts;
  opts.mask = &wrong;
  EXPECT_THROW(sha_forward(Tensor::zeros({5, 2, 3}), h, Activation::relu(), opts), ShapeError);
}

TEST(Mha, OneHeadUnitWeightIsSha) {
  std::mt19937_64 rng(5);
  const Tensor x = random_normal({4, 2, 3}, rng);
  AttentionParams p;
  p.heads.push_back(oracle::random_head(2, 3, 2, rng));
  p.head_weights = Tensor({1}, {1.0});
  EXPECT_EQ(mha_forward(x, p, Activation::relu()), sha_forward(x, p.heads[0], Activation::relu()));
  EXPECT_EQ(msa_forward(x, p, Activation::relu()), sha_forward(x, p.heads[0], Activation::relu()));
}

TEST(Mha, ZeroHeadWeights) {
  std::mt19937_64 rng(6);
  AttentionParams p = random_params(2, 2, 3, 3, rng);
  p.head_weights = Tensor::zeros({3});
  EXPECT_EQ(frobenius_norm(mha_forward(random_normal({4, 2, 2}, rng), p, Activation::relu())), 0.0);
}

TEST(Mha, IdenticalHeadsAverageToOne) {
  std::mt19937_64 rng(7);
  const Tensor x = random_normal({5, 3, 2}, rng);
  const HeadParams h = oracle::random_head(3, 2, 4, rng);
  AttentionParams p;
  p.heads = {h, h};
  p.head_weights = Tensor({2}, {0.5, 0.5});
  EXPECT_LT(max_abs_diff(mha_forward(x, p, Activation::relu()), sha_forward(x, h, Activation::relu())),
            1e-14);
}

TEST(Mha, LinearInHeadWeights) {
  std::mt19937_64 rng(8);
  const Tensor x = random_normal({4, 2, 2}, rng);
  AttentionParams p = random_params(2, 2, 3, 2, rng);
  Tensor want = Tensor::zeros({4, 2, 2});
  for (std::size_t h = 0; h < 2; ++h) {
    want += scale(sha_forward(x, p.heads[h], Activation::relu()), p.head_weights[h]);
  }
  EXPECT_LT(max_abs_diff(mha_forward(x, p, Activation::relu()), want), 1e-13);
}

TEST(Mha, ShapeErrors) {
  std::mt19937_64 rng(9);
  AttentionParams p = random_params(2, 2, 3, 2, rng);
  p.head_weights = Tensor::zeros({3});
  EXPECT_THROW(mha_forward(Tensor::zeros({3, 2, 2}), p, Activation::relu()), ShapeError);
}

TEST(Stack, EmptyIsIdentity) {
  std::mt19937_64 rng(10);
  const Tensor x = random_normal({3, 2, 2}, rng);
  EXPECT_EQ(stack_forward(x, {}), x);
}

TEST(Stack, OneAndTwoLayers) {
  std::mt19937_64 rng(11);
  const Tensor x = random_normal({3, 2, 2}, rng);
  std::vector<AttentionLayer> layers = {{random_params(2, 2, 3, 2, rng), Activation::relu()},
                                        {random_params(2, 2, 2, 1, rng), Activation::leaky_relu(0.3)}};
  const Tensor one = mha_forward(x, layers[0].params, layers[0].activation);
  EXPECT_EQ(stack_forward(x, std::span(layers).first(1)), one);
  EXPECT_EQ(stack_forward(x, layers), mha_forward(one, layers[1].params, layers[1].activation));
}

TEST(Properties, CausalPerturbationEveryPosition) {
  std::mt19937_64 rng(12);
  for (std::size_t L : {1u, 2u, 7u, 16u}) {
    const Tensor x = random_normal({L, 2, 3}, rng);
    const AttentionParams p = random_params(2, 3, 4, 2, rng);
    const AttentionMask mask = AttentionMask::causal(L);
    AttentionOptions opts;
    opts.mask = &mask;
    const Tensor base = mha_forward(x, p, Activation::leaky_relu(0.1), opts);
    for (std::size_t t = 0; t < L; ++t) {
      Tensor y = x;
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j) y(t, i, j) += 0.7;
      const Tensor out = mha_forward(y, p, Activation::leaky_relu(0.1), opts);
      for (std::size_t l = 0; l < L; ++l) {
        double diff = 0.0;
        for (std::size_t i = 0; i < 2; ++i)
          for (std::size_t j = 0; j < 3; ++j) diff = std::max(diff, std::abs(out(l, i, j) - base(l, i, j)));
        if (l < t) {
          EXPECT_EQ(diff, 0.0) << "L=" << L << " t=" << t << " l=" << l;
        } else if (l == t) {
          EXPECT_GT(diff, 0.0) << "L=" << L << " t=" << t;
        }
      }
    }
  }
}

TEST(Properties, PermutationEquivariantWithoutMask) {
  std::mt19937_64 rng(13);
  const std::size_t L = 6;
  const Tensor x = random_normal({L, 2, 2}, rng);
  const AttentionParams p = random_params(2, 2, 3, 2, rng);
  std::vector<std::size_t> perm(L);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Tensor xp({L, 2, 2});
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t k = 0; k < 4; ++k) xp[l * 4 + k] = x[perm[l] * 4 + k];
  const Tensor out = mha_forward(x, p, Activation::relu());
  const Tensor outp = mha_forward(xp, p, Activation::relu());
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(outp[l * 4 + k], out[perm[l] * 4 + k], 1e-12);
}

TEST(Properties, CrossAttentionShapes) {
  std::mt19937_64 rng(14);
  const AttentionParams p = random_params(2, 3, 2, 2, rng);
  const Tensor q = random_normal({4, 2, 3}, rng);
  const Tensor mem = random_normal({7, 2, 3}, rng);
  EXPECT_EQ(mha_cross_forward(q, mem, p, Activation::relu()).shape(), (Shape{4, 2, 3}));
  EXPECT_THROW(mha_cross_forward(q, random_normal({7, 3, 2}, rng), p, Activation::relu()), ShapeError);
}

TEST(Flops, CounterMatchesClosedForm) {
  std::mt19937_64 rng(15);
  for (auto [L, A, B, D, H] : std::vector<std::array<std::size_t, 5>>{
           {3, 2, 2, 2, 1}, {8, 4, 4, 3, 2}, {12, 4, 16, 16, 2}, {5, 1, 7, 4, 3}}) {
    const AttentionParams p = random_params(A, B, D, H, rng);
    FlopCounter counter;
    AttentionOptions opts;
    opts.counter = &counter;
    (void)mha_forward(random_normal({L, A, B}, rng), p, Activation::relu(), opts);
    const std::uint64_t P = A * B;
    // The weighted head sum costs L·P per head.
    const std::uint64_t per_head = L * P * D + 2 * L * P * D + 2 * L * L * D + L * D * P;
    EXPECT_EQ(counter.multiply_adds, H * (per_head + L * P));
    EXPECT_EQ(counter.multiply_adds, attention_flops(L, L, P, D, H));
    ASSERT_EQ(counter.score_shapes.size(), H);
    EXPECT_EQ(counter.score_shapes[0], std::make_pair(L, L));
  }
}

TEST(Activation, Kinds) {
  EXPECT_EQ(Activation::relu().apply(-2.0), 0.0);
  EXPECT_EQ(Activation::relu().apply(3.0), 3.0);
  EXPECT_DOUBLE_EQ(Activation::leaky_relu(0.1).apply(-2.0), -0.2);
  EXPECT_EQ(Activation::identity().apply(-2.0), -2.0);
  for (const Activation& a : {Activation::relu(), Activation::leaky_relu(0.1), Activation::identity()}) {
    EXPECT_EQ(a.apply(0.0), 0.0);
    EXPECT_LE(a.lipschitz(), 1.0);
  }
}

}  // namespace
}  // namespace tea::attention
