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
#include <random>
#include <vector>

#include "oracles.hpp"
#include "tea/decomp.hpp"
#include "tea/errors.hpp"

namespace tea::decomp {
namespace {

double orthonormality_gap(const Matrix& u) {
  Matrix g = matmul_tn(u, u);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  return frobenius_norm(g);
}

Tensor rank_one(std::mt19937_64& rng, const Shape& s) {
  std::vector<std::vector<double>> v;
  std::normal_distribution<double> n;
  for (std::size_t d : s) {
    v.emplace_back(d);
    for (double& x : v.back()) x = n(rng);
  }
  return outer_product(v);
}

CpFactors random_cp(std::mt19937_64& rng, const Shape& s, std::size_t rank) {
  CpFactors f;
  std::uniform_real_distribution<double> w(1.0, 3.0);
  for (std::size_t r = 0; r < rank; ++r) f.weights.push_back(w(rng));
  for (std::size_t d : s) {
    Matrix u = Matrix::from_tensor(random_normal({d, rank}, rng));
    for (std::size_t r = 0; r < rank; ++r) {
      double n = 0.0;
      for (std::size_t i = 0; i < d; ++i) n += u(i, r) * u(i, r);
      for (std::size_t i = 0; i < d; ++i) u(i, r) /= std::sqrt(n);
    }
    f.loadings.push_back(u);
  }
  return f;
}

TEST(LeftSvd, MatchesJacobiSingularValues) {
  std::mt19937_64 rng(1);
  for (const Shape& s : {Shape{5, 9}, Shape{9, 5}, Shape{70, 12}}) {
    const Matrix a = Matrix::from_tensor(random_normal(s, rng));
    const LeftSvd svd = left_singular_vectors(a);
    const auto want = oracle::mode_singular_values(a.as_tensor(), 0);
    ASSERT_GE(svd.singular_values.size(), std::min(s[0], s[1]));
    for (std::size_t i = 0; i < std::min(s[0], s[1]); ++i) {
      EXPECT_NEAR(svd.singular_values[i], want[i], 1e-9 * want[0]);
    }
    EXPECT_LT(orthonormality_gap(svd.vectors), 1e-10);
    for (std::size_t c = 0; c < svd.vectors.cols(); ++c) {
      double big = 0.0;
      for (std::size_t r = 0; r < svd.vectors.rows(); ++r) {
        if (std::abs(svd.vectors(r, c)) > std::abs(big)) big = svd.vectors(r, c);
      }
      EXPECT_GT(big, 0.0);
    }
  }
}

TEST(Hosvd, ExactRankOne) {
  std::mt19937_64 rng(2);
  const Tensor t = rank_one(rng, {4, 5, 6});
  EXPECT_LE(relative_error(t, tucker_reconstruct(hosvd(t, {1, 1, 1}))), 1e-10);
}

TEST(Hosvd, FullRanksAreLossless) {
  std::mt19937_64 rng(3);
  const Tensor t = random_normal({4, 3, 5}, rng);
  const TuckerFactors f = hosvd(t, {4, 3, 5});
  EXPECT_LE(relative_error(t, tucker_reconstruct(f)), 1e-10);
}

TEST(Hosvd, ErrorWithinDiscardedTails) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 5; ++rep) {
    const Tensor t = random_normal({6, 6, 6}, rng);
    const Ranks ranks{2, 2, 2};
    const TuckerFactors f = hosvd(t, ranks);
    const double err = frobenius_norm(sub(t, tucker_reconstruct(f)));
    double bound = 0.0;
    for (std::size_t m = 0; m < 3; ++m) {
      const auto sv = oracle::mode_singular_values(t, m);
      for (std::size_t i = ranks[m]; i < sv.size(); ++i) bound += sv[i] * sv[i];
    }
    EXPECT_LE(err * err, bound * (1 + 1e-12));
  }
}

TEST(Hosvd, LoadingsOrthonormal) {
  std::mt19937_64 rng(5);
  const Tensor t = random_normal({7, 5, 6}, rng);
  const TuckerFactors f = hosvd(t, {3, 2, 4});
  EXPECT_EQ(f.ranks(), (Ranks{3, 2, 4}));
  for (const Matrix& u : f.loadings) EXPECT_LE(orthonormality_gap(u), 1e-10);
}

TEST(Hosvd, RankOutOfRange) {
  const Tensor t = Tensor::ones({3, 3, 3});
  EXPECT_THROW(hosvd(t, {0, 1, 1}), InvalidRank);
  EXPECT_THROW(hosvd(t, {4, 1, 1}), InvalidRank);
  EXPECT_THROW(hosvd(t, {1, 1}), InvalidRank);
}

TEST(Hooi, ExactLowRankConvergesImmediately) {
  std::mt19937_64 rng(6);
  const Tensor t = rank_one(rng, {5, 4, 3});
  FitTrace trace;
  const TuckerFactors f = hooi(t, {1, 1, 1}, {}, &trace);
  EXPECT_LE(relative_error(t, tucker_reconstruct(f)), 1e-10);
  EXPECT_LE(trace.iterations, 1u);
}

TEST(Hooi, NoWorseThanHosvdAndMonotone) {
  std::mt19937_64 rng(7);
  const Tensor t = random_normal({8, 8, 8}, rng);
  FitTrace trace;
  const double e_hooi = relative_error(t, tucker_reconstruct(hooi(t, {3, 3, 3}, {}, &trace)));
  const double e_hosvd = relative_error(t, tucker_reconstruct(hosvd(t, {3, 3, 3})));
  EXPECT_LE(e_hooi, e_hosvd + 1e-14);
  for (std::size_t i = 1; i < trace.fit.size(); ++i) {
    EXPECT_GE(trace.fit[i], trace.fit[i - 1] - 1e-12) << "sweep " << i;
  }
}

TEST(Hooi, SingleSweepIsDeterministic) {
  std::mt19937_64 rng(8);
  const Tensor t = random_normal({6, 5, 4}, rng);
  const TuckerFactors a = hooi(t, {2, 2, 2}, {1, 1e-8});
  const TuckerFactors b = hooi(t, {2, 2, 2}, {1, 1e-8});
  EXPECT_EQ(a.core, b.core);
  for (std::size_t m = 0; m < 3; ++m) EXPECT_EQ(a.loadings[m], b.loadings[m]);
}

TEST(TuckerReconstruct, IdentityLoadings) {
  std::mt19937_64 rng(9);
  TuckerFactors f;
  f.core = random_normal({2, 3, 4}, rng);
  for (std::size_t d : {2, 3, 4}) f.loadings.push_back(Matrix::identity(d));
  EXPECT_EQ(tucker_reconstruct(f), f.core);
}

TEST(TuckerReconstruct, RankOneMatchesOuterProduct) {
  TuckerFactors f;
  f.core = Tensor({1, 1, 1}, {2.0});
  const std::vector<std::vector<double>> v = {{1, 2}, {3, -1, 0.5}, {0.25, 4}};
  for (const auto& x : v) f.loadings.push_back(Matrix(x.size(), 1, x));
  const Tensor want = scale(outer_product(v), 2.0);
  EXPECT_LT(max_abs_diff(tucker_reconstruct(f), want), 1e-14);
}

TEST(TuckerReconstruct, ShapeMismatch) {
  TuckerFactors f;
  f.core = Tensor::zeros({2, 2});
  f.loadings = {Matrix(3, 2), Matrix(3, 3)};
  EXPECT_THROW(tucker_reconstruct(f), ShapeError);
}

TEST(Cp, RecoversRankThree) {
  std::mt19937_64 rng(10);
  const CpFactors truth = random_cp(rng, {8, 8, 8}, 3);
  const Tensor t = cp_reconstruct(truth);
  FitTrace trace;
  CpOptions opts;
  opts.max_iter = 200;
  opts.seed = 1;
  const CpFactors f = cp_als(t, 3, opts, &trace);
  EXPECT_LE(relative_error(t, cp_reconstruct(f)), 1e-6);
  EXPECT_LE(trace.iterations, 200u);
  for (std::size_t i = 1; i < trace.residual.size(); ++i) {
    EXPECT_LE(trace.residual[i], trace.residual[i - 1] * (1 + 1e-9) + 1e-12) << "sweep " << i;
  }
}

TEST(Cp, RankOneWeightIsProductOfNorms) {
  const std::vector<std::vector<double>> v = {{1, 2, 2}, {3, 4}, {1, 0, 0, 0}};
  const Tensor t = outer_product(v);
  const CpFactors f = cp_als(t, 1);
  EXPECT_LE(relative_error(t, cp_reconstruct(f)), 1e-10);
  EXPECT_NEAR(std::abs(f.weights[0]), 3.0 * 5.0 * 1.0, 1e-9);
}

TEST(Cp, ZeroTensor) {
  const Tensor t = Tensor::zeros({3, 4, 2});
  FitTrace trace;
  const CpFactors f = cp_als(t, 2, {}, &trace);
  for (double w : f.weights) EXPECT_EQ(w, 0.0);
  EXPECT_EQ(frobenius_norm(cp_reconstruct(f)), 0.0);
  for (const Matrix& u : f.loadings) {
    for (std::size_t r = 0; r < u.cols(); ++r) {
      double n = 0.0;
      for (std::size_t i = 0; i < u.rows(); ++i) n += u(i, r) * u(i, r);
      EXPECT_NEAR(n, 1.0, 1e-12);
    }
  }
}

TEST(Cp, CollinearFactorsDoNotCrash) {
  const std::vector<std::vector<double>> v = {{1, 1}, {1, 2}, {3, 1}};
  const Tensor t = outer_product(v);
  const CpFactors f = cp_als(t, 3);
  EXPECT_TRUE(all_finite(cp_reconstruct(f).data()));
  EXPECT_LE(relative_error(t, cp_reconstruct(f)), 1e-6);
}

TEST(Cp, DeterministicInSeed) {
  std::mt19937_64 rng(11);
  const Tensor t = random_normal({4, 5, 3}, rng);
  CpOptions opts;
  opts.seed = 9;
  opts.max_iter = 20;
  const CpFactors a = cp_als(t, 2, opts);
  const CpFactors b = cp_als(t, 2, opts);
  EXPECT_EQ(a.weights, b.weights);
}

TEST(Cp, TuckerFormReconstructsTheSame) {
  std::mt19937_64 rng(12);
  const CpFactors f = random_cp(rng, {4, 5, 6}, 3);
  const TuckerFactors t = cp_to_tucker(f);
  EXPECT_EQ(t.core.shape(), (Shape{3, 3, 3}));
  const Tensor a = cp_reconstruct(f);
  EXPECT_LE(relative_error(a, tucker_reconstruct(t)), 1e-12);
}

TEST(Tt, TightEpsIsLossless) {
  std::mt19937_64 rng(13);
  const Tensor t = random_normal({3, 4, 2, 5}, rng);
  TtOptions opts;
  opts.eps = 1e-12;
  const TtFactors f = tt_svd(t, opts);
  EXPECT_EQ(f.shape(), t.shape());
  EXPECT_LE(relative_error(t, tt_reconstruct(f)), 1e-10);
}

TEST(Tt, SeparableTensorHasUnitRanks) {
  std::mt19937_64 rng(14);
  const Tensor t = rank_one(rng, {3, 4, 5, 2});
  TtOptions opts;
  opts.eps = 1e-10;
  const TtFactors f = tt_svd(t, opts);
  for (std::size_t r : f.ranks()) EXPECT_EQ(r, 1u);
  EXPECT_LE(relative_error(t, tt_reconstruct(f)), 1e-10);
}

TEST(Tt, ElementsMatchReconstruction) {
  std::mt19937_64 rng(15);
  const Tensor t = random_normal({4, 4, 4, 4}, rng);
  TtOptions opts;
  opts.max_ranks = {3, 5, 3};
  const TtFactors f = tt_svd(t, opts);
  const Tensor full = tt_reconstruct(f);
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  for (int k = 0; k < 50; ++k) {
    const std::vector<std::size_t> idx{pick(rng), pick(rng), pick(rng), pick(rng)};
    const double want = full.at(idx);
    EXPECT_LE(std::abs(tt_element(f, idx) - want), 1e-12 * std::max(std::abs(want), 1e-300));
  }
}

TEST(Tt, BadArguments) {
  const Tensor t = Tensor::ones({2, 2, 2});
  EXPECT_THROW(tt_svd(t, {}), InvalidArgument);
  TtOptions bad;
  bad.max_ranks = {0, 1};
  EXPECT_THROW(tt_svd(t, bad), InvalidRank);
}

TEST(StoredSize, TuckerCompression) {
  std::mt19937_64 rng(16);
  const TuckerFactors f = hosvd(random_normal({6, 6, 6}, rng), {2, 2, 2});
  EXPECT_EQ(stored_size(f), 8u + 3u * 12u);
  EXPECT_DOUBLE_EQ(static_cast<double>(stored_size(f)) / 216.0, 44.0 / 216.0);
}

TEST(StoredSize, CpAndTt) {
  std::mt19937_64 rng(17);
  EXPECT_EQ(stored_size(random_cp(rng, {4, 5, 6}, 2)), 2u + 2u * 15u);
  TtOptions opts;
  opts.max_ranks = {2, 2};
  const TtFactors f = tt_svd(random_normal({3, 4, 5}, rng), opts);
  EXPECT_EQ(stored_size(f), 1u * 3 * 2 + 2u * 4 * 2 + 2u * 5 * 1 + 1u);
}

}  // namespace
}  // namespace tea::decomp
