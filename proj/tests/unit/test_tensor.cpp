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
#include "tea/errors.hpp"
#include "tea/tensor.hpp"

namespace tea {
namespace {

Tensor iota(Shape s) {
  Tensor t(std::move(s));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i + 1);
  return t;
}

TEST(Unfold, MatrixModeZeroIsItself) {
  const Tensor t({2, 2}, {1, 2, 3, 4});
  const Matrix m = unfold(t, 0);
  EXPECT_EQ(m, Matrix(2, 2, {1, 2, 3, 4}));
}

TEST(Unfold, ZeroTensorMiddleMode) {
  const Matrix m = unfold(Tensor::zeros({2, 3, 4}), 1);
  EXPECT_EQ(m.rows(), 3u);
  EXPECT_EQ(m.cols(), 8u);
  for (double v : m.data()) EXPECT_EQ(v, 0.0);
}

TEST(Unfold, TwoByTwoByTwoMatchesEnumeration) {
  const Tensor t = iota({2, 2, 2});
  for (std::size_t mode = 0; mode < 3; ++mode) {
    EXPECT_EQ(unfold(t, mode), oracle::unfold(t, mode)) << "mode " << mode;
  }
  // Earliest remaining mode varies fastest.
  EXPECT_EQ(unfold(t, 0), Matrix(2, 4, {1, 3, 2, 4, 5, 7, 6, 8}));
}

TEST(Unfold, RandomShapesMatchEnumeration) {
  std::mt19937_64 rng(3);
  for (const Shape& s : {Shape{3, 4, 5}, Shape{2, 3, 2, 4}, Shape{2, 2, 3, 2, 2}, Shape{7}}) {
    const Tensor t = random_normal(s, rng);
    for (std::size_t mode = 0; mode < s.size(); ++mode) {
      EXPECT_EQ(unfold(t, mode), oracle::unfold(t, mode));
    }
  }
}

TEST(Unfold, ModeOutOfRange) {
  EXPECT_THROW(unfold(Tensor::zeros({2, 2}), 2), InvalidMode);
}

TEST(Fold, RoundTripIsExactUpToOrderFive) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> ext(1, 4);
  for (std::size_t order = 1; order <= 5; ++order) {
    for (int rep = 0; rep < 5; ++rep) {
      Shape s(order);
      for (auto& d : s) d = ext(rng);
      const Tensor t = random_normal(s, rng);
      for (std::size_t mode = 0; mode < order; ++mode) {
        EXPECT_EQ(fold(unfold(t, mode), mode, s), t);
      }
    }
  }
}

TEST(Fold, ZeroMatrixGivesZeroTensor) {
  EXPECT_EQ(fold(Matrix(3, 8), 1, {2, 3, 4}), Tensor::zeros({2, 3, 4}));
}

TEST(Fold, HandEnumeratedCase) {
  const Tensor t = iota({2, 2, 2});
  EXPECT_EQ(fold(Matrix(2, 4, {1, 5, 2, 6, 3, 7, 4, 8}), 1, {2, 2, 2}), t);
}

TEST(Fold, ShapeMismatch) {
  EXPECT_THROW(fold(Matrix(3, 7), 1, {2, 3, 4}), ShapeError);
}

TEST(ModeProduct, IdentityEveryMode) {
  std::mt19937_64 rng(5);
  const Tensor t = random_normal({2, 3, 4}, rng);
  for (std::size_t mode = 0; mode < 3; ++mode) {
    EXPECT_EQ(mode_n_product(t, Matrix::identity(t.dim(mode)), mode), t);
  }
}

TEST(ModeProduct, RankOneTensor) {
  std::mt19937_64 rng(6);
  const std::vector<std::vector<double>> v = {{1.0, -2.0, 0.5}, {3.0, 1.0}, {0.25, 2.0, -1.0, 4.0}};
  const Tensor t = outer_product(v);
  const Matrix u(2, 3, {1, 2, 3, -1, 0, 4});
  const Tensor got = mode_n_product(t, u, 0);
  for (std::size_t i = 0; i < 2; ++i) {
    double ua = 0.0;
    for (std::size_t k = 0; k < 3; ++k) ua += u(i, k) * v[0][k];
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(got(i, j, k), ua * v[1][j] * v[2][k]);
    }
  }
}

TEST(ModeProduct, ScalarLike) {
  const Tensor t({1, 1, 1}, {3.5});
  EXPECT_EQ(mode_n_product(t, Matrix(1, 1, {2.0}), 0)[0], 7.0);
}

TEST(ModeProduct, MatchesLoopOracle) {
  std::mt19937_64 rng(8);
  const Tensor t = random_normal({3, 4, 5}, rng);
  for (std::size_t mode = 0; mode < 3; ++mode) {
    const Matrix u = Matrix::from_tensor(random_normal({6, t.dim(mode)}, rng));
    EXPECT_LT(max_abs_diff(mode_n_product(t, u, mode), oracle::mode_product(t, u, mode)), 1e-12);
    const Matrix w = Matrix::from_tensor(random_normal({t.dim(mode), 2}, rng));
    EXPECT_LT(max_abs_diff(mode_n_product_transposed(t, w, mode),
                           oracle::mode_product(t, w.transposed(), mode)),
              1e-12);
  }
}

TEST(ModeProduct, AssociativeAcrossModes) {
  std::mt19937_64 rng(9);
  const Tensor t = random_normal({3, 4, 5}, rng);
  const Matrix a = Matrix::from_tensor(random_normal({2, 3}, rng));
  const Matrix b = Matrix::from_tensor(random_normal({6, 4}, rng));
  const Tensor ab = mode_n_product(mode_n_product(t, a, 0), b, 1);
  const Tensor ba = mode_n_product(mode_n_product(t, b, 1), a, 0);
  EXPECT_LT(oracle::max_rel_error(ab, ba, 1e-300), 1e-12);
}

TEST(ModeProduct, DimensionMismatch) {
  EXPECT_THROW(mode_n_product(Tensor::zeros({2, 3}), Matrix(2, 2), 1), ShapeError);
  EXPECT_THROW(mode_n_product(Tensor::zeros({2, 3}), Matrix(2, 2), 2), InvalidMode);
}

TEST(Contract, AllOnesGivesFours) {
  const Matrix m = contract_feature_modes(Tensor::ones({2, 2, 2}), Tensor::ones({2, 2, 3}));
  EXPECT_EQ(m, Matrix(2, 3, 4.0));
}

TEST(Contract, ZeroWeights) {
  std::mt19937_64 rng(1);
  const Matrix m = contract_feature_modes(random_normal({3, 2, 2}, rng), Tensor::zeros({2, 2, 4}));
  EXPECT_EQ(m, Matrix(3, 4, 0.0));
}

TEST(Contract, LinearInWeights) {
  std::mt19937_64 rng(2);
  const Tensor x = random_normal({4, 3, 2}, rng);
  const Tensor w1 = random_normal({3, 2, 5}, rng);
  const Tensor w2 = random_normal({3, 2, 5}, rng);
  const Tensor lhs = contract_feature_modes(x, add(w1, w2)).as_tensor();
  const Tensor rhs =
      add(contract_feature_modes(x, w1).as_tensor(), contract_feature_modes(x, w2).as_tensor());
  EXPECT_LT(max_abs_diff(lhs, rhs), 1e-12);
}

TEST(Contract, RandomShapesMatchLoops) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<std::size_t> ext(1, 6);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t l = ext(rng), a = ext(rng), b = ext(rng), d = ext(rng);
    const Tensor x = random_normal({l, a, b}, rng);
    const Tensor w = random_normal({a, b, d}, rng);
    const Tensor want = oracle::contract(x, w, 2);
    EXPECT_LT(oracle::max_rel_error(contract_feature_modes(x, w).as_tensor(), want, 1e-12), 1e-12);
    EXPECT_LT(oracle::max_rel_error(contract(x, w, 2), want, 1e-12), 1e-12);
  }
}

TEST(Contract, ModeMismatch) {
  EXPECT_THROW(contract_feature_modes(Tensor::zeros({2, 2, 3}), Tensor::zeros({2, 2, 3})),
               ShapeError);
}

TEST(Contract, InputsUntouched) {
  std::mt19937_64 rng(13);
  const Tensor x = random_normal({3, 2, 2}, rng);
  const Tensor w = random_normal({2, 2, 3}, rng);
  const Tensor x0 = x, w0 = w;
  (void)contract(x, w, 2);
  (void)mode_n_product(x, Matrix::identity(2), 1);
  (void)unfold(x, 2);
  EXPECT_EQ(x, x0);
  EXPECT_EQ(w, w0);
}

TEST(Outer, UnitVectors) {
  const std::vector<std::vector<double>> v = {{1, 0}, {1, 0}};
  EXPECT_EQ(outer_product(v), Tensor({2, 2}, {1, 0, 0, 0}));
}

TEST(Outer, HandMultiplied) {
  const std::vector<std::vector<double>> v = {{1, 2}, {3, 4}};
  EXPECT_EQ(outer_product(v), Tensor({2, 2}, {3, 4, 6, 8}));
}

TEST(Outer, ZeroVector) {
  const std::vector<std::vector<double>> v = {{1, 2}, {0, 0, 0}, {5}};
  EXPECT_EQ(outer_product(v), Tensor::zeros({2, 3, 1}));
}

TEST(Outer, EmptyList) {
  const std::vector<std::vector<double>> none;
  EXPECT_THROW(outer_product(none), InvalidArgument);
}

TEST(Norm, Cases) {
  EXPECT_EQ(frobenius_norm(Tensor::zeros({3, 3})), 0.0);
  EXPECT_DOUBLE_EQ(frobenius_norm(Tensor::ones({2, 3})), std::sqrt(6.0));
  std::mt19937_64 rng(4);
  const Tensor t = random_normal({4, 5, 3}, rng);
  double loop = 0.0;
  for (double v : t.values()) loop += v * v;
  const double n = frobenius_norm(t);
  EXPECT_NEAR(n * n, loop, 1e-12 * loop);
  EXPECT_NEAR(inner(t, t), loop, 1e-12 * loop);
}

TEST(Elementwise, AddSubScale) {
  const Tensor a({2}, {1, 2});
  const Tensor b({2}, {3, 5});
  EXPECT_EQ(add(a, b), Tensor({2}, {4, 7}));
  EXPECT_EQ(sub(b, a), Tensor({2}, {2, 3}));
  EXPECT_EQ(scale(a, -2), Tensor({2}, {-2, -4}));
  EXPECT_EQ(hadamard(a, b), Tensor({2}, {3, 10}));
  EXPECT_THROW(add(a, Tensor::zeros({3})), ShapeError);
}

TEST(TensorType, Invariants) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  EXPECT_THROW(Tensor::zeros({2, 0}), ShapeError);
  EXPECT_THROW(Tensor(Shape{}), ShapeError);
  EXPECT_THROW(Tensor::zeros({2, 3}).reshaped({4}), ShapeError);
  Tensor t = iota({2, 3});
  EXPECT_EQ(t(1, 2), 6.0);
  EXPECT_EQ(t.reshaped({3, 2})(2, 1), 6.0);
}

}  // namespace
}  // namespace tea
