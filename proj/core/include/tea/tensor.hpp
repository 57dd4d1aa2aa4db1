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
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace tea {

using Shape = std::vector<std::size_t>;

/// Dense order-M array of doubles, row-major with the last index fastest.
///
/// Modes are 0-based throughout the API: the mathematical mode k (1-based,
/// as in `X ×_k U`) is passed as `k - 1`.
class Tensor {
 public:
  /// A 1-element tensor holding 0.
  Tensor();
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), 1.0); }
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_, 0.0); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t order() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t mode) const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t flat) noexcept { return data_[flat]; }
  double operator[](std::size_t flat) const noexcept { return data_[flat]; }

  template <typename... Idx>
  double& operator()(Idx... idx) {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <typename... Idx>
  double operator()(Idx... idx) const {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  double& at(std::span<const std::size_t> index);
  double at(std::span<const std::size_t> index) const;

  /// Row-major flat offset of a multi-index. Bounds are checked.
  std::size_t offset(std::span<const std::size_t> index) const;
  std::size_t offset(std::initializer_list<std::size_t> index) const {
    return offset(std::span<const std::size_t>(index.begin(), index.size()));
  }

  /// Same data viewed under a new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s);

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Row-major matrix. Loading matrices, unfoldings and attention score
/// matrices all use this type; `as_tensor` views it as an order-2 Tensor.
class Matrix {
 public:
  Matrix() : Matrix(1, 1) {}
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_tensor(const Tensor& t);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) noexcept {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * cols_ + c];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t r) noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  Tensor as_tensor() const { return Tensor({rows_, cols_}, data_); }
  Matrix transposed() const;

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Matrix products. `matmul_tn` is aᵀ·b and `matmul_nt` is a·bᵀ.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// Mode-`mode` unfolding, shape D_mode × ∏_{m≠mode} D_m.
///
/// Column ordering follows Kolda & Bader: element (i_0, …, i_{M-1}) lands in
/// row i_mode and column j = Σ_{k≠mode} i_k·J_k with
/// J_k = ∏_{m<k, m≠mode} D_m, i.e. the earliest remaining mode varies fastest.
/// Throws InvalidMode when mode ≥ order.
Matrix unfold(const Tensor& t, std::size_t mode);

/// Inverse of `unfold`. Throws ShapeError when `m` does not match `shape`.
Tensor fold(const Matrix& m, std::size_t mode, const Shape& shape);

/// t ×_mode u: replaces extent D_mode with u.rows(). Requires
/// u.cols() == D_mode.
Tensor mode_n_product(const Tensor& t, const Matrix& u, std::size_t mode);

/// t ×_mode uᵀ without materialising the transpose.
Tensor mode_n_product_transposed(const Tensor& t, const Matrix& u,
                                 std::size_t mode);

/// Contracts the trailing `k` modes of `x` with the leading `k` modes of `w`.
Tensor contract(const Tensor& x, const Tensor& w, std::size_t k);

/// out[l, a] = Σ_{i,j} x[l, i, j]·w[i, j, a] for an order-3 x and order-3 w.
Matrix contract_feature_modes(const Tensor& x, const Tensor& w);

/// result[i_1..i_M] = ∏_m v_m[i_m]. Throws InvalidArgument on an empty list
/// or an empty vector.
Tensor outer_product(std::span<const std::vector<double>> vectors);

double inner(const Tensor& a, const Tensor& b);
double frobenius_norm(const Tensor& t);
double frobenius_norm(const Matrix& m);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& t, double s);
Tensor hadamard(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);
bool all_finite(std::span<const double> values);

Tensor random_normal(Shape shape, std::mt19937_64& rng, double stddev = 1.0);
Tensor random_uniform(Shape shape, std::mt19937_64& rng, double lo, double hi);

}  // namespace tea
