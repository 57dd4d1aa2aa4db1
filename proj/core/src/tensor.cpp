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

#include "tea/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "tea/errors.hpp"

namespace tea {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap view(const Matrix& m) { return ConstMap(m.data().data(), m.rows(), m.cols()); }

void check_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor order must be at least 1");
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor extents must be positive, got " + shape_string(shape));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

// Product of extents before and after `mode`.
std::pair<std::size_t, std::size_t> split_around(const Shape& shape, std::size_t mode) {
  std::size_t pre = 1, post = 1;
  for (std::size_t m = 0; m < mode; ++m) pre *= shape[m];
  for (std::size_t m = mode + 1; m < shape.size(); ++m) post *= shape[m];
  return {pre, post};
}

// Column stride of each mode in the Kolda-Bader unfolding; 0 for `mode` itself.
std::vector<std::size_t> unfold_strides(const Shape& shape, std::size_t mode) {
  std::vector<std::size_t> j(shape.size(), 0);
  std::size_t acc = 1;
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (k == mode) continue;
    j[k] = acc;
    acc *= shape[k];
  }
  return j;
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ')';
  return os.str();
}

// Tensor ---------------------------------------------------------------------

Tensor::Tensor() : shape_{1}, data_(1, 0.0) {}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != shape_size(shape_)) {
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_string(shape_));
  }
}

std::size_t Tensor::dim(std::size_t mode) const {
  if (mode >= shape_.size()) {
    throw InvalidMode("mode " + std::to_string(mode) + " out of range for order " +
                      std::to_string(shape_.size()));
  }
  return shape_[mode];
}

std::size_t Tensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw ShapeError("index arity " + std::to_string(index.size()) + " for order " +
                     std::to_string(shape_.size()));
  }
  std::size_t off = 0;
  for (std::size_t m = 0; m < shape_.size(); ++m) {
    if (index[m] >= shape_[m]) throw ShapeError("index out of range in mode " + std::to_string(m));
    off = off * shape_[m] + index[m];
  }
  return off;
}

double& Tensor::at(std::span<const std::size_t> index) { return data_[offset(index)]; }
double Tensor::at(std::span<const std::size_t> index) const { return data_[offset(index)]; }

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

Tensor& Tensor::operator+=(const Tensor& other) {
  require_same_shape(*this, other, "add");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  require_same_shape(*this, other, "sub");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

// Matrix ---------------------------------------------------------------------

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (rows == 0 || cols == 0) throw ShapeError("matrix extents must be positive");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) throw ShapeError("matrix extents must be positive");
  if (data_.size() != rows * cols) throw ShapeError("matrix data length mismatch");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_tensor(const Tensor& t) {
  if (t.order() != 2) throw ShapeError("matrix requires an order-2 tensor, got " + shape_string(t.shape()));
  return Matrix(t.dim(0), t.dim(1), t.values());
}

Matrix Matrix::transposed() const {
  Matrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  MutMap(out.data().data(), out.rows(), out.cols()).noalias() = view(a) * view(b);
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn: row counts differ");
  Matrix out(a.cols(), b.cols());
  MutMap(out.data().data(), out.rows(), out.cols()).noalias() = view(a).transpose() * view(b);
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: column counts differ");
  Matrix out(a.rows(), b.rows());
  MutMap(out.data().data(), out.rows(), out.cols()).noalias() = view(a) * view(b).transpose();
  return out;
}

// Multilinear primitives -----------------------------------------------------

Matrix unfold(const Tensor& t, std::size_t mode) {
  const auto& shape = t.shape();
  if (mode >= shape.size()) {
    throw InvalidMode("unfold: mode " + std::to_string(mode) + " out of range for order " +
                      std::to_string(shape.size()));
  }
  const std::size_t rows = shape[mode];
  const std::size_t cols = t.size() / rows;
  const auto j = unfold_strides(shape, mode);
  Matrix out(rows, cols);
  std::vector<std::size_t> idx(shape.size(), 0);
  std::size_t col = 0;
  for (std::size_t flat = 0; flat < t.size(); ++flat) {
    out(idx[mode], col) = t[flat];
    // Advance the row-major multi-index and the matching column offset.
    for (std::size_t m = shape.size(); m-- > 0;) {
      if (++idx[m] < shape[m]) {
        col += j[m];
        break;
      }
      col -= j[m] * (shape[m] - 1);
      idx[m] = 0;
    }
  }
  return out;
}

Tensor fold(const Matrix& m, std::size_t mode, const Shape& shape) {
  if (mode >= shape.size()) throw InvalidMode("fold: mode out of range");
  check_shape(shape);
  if (m.rows() != shape[mode] || m.rows() * m.cols() != shape_size(shape)) {
    throw ShapeError("fold: matrix " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                     " does not match shape " + shape_string(shape) + " in mode " +
                     std::to_string(mode));
  }
  const auto j = unfold_strides(shape, mode);
  Tensor out(shape);
  std::vector<std::size_t> idx(shape.size(), 0);
  std::size_t col = 0;
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out[flat] = m(idx[mode], col);
    for (std::size_t k = shape.size(); k-- > 0;) {
      if (++idx[k] < shape[k]) {
        col += j[k];
        break;
      }
      col -= j[k] * (shape[k] - 1);
      idx[k] = 0;
    }
  }
  return out;
}

Tensor mode_n_product(const Tensor& t, const Matrix& u, std::size_t mode) {
  const std::size_t n = t.dim(mode);
  if (u.cols() != n) {
    throw ShapeError("mode_n_product: matrix has " + std::to_string(u.cols()) +
                     " columns, mode " + std::to_string(mode) + " has extent " + std::to_string(n));
  }
  auto [pre, post] = split_around(t.shape(), mode);
  Shape out_shape = t.shape();
  out_shape[mode] = u.rows();
  Tensor out(out_shape);
  const ConstMap um = view(u);
  for (std::size_t a = 0; a < pre; ++a) {
    ConstMap slice(t.data().data() + a * n * post, n, post);
    MutMap dst(out.data().data() + a * u.rows() * post, u.rows(), post);
    dst.noalias() = um * slice;
  }
  return out;
}

Tensor mode_n_product_transposed(const Tensor& t, const Matrix& u, std::size_t mode) {
  const std::size_t n = t.dim(mode);
  if (u.rows() != n) {
    throw ShapeError("mode_n_product_transposed: matrix has " + std::to_string(u.rows()) +
                     " rows, mode extent is " + std::to_string(n));
  }
  auto [pre, post] = split_around(t.shape(), mode);
  Shape out_shape = t.shape();
  out_shape[mode] = u.cols();
  Tensor out(out_shape);
  const ConstMap um = view(u);
  for (std::size_t a = 0; a < pre; ++a) {
    ConstMap slice(t.data().data() + a * n * post, n, post);
    MutMap dst(out.data().data() + a * u.cols() * post, u.cols(), post);
    dst.noalias() = um.transpose() * slice;
  }
  return out;
}

Tensor contract(const Tensor& x, const Tensor& w, std::size_t k) {
  if (k == 0 || k > x.order() || k > w.order()) {
    throw ShapeError("contract: cannot contract " + std::to_string(k) + " modes");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (x.dim(x.order() - k + i) != w.dim(i)) {
      throw ShapeError("contract: trailing modes of " + shape_string(x.shape()) +
                       " do not match leading modes of " + shape_string(w.shape()));
    }
  }
  Shape out_shape(x.shape().begin(), x.shape().end() - static_cast<std::ptrdiff_t>(k));
  out_shape.insert(out_shape.end(), w.shape().begin() + static_cast<std::ptrdiff_t>(k),
                   w.shape().end());
  if (out_shape.empty()) out_shape.push_back(1);
  std::size_t inner_size = 1;
  for (std::size_t i = 0; i < k; ++i) inner_size *= w.dim(i);
  const std::size_t rows = x.size() / inner_size;
  const std::size_t cols = w.size() / inner_size;
  Tensor out(out_shape);
  MutMap(out.data().data(), rows, cols).noalias() =
      ConstMap(x.data().data(), rows, inner_size) * ConstMap(w.data().data(), inner_size, cols);
  return out;
}

Matrix contract_feature_modes(const Tensor& x, const Tensor& w) {
  if (x.order() != 3 || w.order() != 3) {
    throw ShapeError("contract_feature_modes expects order-3 operands, got " +
                     shape_string(x.shape()) + " and " + shape_string(w.shape()));
  }
  Tensor out = contract(x, w, 2);
  return Matrix(x.dim(0), w.dim(2), out.values());
}

Tensor outer_product(std::span<const std::vector<double>> vectors) {
  if (vectors.empty()) throw InvalidArgument("outer_product: empty vector list");
  Shape shape;
  for (const auto& v : vectors) {
    if (v.empty()) throw InvalidArgument("outer_product: empty factor vector");
    shape.push_back(v.size());
  }
  Tensor out(shape, 1.0);
  std::size_t inner_stride = out.size();
  for (std::size_t m = 0; m < vectors.size(); ++m) {
    inner_stride /= shape[m];
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
      out[flat] *= vectors[m][(flat / inner_stride) % shape[m]];
    }
  }
  return out;
}

double inner(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "inner");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double frobenius_norm(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return std::sqrt(s);
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  out += b;
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  out -= b;
  return out;
}

Tensor scale(const Tensor& t, double s) {
  Tensor out = t;
  out *= s;
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

Tensor random_normal(Shape shape, std::mt19937_64& rng, double stddev) {
  Tensor out(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : out.data()) v = dist(rng);
  return out;
}

Tensor random_uniform(Shape shape, std::mt19937_64& rng, double lo, double hi) {
  Tensor out(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : out.data()) v = dist(rng);
  return out;
}

}  // namespace tea
