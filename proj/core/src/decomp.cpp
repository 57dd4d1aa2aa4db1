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

#include "tea/decomp.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "tea/errors.hpp"

namespace tea::decomp {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;

constexpr std::size_t kGramLimit = 64;

Matrix to_matrix(const RowMat& m) {
  Matrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  Eigen::Map<RowMat>(out.data().data(), m.rows(), m.cols()) = m;
  return out;
}

// Flips column c of `u` (and of `v`, when given) so that its largest-magnitude
// entry is positive.
void fix_signs(RowMat& u, RowMat* v) {
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    Eigen::Index arg = 0;
    u.col(c).cwiseAbs().maxCoeff(&arg);
    if (u(arg, c) < 0.0) {
      u.col(c) *= -1.0;
      if (v) v->col(c) *= -1.0;
    }
  }
}

Matrix leading_columns(const Matrix& m, std::size_t k) {
  Matrix out(m.rows(), k);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < k; ++c) out(r, c) = m(r, c);
  return out;
}

void check_ranks(const Tensor& t, const Ranks& ranks) {
  if (ranks.size() != t.order()) {
    throw InvalidRank("expected " + std::to_string(t.order()) + " ranks, got " +
                      std::to_string(ranks.size()));
  }
  for (std::size_t m = 0; m < ranks.size(); ++m) {
    if (ranks[m] < 1 || ranks[m] > t.dim(m)) {
      throw InvalidRank("rank " + std::to_string(ranks[m]) + " for mode " + std::to_string(m) +
                        " must lie in [1, " + std::to_string(t.dim(m)) + "]");
    }
  }
}

double fit_of(double residual, double norm) { return norm > 0.0 ? 1.0 - residual / norm : 1.0; }

// Matricised tensor times Khatri-Rao product, computed element-wise:
// out[i_n, r] = Σ t[i] ∏_{m≠n} U_m[i_m, r].
Matrix mttkrp(const Tensor& t, const std::vector<Matrix>& loadings, std::size_t mode,
              std::size_t rank) {
  const auto& shape = t.shape();
  Matrix out(shape[mode], rank);
  std::vector<std::size_t> idx(shape.size(), 0);
  std::vector<double> prod(rank);
  for (std::size_t flat = 0; flat < t.size(); ++flat) {
    const double v = t[flat];
    if (v != 0.0) {
      std::fill(prod.begin(), prod.end(), v);
      for (std::size_t m = 0; m < shape.size(); ++m) {
        if (m == mode) continue;
        auto row = loadings[m].row(idx[m]);
        for (std::size_t r = 0; r < rank; ++r) prod[r] *= row[r];
      }
      auto dst = out.row(idx[mode]);
      for (std::size_t r = 0; r < rank; ++r) dst[r] += prod[r];
    }
    for (std::size_t m = shape.size(); m-- > 0;) {
      if (++idx[m] < shape[m]) break;
      idx[m] = 0;
    }
  }
  return out;
}

}  // namespace

Ranks TtFactors::ranks() const {
  Ranks r;
  for (std::size_t k = 0; k + 1 < cores.size(); ++k) r.push_back(cores[k].dim(2));
  return r;
}

Shape TtFactors::shape() const {
  Shape s;
  for (const auto& c : cores) s.push_back(c.dim(1));
  return s;
}

LeftSvd left_singular_vectors(const Matrix& a) {
  const ConstMap am(a.data().data(), a.rows(), a.cols());
  RowMat u;
  Eigen::VectorXd sv;
  if (a.rows() <= kGramLimit) {
    const RowMat gram = am * am.transpose();
    Eigen::SelfAdjointEigenSolver<RowMat> eig(gram);
    if (eig.info() != Eigen::Success) throw DecompositionError("eigensolver failed on Gram matrix");
    // Ascending eigenvalues; reverse into descending order.
    const Eigen::Index n = gram.rows();
    u.resize(n, n);
    sv.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      u.col(i) = eig.eigenvectors().col(n - 1 - i);
      sv(i) = std::sqrt(std::max(0.0, eig.eigenvalues()(n - 1 - i)));
    }
  } else {
    const unsigned flags =
        a.rows() > a.cols() ? Eigen::ComputeFullU : Eigen::ComputeThinU;
    Eigen::BDCSVD<RowMat> svd(am, flags);
    u = svd.matrixU();
    sv = Eigen::VectorXd::Zero(u.cols());
    sv.head(svd.singularValues().size()) = svd.singularValues();
  }
  fix_signs(u, nullptr);
  LeftSvd out{to_matrix(u), {}};
  out.singular_values.assign(sv.data(), sv.data() + sv.size());
  return out;
}

Tensor tucker_project(const Tensor& t, const std::vector<Matrix>& loadings) {
  if (loadings.size() != t.order()) throw ShapeError("tucker_project: one loading per mode required");
  Tensor out = t;
  for (std::size_t m = 0; m < loadings.size(); ++m) {
    out = mode_n_product_transposed(out, loadings[m], m);
  }
  return out;
}

Tensor tucker_expand(const Tensor& core, const std::vector<Matrix>& loadings) {
  if (loadings.size() != core.order()) throw ShapeError("tucker_expand: one loading per mode required");
  Tensor out = core;
  for (std::size_t m = 0; m < loadings.size(); ++m) {
    out = mode_n_product(out, loadings[m], m);
  }
  return out;
}

TuckerFactors hosvd(const Tensor& t, const Ranks& ranks) {
  check_ranks(t, ranks);
  std::vector<Matrix> loadings;
  loadings.reserve(t.order());
  for (std::size_t m = 0; m < t.order(); ++m) {
    loadings.push_back(leading_columns(left_singular_vectors(unfold(t, m)).vectors, ranks[m]));
  }
  Tensor core = tucker_project(t, loadings);
  return {std::move(core), std::move(loadings)};
}

TuckerFactors hooi(const Tensor& t, const Ranks& ranks, const HooiOptions& opts,
                   FitTrace* trace) {
  if (opts.max_iter < 1) throw InvalidArgument("hooi: max_iter must be at least 1");
  if (!(opts.tol > 0.0)) throw InvalidArgument("hooi: tol must be positive");
  TuckerFactors f = hosvd(t, ranks);
  const double norm = frobenius_norm(t);
  double prev_fit = fit_of(frobenius_norm(sub(t, tucker_reconstruct(f))), norm);
  FitTrace local;
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    for (std::size_t n = 0; n < t.order(); ++n) {
      Tensor y = t;
      for (std::size_t m = 0; m < t.order(); ++m) {
        if (m != n) y = mode_n_product_transposed(y, f.loadings[m], m);
      }
      f.loadings[n] = leading_columns(left_singular_vectors(unfold(y, n)).vectors, ranks[n]);
    }
    f.core = tucker_project(t, f.loadings);
    const double residual = frobenius_norm(sub(t, tucker_reconstruct(f)));
    const double fit = fit_of(residual, norm);
    local.residual.push_back(residual);
    local.fit.push_back(fit);
    local.iterations = it + 1;
    if (std::abs(fit - prev_fit) < opts.tol) {
      local.converged = true;
      break;
    }
    prev_fit = fit;
  }
  if (trace) *trace = std::move(local);
  return f;
}

Tensor tucker_reconstruct(const TuckerFactors& f) {
  if (f.loadings.size() != f.core.order()) {
    throw ShapeError("tucker_reconstruct: " + std::to_string(f.loadings.size()) +
                     " loadings for an order-" + std::to_string(f.core.order()) + " core");
  }
  for (std::size_t m = 0; m < f.loadings.size(); ++m) {
    if (f.loadings[m].cols() != f.core.dim(m)) {
      throw ShapeError("tucker_reconstruct: loading " + std::to_string(m) +
                       " does not match core extent");
    }
  }
  return tucker_expand(f.core, f.loadings);
}

CpFactors cp_als(const Tensor& t, std::size_t rank, const CpOptions& opts, FitTrace* trace) {
  if (rank < 1) throw InvalidRank("cp_als: rank must be at least 1");
  if (opts.max_iter < 1) throw InvalidArgument("cp_als: max_iter must be at least 1");
  if (!(opts.tol > 0.0)) throw InvalidArgument("cp_als: tol must be positive");
  const std::size_t order = t.order();
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  CpFactors f;
  f.weights.assign(rank, 1.0);
  for (std::size_t m = 0; m < order; ++m) {
    Matrix u(t.dim(m), rank);
    for (auto& v : u.data()) v = normal(rng);
    for (std::size_t r = 0; r < rank; ++r) {
      double s = 0.0;
      for (std::size_t i = 0; i < u.rows(); ++i) s += u(i, r) * u(i, r);
      s = std::sqrt(s);
      for (std::size_t i = 0; i < u.rows(); ++i) u(i, r) /= s;
    }
    f.loadings.push_back(std::move(u));
  }

  const double norm = frobenius_norm(t);
  double prev_fit = std::numeric_limits<double>::quiet_NaN();
  FitTrace local;
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    for (std::size_t n = 0; n < order; ++n) {
      RowMat gram = RowMat::Ones(rank, rank);
      for (std::size_t m = 0; m < order; ++m) {
        if (m == n) continue;
        const ConstMap um(f.loadings[m].data().data(), f.loadings[m].rows(), rank);
        gram = gram.cwiseProduct(um.transpose() * um);
      }
      if (opts.ridge > 0.0) gram.diagonal().array() += opts.ridge;
      const Matrix rhs = mttkrp(t, f.loadings, n, rank);
      const ConstMap rm(rhs.data().data(), rhs.rows(), rank);
      // Minimum-norm solve, so collinear loadings stay finite.
      const RowMat solved =
          Eigen::MatrixXd(gram).completeOrthogonalDecomposition().solve(Eigen::MatrixXd(rm.transpose())).transpose();
      Matrix u = to_matrix(solved);
      for (std::size_t r = 0; r < rank; ++r) {
        double s = 0.0;
        for (std::size_t i = 0; i < u.rows(); ++i) s += u(i, r) * u(i, r);
        s = std::sqrt(s);
        if (s > 0.0 && std::isfinite(s)) {
          for (std::size_t i = 0; i < u.rows(); ++i) u(i, r) /= s;
          f.weights[r] = s;
        } else {
          for (std::size_t i = 0; i < u.rows(); ++i) u(i, r) = i == 0 ? 1.0 : 0.0;
          f.weights[r] = 0.0;
        }
      }
      f.loadings[n] = std::move(u);
    }
    const double residual = frobenius_norm(sub(t, cp_reconstruct(f)));
    const double fit = fit_of(residual, norm);
    local.residual.push_back(residual);
    local.fit.push_back(fit);
    local.iterations = it + 1;
    if (std::abs(fit - prev_fit) < opts.tol) {
      local.converged = true;
      break;
    }
    prev_fit = fit;
  }
  if (trace) *trace = std::move(local);
  return f;
}

Tensor cp_reconstruct(const CpFactors& f) {
  if (f.loadings.empty()) throw ShapeError("cp_reconstruct: no loadings");
  Shape shape;
  for (const auto& u : f.loadings) {
    if (u.cols() != f.rank()) throw ShapeError("cp_reconstruct: loading rank mismatch");
    shape.push_back(u.rows());
  }
  Tensor out(shape);
  std::vector<std::size_t> idx(shape.size(), 0);
  std::vector<double> prod(f.rank());
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    prod = f.weights;
    for (std::size_t m = 0; m < shape.size(); ++m) {
      auto row = f.loadings[m].row(idx[m]);
      for (std::size_t r = 0; r < prod.size(); ++r) prod[r] *= row[r];
    }
    double s = 0.0;
    for (double p : prod) s += p;
    out[flat] = s;
    for (std::size_t m = shape.size(); m-- > 0;) {
      if (++idx[m] < shape[m]) break;
      idx[m] = 0;
    }
  }
  return out;
}

TuckerFactors cp_to_tucker(const CpFactors& f) {
  const std::size_t order = f.loadings.size();
  Tensor core(Shape(order, f.rank()));
  std::vector<std::size_t> diag(order);
  for (std::size_t r = 0; r < f.rank(); ++r) {
    std::fill(diag.begin(), diag.end(), r);
    core.at(diag) = f.weights[r];
  }
  return {std::move(core), f.loadings};
}

TtFactors tt_svd(const Tensor& t, const TtOptions& opts) {
  const std::size_t order = t.order();
  if (!opts.eps && opts.max_ranks.empty()) {
    throw InvalidArgument("tt_svd: either eps or max_ranks is required");
  }
  if (opts.eps && !(*opts.eps > 0.0)) throw InvalidArgument("tt_svd: eps must be positive");
  if (!opts.max_ranks.empty()) {
    if (opts.max_ranks.size() != order - 1) {
      throw InvalidRank("tt_svd: expected " + std::to_string(order - 1) + " bond ranks, got " +
                        std::to_string(opts.max_ranks.size()));
    }
    for (auto r : opts.max_ranks) {
      if (r < 1) throw InvalidRank("tt_svd: bond ranks must be at least 1");
    }
  }
  const double delta =
      opts.eps && order > 1 ? *opts.eps / std::sqrt(double(order - 1)) * frobenius_norm(t) : 0.0;

  TtFactors f;
  RowMat c = ConstMap(t.data().data(), t.dim(0), t.size() / t.dim(0));
  std::size_t prev_rank = 1;
  for (std::size_t k = 0; k + 1 < order; ++k) {
    Eigen::BDCSVD<RowMat> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
    RowMat u = svd.matrixU();
    RowMat v = svd.matrixV();
    const Eigen::VectorXd& s = svd.singularValues();
    fix_signs(u, &v);

    // Smallest rank whose discarded tail stays within delta.
    std::size_t r = static_cast<std::size_t>(s.size());
    if (opts.eps) {
      double tail = 0.0;
      while (r > 1) {
        const double next = tail + s(static_cast<Eigen::Index>(r - 1)) * s(static_cast<Eigen::Index>(r - 1));
        if (std::sqrt(next) > delta) break;
        tail = next;
        --r;
      }
    }
    if (!opts.max_ranks.empty()) r = std::min(r, opts.max_ranks[k]);
    r = std::max<std::size_t>(r, 1);

    const auto ri = static_cast<Eigen::Index>(r);
    RowMat core_k = u.leftCols(ri);
    f.cores.emplace_back(Shape{prev_rank, t.dim(k), r},
                         std::vector<double>(core_k.data(), core_k.data() + core_k.size()));
    RowMat rest = s.head(ri).asDiagonal() * v.leftCols(ri).transpose();
    const std::size_t next_dim = t.dim(k + 1);
    const auto rows = static_cast<Eigen::Index>(r * next_dim);
    c = Eigen::Map<RowMat>(rest.data(), rows, rest.size() / rows);
    prev_rank = r;
  }
  f.cores.emplace_back(Shape{prev_rank, t.dim(order - 1), 1},
                       std::vector<double>(c.data(), c.data() + c.size()));
  f.terminal = Tensor::ones({1, 1, 1});
  return f;
}

double tt_element(const TtFactors& f, std::span<const std::size_t> index) {
  if (index.size() != f.cores.size()) throw ShapeError("tt_element: index arity mismatch");
  std::vector<double> vec{1.0};
  for (std::size_t k = 0; k < f.cores.size(); ++k) {
    const Tensor& core = f.cores[k];
    const std::size_t rin = core.dim(0), d = core.dim(1), rout = core.dim(2);
    if (vec.size() != rin) throw ShapeError("tt_element: bond rank mismatch at core " + std::to_string(k));
    if (index[k] >= d) throw ShapeError("tt_element: index out of range");
    std::vector<double> next(rout, 0.0);
    for (std::size_t a = 0; a < rin; ++a) {
      const double* row = core.data().data() + (a * d + index[k]) * rout;
      for (std::size_t b = 0; b < rout; ++b) next[b] += vec[a] * row[b];
    }
    vec = std::move(next);
  }
  if (vec.size() != f.terminal.dim(0)) throw ShapeError("tt_element: terminal rank mismatch");
  double s = 0.0;
  for (std::size_t a = 0; a < vec.size(); ++a) s += vec[a] * f.terminal[a];
  return s;
}

Tensor tt_reconstruct(const TtFactors& f) {
  if (f.cores.empty()) throw ShapeError("tt_reconstruct: no cores");
  RowMat acc = RowMat::Ones(1, 1);
  for (std::size_t k = 0; k < f.cores.size(); ++k) {
    const Tensor& core = f.cores[k];
    if (static_cast<std::size_t>(acc.cols()) != core.dim(0)) {
      throw ShapeError("tt_reconstruct: bond rank mismatch at core " + std::to_string(k));
    }
    const ConstMap cm(core.data().data(), core.dim(0), core.dim(1) * core.dim(2));
    RowMat prod = acc * cm;
    acc = Eigen::Map<RowMat>(prod.data(), acc.rows() * static_cast<Eigen::Index>(core.dim(1)),
                             static_cast<Eigen::Index>(core.dim(2)));
  }
  if (static_cast<std::size_t>(acc.cols()) != f.terminal.dim(0)) {
    throw ShapeError("tt_reconstruct: terminal rank mismatch");
  }
  const Eigen::Map<const Eigen::VectorXd> term(f.terminal.data().data(), acc.cols());
  Eigen::VectorXd flat = acc * term;
  return Tensor(f.shape(), std::vector<double>(flat.data(), flat.data() + flat.size()));
}

double relative_error(const Tensor& original, const Tensor& approx) {
  const double diff = frobenius_norm(sub(original, approx));
  const double norm = frobenius_norm(original);
  return norm > 0.0 ? diff / norm : diff;
}

std::size_t stored_size(const TuckerFactors& f) {
  std::size_t n = f.core.size();
  for (const auto& u : f.loadings) n += u.size();
  return n;
}

std::size_t stored_size(const CpFactors& f) {
  std::size_t n = f.weights.size();
  for (const auto& u : f.loadings) n += u.size();
  return n;
}

std::size_t stored_size(const TtFactors& f) {
  std::size_t n = f.terminal.size();
  for (const auto& c : f.cores) n += c.size();
  return n;
}

}  // namespace tea::decomp
