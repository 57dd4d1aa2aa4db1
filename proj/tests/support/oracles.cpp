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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tea::oracle {

std::vector<std::size_t> unravel(std::size_t flat, const Shape& shape) {
  std::vector<std::size_t> idx(shape.size());
  for (std::size_t m = shape.size(); m-- > 0;) {
    idx[m] = flat % shape[m];
    flat /= shape[m];
  }
  return idx;
}

Matrix unfold(const Tensor& t, std::size_t mode) {
  const Shape& s = t.shape();
  std::size_t cols = 1;
  for (std::size_t m = 0; m < s.size(); ++m) {
    if (m != mode) cols *= s[m];
  }
  Matrix out(s[mode], cols);
  for (std::size_t f = 0; f < t.size(); ++f) {
    const auto idx = unravel(f, s);
    std::size_t col = 0;
    std::size_t stride = 1;
    for (std::size_t m = 0; m < s.size(); ++m) {
      if (m == mode) continue;
      col += idx[m] * stride;
      stride *= s[m];
    }
    out(idx[mode], col) = t[f];
  }
  return out;
}

Tensor mode_product(const Tensor& t, const Matrix& u, std::size_t mode) {
  Shape os = t.shape();
  os[mode] = u.rows();
  Tensor out(os);
  for (std::size_t f = 0; f < out.size(); ++f) {
    auto idx = unravel(f, os);
    const std::size_t r = idx[mode];
    double acc = 0.0;
    for (std::size_t k = 0; k < t.dim(mode); ++k) {
      idx[mode] = k;
      acc += u(r, k) * t.at(idx);
    }
    out[f] = acc;
  }
  return out;
}

Tensor contract(const Tensor& x, const Tensor& w, std::size_t k) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  Shape lead(xs.begin(), xs.end() - static_cast<std::ptrdiff_t>(k));
  Shape mid(xs.end() - static_cast<std::ptrdiff_t>(k), xs.end());
  Shape tail(ws.begin() + static_cast<std::ptrdiff_t>(k), ws.end());
  Shape os = lead;
  os.insert(os.end(), tail.begin(), tail.end());
  if (os.empty()) os.push_back(1);
  Tensor out(os);
  const std::size_t nl = shape_size(lead), nm = shape_size(mid), nt = shape_size(tail);
  for (std::size_t a = 0; a < nl; ++a) {
    for (std::size_t c = 0; c < nt; ++c) {
      double acc = 0.0;
      for (std::size_t b = 0; b < nm; ++b) acc += x[a * nm + b] * w[b * nt + c];
      out[a * nt + c] = acc;
    }
  }
  return out;
}

std::vector<double> jacobi_eigenvalues(Matrix a, double tol, int max_sweeps) {
  const std::size_t n = a.rows();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        total += a(i, j) * a(i, j);
        if (i != j) off += a(i, j) * a(i, j);
      }
    }
    if (off <= tol * tol * std::max(total, 1e-300)) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

std::vector<double> mode_singular_values(const Tensor& t, std::size_t mode) {
  const Matrix u = oracle::unfold(t, mode);
  Matrix g(u.rows(), u.rows());
  for (std::size_t i = 0; i < u.rows(); ++i) {
    for (std::size_t j = 0; j < u.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < u.cols(); ++c) acc += u(i, c) * u(j, c);
      g(i, j) = acc;
    }
  }
  auto ev = jacobi_eigenvalues(g);
  for (double& v : ev) v = std::sqrt(std::max(v, 0.0));
  return ev;
}

Tensor sha(const Tensor& x, const attention::HeadParams& h, const attention::Activation& act,
           const attention::AttentionMask* mask, bool scale) {
  const std::size_t L = x.dim(0), A = x.dim(1), B = x.dim(2), D = h.w_q.dim(2);
  auto project = [&](const Tensor& w) {
    std::vector<double> out(L * D, 0.0);
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t d = 0; d < D; ++d)
        for (std::size_t i = 0; i < A; ++i)
          for (std::size_t j = 0; j < B; ++j) out[l * D + d] += x(l, i, j) * w(i, j, d);
    return out;
  };
  const auto q = project(h.w_q);
  const auto k = project(h.w_k);
  const auto v = project(h.w_v);
  const double factor = scale ? 1.0 / std::sqrt(static_cast<double>(D)) : 1.0;
  Tensor out({L, A, B});
  for (std::size_t l = 0; l < L; ++l) {
    std::vector<double> s(L);
    double top = -1e300;
    for (std::size_t m = 0; m < L; ++m) {
      double acc = 0.0;
      for (std::size_t d = 0; d < D; ++d) acc += q[l * D + d] * k[m * D + d];
      s[m] = (mask && !mask->allowed(l, m)) ? -1e30 : acc * factor;
      top = std::max(top, s[m]);
    }
    double z = 0.0;
    for (std::size_t m = 0; m < L; ++m) {
      s[m] = std::exp(s[m] - top);
      z += s[m];
    }
    std::vector<double> mixed(D, 0.0);
    for (std::size_t d = 0; d < D; ++d) {
      for (std::size_t m = 0; m < L; ++m) mixed[d] += s[m] / z * v[m * D + d];
      mixed[d] = act.apply(mixed[d]);
    }
    for (std::size_t i = 0; i < A; ++i) {
      for (std::size_t j = 0; j < B; ++j) {
        double acc = 0.0;
        for (std::size_t d = 0; d < D; ++d) acc += mixed[d] * h.w_o(d, i, j);
        out(l, i, j) = acc;
      }
    }
  }
  return out;
}

double mse(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double mae(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

Tensor numeric_gradient(const std::function<double(const Tensor&)>& f, const Tensor& at,
                        double step) {
  Tensor g = Tensor::zeros_like(at);
  Tensor x = at;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double up = f(x);
    const double hi = x[i];
    x[i] = orig - step;
    const double down = f(x);
    const double lo = x[i];
    x[i] = orig;
    g[i] = (up - down) / (hi - lo);
  }
  return g;
}

double max_rel_error(const Tensor& a, const Tensor& b, double floor) {
  if (a.shape() != b.shape()) throw std::invalid_argument("max_rel_error: shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / d);
  }
  return worst;
}

attention::HeadParams random_head(std::size_t a, std::size_t b, std::size_t d,
                                  std::mt19937_64& rng, double scale) {
  attention::HeadParams h;
  h.w_q = random_uniform({a, b, d}, rng, -scale, scale);
  h.w_k = random_uniform({a, b, d}, rng, -scale, scale);
  h.w_v = random_uniform({a, b, d}, rng, -scale, scale);
  h.w_o = random_uniform({d, a, b}, rng, -scale, scale);
  return h;
}

}  // namespace tea::oracle
