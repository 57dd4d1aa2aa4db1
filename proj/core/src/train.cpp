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

#include "tea/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "tea/autodiff.hpp"
#include "tea/errors.hpp"

namespace tea::train {
namespace {

void check_same_size(const Tensor& a, const Tensor& b, const char* what) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(what) + ": " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

std::vector<data::ForecastWindow> subsample(std::span<const data::ForecastWindow> windows,
                                            std::size_t cap) {
  if (cap == 0 || windows.size() <= cap) return {windows.begin(), windows.end()};
  std::vector<data::ForecastWindow> out;
  out.reserve(cap);
  // Evenly spaced, so the same windows are used on every epoch.
  for (std::size_t i = 0; i < cap; ++i) out.push_back(windows[i * windows.size() / cap]);
  return out;
}

}  // namespace

double mse(const Tensor& pred, const Tensor& target) {
  check_same_size(pred, target, "mse");
  if (pred.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

double mae(const Tensor& pred, const Tensor& target) {
  check_same_size(pred, target, "mae");
  if (pred.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

void sgd_step(model::ModelParams& params, const model::ModelParams& grads, double lr) {
  std::vector<const Tensor*> g;
  model::for_each_param(grads, [&g](const std::string&, const Tensor& t) { g.push_back(&t); });
  std::size_t k = 0;
  model::for_each_param(params, [&](const std::string&, Tensor& t) {
    const Tensor& gt = *g[k++];
    for (std::size_t i = 0; i < t.size(); ++i) t[i] -= lr * gt[i];
  });
}

Adam::Adam(AdamOptions opts) : opts_(opts) {}

void Adam::begin_step() { ++t_; }

void Adam::update(const std::string& name, Tensor& param, const Tensor& grad) {
  if (t_ == 0) begin_step();
  auto [mit, fresh_m] = m_.try_emplace(name, Tensor::zeros_like(param));
  auto [vit, fresh_v] = v_.try_emplace(name, Tensor::zeros_like(param));
  Tensor& m = mit->second;
  Tensor& v = vit->second;
  const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * grad[i];
    v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * grad[i] * grad[i];
    param[i] -= opts_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + opts_.eps);
  }
}

void Adam::step(model::ModelParams& params, const model::ModelParams& grads) {
  std::vector<const Tensor*> g;
  model::for_each_param(grads, [&g](const std::string&, const Tensor& t) { g.push_back(&t); });
  begin_step();
  std::size_t k = 0;
  model::for_each_param(params, [&](const std::string& name, Tensor& t) {
    update(name, t, *g[k++]);
  });
}

Metrics evaluate(const model::ModelParams& params, const model::ModelConfig& cfg,
                 std::span<const data::ForecastWindow> windows) {
  Metrics m;
  for (const auto& w : windows) {
    const Tensor pred = model::model_forward(w, params, cfg);
    m.mse += mse(pred, w.target);
    m.mae += mae(pred, w.target);
  }
  m.windows = windows.size();
  if (m.windows > 0) {
    m.mse /= static_cast<double>(m.windows);
    m.mae /= static_cast<double>(m.windows);
  }
  return m;
}

Tensor persistence_forecast(const data::ForecastWindow& w, std::size_t pred_len) {
  const std::size_t len = w.encoder_input.dim(0);
  const std::size_t features = w.encoder_input.size() / len;
  Tensor out({pred_len, features});
  for (std::size_t t = 0; t < pred_len; ++t)
    for (std::size_t d = 0; d < features; ++d) out(t, d) = w.encoder_input[(len - 1) * features + d];
  return out;
}

Metrics evaluate_persistence(std::span<const data::ForecastWindow> windows) {
  Metrics m;
  for (const auto& w : windows) {
    const Tensor pred = persistence_forecast(w, w.target.dim(0));
    m.mse += mse(pred, w.target);
    m.mae += mae(pred, w.target);
  }
  m.windows = windows.size();
  if (m.windows > 0) {
    m.mse /= static_cast<double>(m.windows);
    m.mae /= static_cast<double>(m.windows);
  }
  return m;
}

TrainResult train(const model::ModelConfig& cfg, const data::Dataset& dataset,
                  const TrainOptions& opts, const model::ModelParams* init, std::ostream* log) {
  if (dataset.train.empty()) throw DataError("training split has no windows");
  if (dataset.val.empty()) throw DataError("validation split has no windows");
  if (opts.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(opts.lr >= 0.0)) throw ConfigError("learning rate must be non-negative");

  TrainResult result;
  result.params = init ? *init : model::init_params(cfg);
  model::ModelParams params = result.params;
  Adam adam({opts.lr});
  double lr = opts.lr;
  std::mt19937_64 rng(opts.seed);
  const auto val = subsample(dataset.val, opts.max_val_windows);

  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t bad_epochs = 0;
  double best = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= opts.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t used = opts.max_train_windows > 0
                                 ? std::min(opts.max_train_windows, order.size())
                                 : order.size();
    double loss_sum = 0.0;
    std::vector<data::ForecastWindow> batch;
    for (std::size_t start = 0; start < used; start += opts.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(used, start + opts.batch_size); ++i) {
        batch.push_back(dataset.train[order[i]]);
      }
      const auto lg = autodiff::loss_and_grad(params, cfg, batch, result.report.steps + 1);
      if (opts.optimizer == Optimizer::kAdam) {
        adam.options().lr = lr;
        adam.step(params, lg.grad);
      } else {
        sgd_step(params, lg.grad, lr);
      }
      loss_sum += lg.loss * static_cast<double>(batch.size());
      ++result.report.steps;
    }

    const Metrics vm = evaluate(params, cfg, val);
    if (!std::isfinite(vm.mse)) {
      throw NumericalError("epoch " + std::to_string(epoch), "non-finite validation MSE");
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(used);
    rec.val_mse = vm.mse;
    rec.val_mae = vm.mae;
    rec.steps = result.report.steps;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.report.epochs.push_back(rec);
    if (log) {
      *log << "epoch " << epoch << " train_loss " << rec.train_loss << " val_mse " << rec.val_mse
           << " val_mae " << rec.val_mae << " (" << rec.seconds << " s)\n";
    }

    if (vm.mse < best) {
      best = vm.mse;
      result.params = params;
      result.report.best_epoch = epoch;
      result.report.best_val_mse = vm.mse;
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (opts.halve_on_plateau) lr *= 0.5;
      if (bad_epochs >= opts.patience) {
        result.report.stopped_early = true;
        break;
      }
    }
  }
  return result;
}

void write_report_csv(std::ostream& out, const TrainReport& report) {
  const auto old = out.precision(10);
  out << "epoch,train_loss,val_mse,val_mae,seconds\n";
  for (const auto& e : report.epochs) {
    out << e.epoch << ',' << e.train_loss << ',' << e.val_mse << ',' << e.val_mae << ','
        << e.seconds << '\n';
  }
  out.precision(old);
}

}  // namespace tea::train
