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
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tea/data.hpp"
#include "tea/model.hpp"
#include "tea/tensor.hpp"

namespace tea::train {

/// Mean of squared differences over every element. Throws ShapeError.
double mse(const Tensor& pred, const Tensor& target);
/// Mean of absolute differences over every element. Throws ShapeError.
double mae(const Tensor& pred, const Tensor& target);

/// params ← params − lr · grads.
void sgd_step(model::ModelParams& params, const model::ModelParams& grads, double lr);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moment estimates are keyed by parameter name.
class Adam {
 public:
  explicit Adam(AdamOptions opts = {});

  /// Starts a new step; every `update` until the next call shares its count.
  void begin_step();
  void update(const std::string& name, Tensor& param, const Tensor& grad);
  void step(model::ModelParams& params, const model::ModelParams& grads);

  std::size_t steps() const { return t_; }
  AdamOptions& options() { return opts_; }

 private:
  AdamOptions opts_;
  std::size_t t_ = 0;
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
};

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
  std::size_t windows = 0;
};

/// Forecasts every window and averages the per-window metrics.
Metrics evaluate(const model::ModelParams& params, const model::ModelConfig& cfg,
                 std::span<const data::ForecastWindow> windows);

/// Repeats the last observed encoder row across the horizon.
Tensor persistence_forecast(const data::ForecastWindow& w, std::size_t pred_len);
Metrics evaluate_persistence(std::span<const data::ForecastWindow> windows);

enum class Optimizer { kAdam, kSgd };

struct TrainOptions {
  Optimizer optimizer = Optimizer::kAdam;
  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 10;
  std::size_t patience = 3;
  /// Halve the learning rate whenever validation MSE fails to improve.
  bool halve_on_plateau = false;
  std::uint64_t seed = 42;
  /// Caps on windows used per epoch and per validation pass (0 = all). Train
  /// windows are sampled without replacement each epoch.
  std::size_t max_train_windows = 0;
  std::size_t max_val_windows = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_mse = 0.0;
  double val_mae = 0.0;
  double seconds = 0.0;
  std::size_t steps = 0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_mse = 0.0;
  std::size_t steps = 0;
  bool stopped_early = false;
};

struct TrainResult {
  model::ModelParams params;  // best on validation
  TrainReport report;
};

/// Minibatch training with early stopping on validation MSE. Starts from
/// `init` when given, otherwise from init_params(cfg). Deterministic in
/// `opts.seed` and the model seed. Throws DataError on an empty split.
TrainResult train(const model::ModelConfig& cfg, const data::Dataset& dataset,
                  const TrainOptions& opts, const model::ModelParams* init = nullptr,
                  std::ostream* log = nullptr);

/// Header: epoch,train_loss,val_mse,val_mae,seconds.
void write_report_csv(std::ostream& out, const TrainReport& report);

}  // namespace tea::train
