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

#include <span>
#include <vector>

#include "tea/data.hpp"
#include "tea/model.hpp"

namespace tea::reference {

using Real = long double;

/// Plain-loop transcription of model_forward in extended precision, with
/// every Tucker loading supplied by `frozen`. Shares no arithmetic with the
/// Eigen-backed path; used as the finite-difference oracle.
std::vector<Real> forward(const data::ForecastWindow& window, const model::ModelParams& params,
                          const model::ModelConfig& cfg, const model::FrozenFactors& frozen);

/// Mean over the batch of the per-window mean squared error.
Real batch_loss(const model::ModelParams& params, const model::ModelConfig& cfg,
                std::span<const data::ForecastWindow> batch,
                const std::vector<model::FrozenFactors>& frozen);

}  // namespace tea::reference
