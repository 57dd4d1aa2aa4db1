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

#include <benchmark/benchmark.h>

#include <random>

#include "tea/attention.hpp"
#include "tea/model.hpp"

namespace {

using namespace tea;

model::ModelConfig layer_config(std::size_t seq_len) {
  model::ModelConfig c;
  c.seq_len = seq_len;
  c.label_len = seq_len / 2;
  c.pred_len = seq_len / 4;
  c.features = 7;
  c.model_len = 8;
  c.model_dim = 64;
  c.attn_dim = 16;
  c.heads = 2;
  c.enc_ranks = {seq_len / 8, 4, 16};
  return c;
}

// Core-tensor attention with loadings fitted outside the timed region.
void BM_EncoderLayerCore(benchmark::State& state) {
  const auto cfg = layer_config(static_cast<std::size_t>(state.range(0)));
  std::mt19937_64 rng(1);
  const Tensor x = random_normal({cfg.seq_len, cfg.model_len, cfg.model_dim}, rng);
  const auto params = model::init_params(cfg);
  model::LayerOptions opts = model::layer_options(cfg);
  const auto loadings = model::fit_loadings(x, cfg.enc_ranks, opts);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model::tea_encoder_layer(x, params.encoder[0], opts, nullptr, &loadings));
  }
  state.counters["attention_flops"] = static_cast<double>(model::encoder_attention_flops(cfg, true));
  state.counters["projection_flops"] =
      static_cast<double>(model::tucker_projection_flops(x.shape(), cfg.enc_ranks));
}
BENCHMARK(BM_EncoderLayerCore)->Arg(48)->Arg(96)->Arg(192)->Unit(benchmark::kMicrosecond);

void BM_EncoderLayerCoreWithFit(benchmark::State& state) {
  const auto cfg = layer_config(static_cast<std::size_t>(state.range(0)));
  std::mt19937_64 rng(1);
  const Tensor x = random_normal({cfg.seq_len, cfg.model_len, cfg.model_dim}, rng);
  const auto params = model::init_params(cfg);
  const model::LayerOptions opts = model::layer_options(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model::tea_encoder_layer(x, params.encoder[0], opts));
  }
}
BENCHMARK(BM_EncoderLayerCoreWithFit)->Arg(48)->Arg(96)->Arg(192)->Unit(benchmark::kMicrosecond);

void BM_EncoderLayerFull(benchmark::State& state) {
  auto cfg = layer_config(static_cast<std::size_t>(state.range(0)));
  cfg.tea_encoder = false;
  cfg.tea_decoder = false;
  std::mt19937_64 rng(1);
  const Tensor x = random_normal({cfg.seq_len, cfg.model_len, cfg.model_dim}, rng);
  const auto params = model::init_params(cfg);
  const model::LayerOptions opts = model::layer_options(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model::tea_encoder_layer(x, params.encoder[0], opts));
  }
  state.counters["attention_flops"] = static_cast<double>(model::encoder_attention_flops(cfg, false));
}
BENCHMARK(BM_EncoderLayerFull)->Arg(48)->Arg(96)->Arg(192)->Unit(benchmark::kMicrosecond);

void BM_SingleHead(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const Tensor x = random_normal({L, 4, 16}, rng);
  attention::HeadParams h;
  h.w_q = random_normal({4, 16, 16}, rng);
  h.w_k = random_normal({4, 16, 16}, rng);
  h.w_v = random_normal({4, 16, 16}, rng);
  h.w_o = random_normal({16, 4, 16}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(attention::sha_forward(x, h, attention::Activation::relu()));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SingleHead)->RangeMultiplier(2)->Range(8, 256)->Complexity()->Unit(benchmark::kMicrosecond);

}  // namespace
