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

#include "tea/decomp.hpp"

namespace {

using namespace tea;

void BM_Hosvd(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  const Tensor t = random_normal({n, n, n}, rng);
  const decomp::Ranks ranks{n / 4, n / 4, n / 4};
  for (auto _ : state) benchmark::DoNotOptimize(decomp::hosvd(t, ranks));
}
BENCHMARK(BM_Hosvd)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_Hooi(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(4);
  const Tensor t = random_normal({n, n, n}, rng);
  const decomp::Ranks ranks{n / 4, n / 4, n / 4};
  decomp::HooiOptions opts;
  opts.max_iter = 5;
  for (auto _ : state) benchmark::DoNotOptimize(decomp::hooi(t, ranks, opts));
}
BENCHMARK(BM_Hooi)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_CpAls(benchmark::State& state) {
  std::mt19937_64 rng(5);
  const Tensor t = random_normal({12, 12, 12}, rng);
  decomp::CpOptions opts;
  opts.max_iter = 20;
  opts.tol = 1e-300;
  for (auto _ : state) {
    benchmark::DoNotOptimize(decomp::cp_als(t, static_cast<std::size_t>(state.range(0)), opts));
  }
}
BENCHMARK(BM_CpAls)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond);

void BM_TtSvd(benchmark::State& state) {
  std::mt19937_64 rng(6);
  const Tensor t = random_normal({6, 6, 6, 6, 6}, rng);
  decomp::TtOptions opts;
  opts.eps = 0.3;
  for (auto _ : state) benchmark::DoNotOptimize(decomp::tt_svd(t, opts));
}
BENCHMARK(BM_TtSvd)->Unit(benchmark::kMicrosecond);

}  // namespace
