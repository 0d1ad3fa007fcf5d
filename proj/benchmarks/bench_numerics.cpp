/*
 * Copyright 2026 The punctscl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include <random>

#include "punctscl/exact_sum.hpp"
#include "punctscl/ops.hpp"
#include "punctscl/random.hpp"

namespace {

using namespace punctscl;

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = uniform01(rng) - 0.5;
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_tensor({n, n}, 1);
  const Tensor b = random_tensor({n, n}, 2);
  for (auto _ : state) {
    Tape tape(false);
    benchmark::DoNotOptimize(ops::matmul(tape.constant(a), tape.constant(b)).value().values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(32, 256);

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Tensor a = random_tensor({n, n}, 1);
  const Tensor b = random_tensor({n, n}, 2);
  for (auto _ : state) {
    Tape tape;
    const Var x = tape.input(a);
    tape.backward(ops::sum(ops::matmul(x, tape.constant(b))));
    benchmark::DoNotOptimize(tape.grad(x).data());
  }
}
BENCHMARK(BM_MatmulBackward)->RangeMultiplier(2)->Range(32, 256);

void BM_OrderInvariantSum(benchmark::State& state) {
  const Tensor t = random_tensor({static_cast<std::size_t>(state.range(0))}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(order_invariant_sum(t.values()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_OrderInvariantSum)->Range(1 << 10, 1 << 16);

}  // namespace
