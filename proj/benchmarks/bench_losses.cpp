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
#include <vector>

#include "punctscl/losses.hpp"
#include "punctscl/random.hpp"

namespace {

using namespace punctscl;

struct Instance {
  Tensor reps;
  Tensor logits;
  std::vector<int> labels;
  std::vector<std::uint8_t> mask;
};

// Label mix close to the IWSLT shares so the positive sets look realistic.
Instance make_instance(std::size_t n, std::size_t d) {
  std::mt19937_64 rng(7);
  Instance in{Tensor({n, d}), Tensor({n, 4}), std::vector<int>(n), std::vector<std::uint8_t>(n, 1)};
  for (auto& v : in.reps.values()) v = standard_normal(rng);
  for (auto& v : in.logits.values()) v = standard_normal(rng);
  for (auto& l : in.labels) {
    const double u = uniform01(rng);
    l = u < 0.857 ? 0 : u < 0.9323 ? 1 : u < 0.9953 ? 2 : 3;
  }
  return in;
}

void BM_TokenSclForward(benchmark::State& state) {
  const auto in = make_instance(static_cast<std::size_t>(state.range(0)), 64);
  for (auto _ : state) {
    Tape tape(false);
    benchmark::DoNotOptimize(token_scl(tape.constant(in.reps), in.labels, in.mask, 0.6 / 0.07).value().item());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TokenSclForward)->RangeMultiplier(2)->Range(64, 2048);

void BM_TokenSclBackward(benchmark::State& state) {
  const auto in = make_instance(static_cast<std::size_t>(state.range(0)), 64);
  for (auto _ : state) {
    Tape tape;
    const Var r = tape.input(in.reps);
    tape.backward(token_scl(r, in.labels, in.mask, 0.6 / 0.07));
    benchmark::DoNotOptimize(tape.grad(r).data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TokenSclBackward)->RangeMultiplier(2)->Range(64, 2048);

void BM_TokenSclCappedBackward(benchmark::State& state) {
  const auto in = make_instance(2048, 64);
  SclOptions options;
  options.o_anchor_cap = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    Tape tape;
    const Var r = tape.input(in.reps);
    tape.backward(token_scl(r, in.labels, in.mask, 0.6 / 0.07, options));
    benchmark::DoNotOptimize(tape.grad(r).data());
  }
}
BENCHMARK(BM_TokenSclCappedBackward)->Arg(64)->Arg(256)->Arg(1024);

void BM_CrossEntropyBackward(benchmark::State& state) {
  const auto in = make_instance(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) {
    Tape tape;
    const Var z = tape.input(in.logits);
    tape.backward(cross_entropy(z, in.labels, in.mask));
    benchmark::DoNotOptimize(tape.grad(z).data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CrossEntropyBackward)->RangeMultiplier(4)->Range(64, 4096);

}  // namespace
