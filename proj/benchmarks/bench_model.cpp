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

#include "punctscl/corpus.hpp"
#include "punctscl/losses.hpp"
#include "punctscl/model.hpp"

namespace {

using namespace punctscl;

struct Fixture {
  Vocabulary vocab;
  std::vector<Batch> batches;
  EncoderConfig config;
};

Fixture make_fixture(std::size_t max_len) {
  const auto tokens = generate_synthetic_corpus(max_len * 16, 11);
  Fixture f{Vocabulary::build(tokens, 1), {}, {}};
  f.batches = batchify(tokens, f.vocab, max_len, 16);
  f.config.vocab_size = f.vocab.size();
  f.config.max_len = max_len;
  return f;
}

void BM_ModelForwardEval(benchmark::State& state) {
  const auto f = make_fixture(static_cast<std::size_t>(state.range(0)));
  auto model = PunctuationModel::init(f.config, 1);
  for (auto _ : state) {
    Tape tape(false);
    const auto out = encode_forward(model, tape, f.batches.front(), false, 0);
    benchmark::DoNotOptimize(out.logits.value().values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batches.front().real_tokens()));
}
BENCHMARK(BM_ModelForwardEval)->Arg(32)->Arg(128);

void BM_TrainingStep(benchmark::State& state) {
  const auto f = make_fixture(static_cast<std::size_t>(state.range(0)));
  auto model = PunctuationModel::init(f.config, 1);
  LossConfig loss;
  loss.kind = state.range(1) == 0 ? LossKind::kCrossEntropy : LossKind::kSclCombined;
  const Batch& batch = f.batches.front();
  for (auto _ : state) {
    for (auto& p : model.named_parameters()) p.tensor->zero_grad();
    Tape tape;
    const auto out = encode_forward(model, tape, batch, true, 3);
    const auto parts = combined_loss(out.logits, out.representations, batch.labels, batch.mask, loss, 5);
    tape.backward(parts.total);
    benchmark::DoNotOptimize(parts.total.value().item());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.real_tokens()));
}
BENCHMARK(BM_TrainingStep)->ArgNames({"max_len", "scl"})->Args({32, 0})->Args({32, 1})->Args({128, 0})->Args({128, 1});

}  // namespace
