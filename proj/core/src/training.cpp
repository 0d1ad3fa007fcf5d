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

#include "punctscl/training.hpp"

#include <cmath>
#include <random>
#include <string>

#include "punctscl/error.hpp"
#include "punctscl/evaluation.hpp"
#include "punctscl/exact_sum.hpp"
#include "punctscl/random.hpp"

namespace punctscl {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be at least 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train.learning_rate must be finite and non-negative");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train.betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("train.eps must be positive");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw ConfigError("train.weight_decay must be finite and non-negative");
  }
  if (max_len < 1) throw ConfigError("train.max_len must be at least 1");
  loss.validate();
}

AdamWState AdamWState::zeros_like(std::span<const NamedParameter> params) {
  AdamWState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.tensor->size(), 0.0);
    s.v.emplace_back(p.tensor->size(), 0.0);
  }
  return s;
}

void adamw_step(std::span<const NamedParameter> params, AdamWState& state, const TrainConfig& config) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adamw_step: optimizer state does not match the parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& t = *params[i].tensor;
    if (state.m[i].size() != t.size() || state.v[i].size() != t.size()) {
      throw DimensionError("adamw_step: state size mismatch for " + params[i].name);
    }
    if (!t.has_grad()) continue;
    for (double g : t.grad()) {
      if (!std::isfinite(g)) throw NumericError("adamw_step: non-finite gradient in " + params[i].name);
    }
  }

  ++state.step;
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i].tensor;
    auto theta = p.values();
    auto& m = state.m[i];
    auto& v = state.v[i];
    const bool has_grad = p.has_grad();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double g = has_grad ? p.grad()[j] : 0.0;
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      theta[j] -= config.learning_rate * (m_hat / (std::sqrt(v_hat) + config.eps) + config.weight_decay * theta[j]);
    }
  }
}

namespace {

double mean_of(const std::vector<double>& xs) {
  return order_invariant_sum(xs) / static_cast<double>(xs.size());
}

}  // namespace

TrainResult train(PunctuationModel& model, std::span<const Batch> train_batches,
                  std::span<const Batch> valid_batches, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_batches.empty()) throw ContractError("train: no training batches");
  if (valid_batches.empty()) throw ContractError("train: no validation batches");

  std::vector<Window> windows;
  for (const auto& b : train_batches) {
    for (auto& w : split_batch(b)) {
      if (!w.token_ids.empty()) windows.push_back(std::move(w));
    }
  }
  if (windows.empty()) throw ContractError("train: training batches hold no real tokens");

  auto params = model.named_parameters();
  AdamWState state = AdamWState::zeros_like(params);

  TrainResult result{model, {}};
  result.record.seed = config.seed;
  result.record.model = model.config();
  result.record.train = config;
  bool have_best = false;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<Window> order = windows;
    std::mt19937_64 shuffle_rng(derive_seed(config.seed, epoch, 0));
    shuffle_in_place(order, shuffle_rng);
    const auto batches = group_windows(order, config.batch_size);

    std::vector<double> totals;
    std::vector<double> ces;
    std::vector<double> scls;
    for (std::size_t step = 0; step < batches.size(); ++step) {
      const Batch& batch = batches[step];
      const std::uint64_t step_seed = derive_seed(config.seed, epoch, step + 1);

      Tape tape;
      const auto fwd = encode_forward(model, tape, batch, true, derive_seed(step_seed, 1));
      const auto parts = combined_loss(fwd.logits, fwd.representations, batch.labels, batch.mask, config.loss,
                                       derive_seed(step_seed, 2));
      const double loss = parts.total.value().item();
      if (!std::isfinite(loss)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(step + 1));
      }
      for (auto& p : params) p.tensor->zero_grad();
      tape.backward(parts.total);
      adamw_step(params, state, config);

      totals.push_back(loss);
      if (parts.ce) ces.push_back(*parts.ce);
      if (parts.scl) scls.push_back(*parts.scl);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.steps = batches.size();
    rec.train_loss = mean_of(totals);
    if (!ces.empty()) rec.train_ce = mean_of(ces);
    if (!scls.empty()) rec.train_scl = mean_of(scls);
    rec.valid_f1 = evaluate(model, valid_batches).overall.f1;

    if (!have_best || rec.valid_f1 > result.record.best_valid_f1) {
      have_best = true;
      result.record.best_epoch = epoch;
      result.record.best_valid_f1 = rec.valid_f1;
      result.best_model = model;
    }
    result.record.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  for (auto& p : result.best_model.named_parameters()) p.tensor->clear_grad();
  return result;
}

}  // namespace punctscl
