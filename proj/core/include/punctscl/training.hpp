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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "punctscl/corpus.hpp"
#include "punctscl/losses.hpp"
#include "punctscl/model.hpp"

namespace punctscl {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  LossConfig loss{};
  std::size_t max_len = 128;

  /// Throws ConfigError. A learning rate of 0 is accepted (frozen weights).
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// First and second moments, one tensor per parameter in
/// named_parameters() order.
struct AdamWState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;

  static AdamWState zeros_like(std::span<const NamedParameter> params);
};

/// One decoupled-weight-decay Adam update from the gradients stored in each
/// parameter's grad slot:
///
///   m <- b1 m + (1 - b1) g
///   v <- b2 v + (1 - b2) g^2
///   theta <- theta - lr (m_hat / (sqrt(v_hat) + eps) + wd theta)
///
/// Throws NumericError naming the parameter if any gradient is non-finite;
/// nothing is modified in that case.
void adamw_step(std::span<const NamedParameter> params, AdamWState& state, const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;  ///< 1-based
  std::size_t steps = 0;
  double train_loss = 0.0;  ///< mean total loss over steps
  std::optional<double> train_ce;
  std::optional<double> train_scl;
  double valid_f1 = 0.0;  ///< overall micro F1
};

struct RunRecord {
  std::uint64_t seed = 0;
  EncoderConfig model{};
  TrainConfig train{};
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  ///< 1-based
  double best_valid_f1 = 0.0;
};

struct TrainResult {
  PunctuationModel best_model;
  RunRecord record;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains `model` in place and returns a copy of the parameters from the
/// epoch with the highest validation F1 (ties keep the earliest epoch).
/// Each epoch reshuffles the training windows with a seed derived from
/// (config.seed, epoch) and regroups them into batches of
/// config.batch_size. Throws NumericError on a non-finite loss.
TrainResult train(PunctuationModel& model, std::span<const Batch> train_batches,
                  std::span<const Batch> valid_batches, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace punctscl
