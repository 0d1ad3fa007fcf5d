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
#include <optional>
#include <span>
#include <string_view>

#include "punctscl/autograd.hpp"

namespace punctscl {

enum class LossKind { kCrossEntropy, kSclCombined, kFocal };

std::string_view loss_kind_name(LossKind kind);  // "CE", "SCL_COMBINED", "FOCAL"
std::optional<LossKind> parse_loss_kind(std::string_view name);

/// How temperature and base temperature enter the contrastive term.
enum class TemperatureMode {
  /// tau = temperature / base_temperature divides the similarities.
  kQuotient,
  /// tau = temperature divides the similarities and the loss is multiplied
  /// by temperature / base_temperature (the usual SupCon code path).
  kSupConScaled,
};

std::string_view temperature_mode_name(TemperatureMode mode);  // "quotient", "supcon_scaled"
std::optional<TemperatureMode> parse_temperature_mode(std::string_view name);

struct LossConfig {
  LossKind kind = LossKind::kSclCombined;
  double lambda = 0.1;
  double temperature = 0.6;
  double base_temperature = 0.07;
  double focal_gamma = 2.0;
  std::optional<std::size_t> o_anchor_cap;
  TemperatureMode temperature_mode = TemperatureMode::kQuotient;
  /// Divide the contrastive sum by the number of anchors that have positives.
  bool mean_over_anchors = false;

  void validate() const;
};

/// temperature / base_temperature; both must be positive.
double effective_temperature(double temperature, double base_temperature);

/// Mean over mask-true tokens of -log softmax(logits)[label].
/// logits: [..., 4]; labels and mask are flat over the leading dimensions.
Var cross_entropy(const Var& logits, std::span<const int> labels, std::span<const std::uint8_t> mask);

/// Mean over mask-true tokens of -(1 - p_t)^gamma log p_t.
Var focal_loss(const Var& logits, std::span<const int> labels, std::span<const std::uint8_t> mask,
               double gamma);

struct SclOptions {
  /// Keep at most this many O tokens (chosen by `seed`) in the contrast set.
  std::optional<std::size_t> o_anchor_cap;
  std::uint64_t seed = 0;
  bool mean_over_anchors = false;
  /// Multiplies the final loss.
  double loss_scale = 1.0;
};

/// Token-level supervised contrastive loss over every mask-true token of the
/// batch (flattened across sequences).
///
/// With z = l2-normalized representation rows and s_ik = z_i . z_k / tau:
///
///   L = sum_i  -1/|P(i)|  sum_{p in P(i)}  log( exp(s_ip) / sum_{k != i} exp(s_ik) )
///
/// where P(i) holds the other tokens sharing i's label. Anchors with no
/// positives contribute nothing. The denominator is a log-sum-exp.
Var token_scl(const Var& representations, std::span<const int> labels,
              std::span<const std::uint8_t> mask, double tau, const SclOptions& options = {});

struct LossParts {
  Var total;
  std::optional<double> ce;   ///< set when cross-entropy was evaluated
  std::optional<double> scl;  ///< set when the contrastive term was evaluated
};

/// Loss selected by config.kind. For kSclCombined the total is
/// (1 - lambda) * CE + lambda * SCL; lambda == 0 returns CE alone and skips
/// the contrastive term, lambda == 1 returns the contrastive term alone.
LossParts combined_loss(const Var& logits, const Var& representations, std::span<const int> labels,
                        std::span<const std::uint8_t> mask, const LossConfig& config,
                        std::uint64_t seed);

}  // namespace punctscl
