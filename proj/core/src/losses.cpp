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

#include "punctscl/losses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "punctscl/error.hpp"
#include "punctscl/exact_sum.hpp"
#include "punctscl/ops.hpp"
#include "punctscl/random.hpp"

namespace punctscl {

namespace {

constexpr std::array<std::string_view, 3> kLossKindNames{"CE", "SCL_COMBINED", "FOCAL"};
constexpr std::array<std::string_view, 2> kTemperatureModeNames{"quotient", "supcon_scaled"};

Var as_matrix(const Var& x) {
  if (x.shape().size() == 2) return x;
  return ops::reshape(x, {x.value().rows(), x.value().cols()});
}

std::vector<std::size_t> valid_positions(std::span<const int> labels, std::span<const std::uint8_t> mask,
                                         std::size_t rows) {
  if (labels.size() != rows || mask.size() != rows) {
    throw DimensionError("labels/mask hold " + std::to_string(labels.size()) + "/" +
                         std::to_string(mask.size()) + " entries for " + std::to_string(rows) + " tokens");
  }
  std::vector<std::size_t> v;
  for (std::size_t i = 0; i < rows; ++i) {
    if (mask[i]) v.push_back(i);
  }
  if (v.empty()) throw ContractError("loss needs at least one mask-true token");
  return v;
}

// log p_t for each mask-true token.
Var true_class_log_prob(const Var& logits, std::span<const int> labels, std::span<const std::uint8_t> mask) {
  const Var flat = as_matrix(logits);
  const auto valid = valid_positions(labels, mask, flat.shape()[0]);
  std::vector<int> targets;
  targets.reserve(valid.size());
  for (auto i : valid) targets.push_back(labels[i]);
  return ops::pick(ops::row_log_softmax(ops::gather_rows(flat, valid)), targets);
}

// out[i] = mean of s[i, p] over p != i with group[p] == group[i]; 0 if none.
Var positive_mean(const Var& s, std::vector<int> group) {
  const std::size_t n = group.size();
  std::vector<double> share(n, 0.0);
  Tensor out({n});
  auto sv = s.value().values();
  std::vector<double> terms;
  terms.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    terms.clear();
    for (std::size_t p = 0; p < n; ++p) {
      if (p != i && group[p] == group[i]) terms.push_back(sv[i * n + p]);
    }
    if (terms.empty()) continue;
    share[i] = 1.0 / static_cast<double>(terms.size());
    out[i] = order_invariant_sum(terms) / static_cast<double>(terms.size());
  }
  return s.tape().record(std::move(out), {s},
                         [s, n, group = std::move(group), share = std::move(share)](Tape& tape, std::span<const double> g) {
                           auto ds = tape.grad_buffer(s);
                           for (std::size_t i = 0; i < n; ++i) {
                             if (share[i] == 0.0 || g[i] == 0.0) continue;
                             const double w = g[i] * share[i];
                             for (std::size_t p = 0; p < n; ++p) {
                               if (p != i && group[p] == group[i]) ds[i * n + p] += w;
                             }
                           }
                         });
}

}  // namespace

std::string_view loss_kind_name(LossKind kind) { return kLossKindNames[static_cast<std::size_t>(kind)]; }

std::optional<LossKind> parse_loss_kind(std::string_view name) {
  for (std::size_t i = 0; i < kLossKindNames.size(); ++i) {
    if (kLossKindNames[i] == name) return static_cast<LossKind>(i);
  }
  return std::nullopt;
}

std::string_view temperature_mode_name(TemperatureMode mode) {
  return kTemperatureModeNames[static_cast<std::size_t>(mode)];
}

std::optional<TemperatureMode> parse_temperature_mode(std::string_view name) {
  for (std::size_t i = 0; i < kTemperatureModeNames.size(); ++i) {
    if (kTemperatureModeNames[i] == name) return static_cast<TemperatureMode>(i);
  }
  return std::nullopt;
}

void LossConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("loss.lambda must lie in [0, 1]");
  if (!(temperature > 0.0)) throw ConfigError("loss.temperature must be positive");
  if (!(base_temperature > 0.0)) throw ConfigError("loss.base_temperature must be positive");
  if (!(focal_gamma >= 0.0)) throw ConfigError("loss.focal_gamma must be non-negative");
}

double effective_temperature(double temperature, double base_temperature) {
  if (!(temperature > 0.0) || !(base_temperature > 0.0)) {
    throw ContractError("temperature and base temperature must be positive");
  }
  return temperature / base_temperature;
}

Var cross_entropy(const Var& logits, std::span<const int> labels, std::span<const std::uint8_t> mask) {
  return ops::scale(ops::mean(true_class_log_prob(logits, labels, mask)), -1.0);
}

Var focal_loss(const Var& logits, std::span<const int> labels, std::span<const std::uint8_t> mask,
               double gamma) {
  if (!(gamma >= 0.0)) throw ContractError("focal gamma must be non-negative");
  const Var log_pt = true_class_log_prob(logits, labels, mask);
  const Var weight = ops::pow_scalar(ops::add_scalar(ops::scale(ops::exp(log_pt), -1.0), 1.0), gamma);
  return ops::scale(ops::mean(ops::mul(weight, log_pt)), -1.0);
}

Var token_scl(const Var& representations, std::span<const int> labels,
              std::span<const std::uint8_t> mask, double tau, const SclOptions& options) {
  if (!(tau > 0.0)) throw ContractError("token_scl: tau must be positive");
  const Var flat = as_matrix(representations);
  auto valid = valid_positions(labels, mask, flat.shape()[0]);
  Tape& tape = flat.tape();

  if (options.o_anchor_cap) {
    std::vector<std::size_t> o_positions;
    std::vector<std::size_t> kept;
    for (auto i : valid) {
      (labels[i] == 0 ? o_positions : kept).push_back(i);
    }
    if (o_positions.size() > *options.o_anchor_cap) {
      std::mt19937_64 rng(options.seed);
      shuffle_in_place(o_positions, rng);
      o_positions.resize(*options.o_anchor_cap);
    }
    kept.insert(kept.end(), o_positions.begin(), o_positions.end());
    std::sort(kept.begin(), kept.end());
    valid = std::move(kept);
  }

  const std::size_t n = valid.size();
  std::vector<int> group(n);
  std::map<int, std::size_t> counts;
  for (std::size_t i = 0; i < n; ++i) {
    group[i] = labels[valid[i]];
    ++counts[group[i]];
  }
  std::vector<std::size_t> anchors;
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[group[i]] > 1) anchors.push_back(i);
  }
  if (anchors.empty()) return tape.constant(Tensor::scalar(0.0));

  const Var z = ops::l2_normalize_rows(ops::gather_rows(flat, valid));
  const Var s = ops::scale(ops::matmul(z, ops::transpose(z)), 1.0 / tau);
  const Var per_anchor = ops::sub(ops::row_logsumexp(s, /*exclude_diagonal=*/true), positive_mean(s, group));
  Var loss = ops::sum(ops::gather_rows(ops::reshape(per_anchor, {n, 1}), anchors));
  if (options.mean_over_anchors) loss = ops::scale(loss, 1.0 / static_cast<double>(anchors.size()));
  if (options.loss_scale != 1.0) loss = ops::scale(loss, options.loss_scale);
  return loss;
}

LossParts combined_loss(const Var& logits, const Var& representations, std::span<const int> labels,
                        std::span<const std::uint8_t> mask, const LossConfig& config, std::uint64_t seed) {
  config.validate();
  if (config.kind == LossKind::kFocal) {
    return {focal_loss(logits, labels, mask, config.focal_gamma), std::nullopt, std::nullopt};
  }
  const Var ce = cross_entropy(logits, labels, mask);
  if (config.kind == LossKind::kCrossEntropy || config.lambda == 0.0) {
    return {ce, ce.value().item(), std::nullopt};
  }

  SclOptions options;
  options.o_anchor_cap = config.o_anchor_cap;
  options.seed = seed;
  options.mean_over_anchors = config.mean_over_anchors;
  double tau = effective_temperature(config.temperature, config.base_temperature);
  if (config.temperature_mode == TemperatureMode::kSupConScaled) {
    tau = config.temperature;
    options.loss_scale = config.temperature / config.base_temperature;
  }
  const Var scl = token_scl(representations, labels, mask, tau, options);
  if (config.lambda == 1.0) return {scl, ce.value().item(), scl.value().item()};

  const Var total = ops::add(ops::scale(ce, 1.0 - config.lambda), ops::scale(scl, config.lambda));
  return {total, ce.value().item(), scl.value().item()};
}

}  // namespace punctscl
