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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "punctscl/evaluation.hpp"
#include "punctscl/losses.hpp"
#include "punctscl/model.hpp"
#include "punctscl/oracle.hpp"
#include "punctscl/training.hpp"

/// JSON text for every machine-readable artifact. Readers are strict:
/// unknown keys and mistyped values raise ConfigError, absent keys keep
/// their defaults. Writers emit two-space indented JSON with a trailing
/// newline and a fixed key order.
namespace punctscl {

std::string to_json(const EncoderConfig& config);
EncoderConfig parse_encoder_config(std::string_view json);

std::string to_json(const LossConfig& config);
LossConfig parse_loss_config(std::string_view json);

/// The training section excludes `loss`, which is its own section.
std::string to_json(const TrainConfig& config);
/// Returns a config whose `loss` member holds defaults.
TrainConfig parse_train_config(std::string_view json);

std::string to_json(const RunRecord& record);
RunRecord parse_run_record(std::string_view json);

std::string to_json(const EvaluationReport& report);

std::string to_json(std::span<const oracle::OracleReport> reports, std::uint64_t seed, std::size_t trials);

}  // namespace punctscl
