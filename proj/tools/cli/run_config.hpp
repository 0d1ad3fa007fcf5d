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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "punctscl/corpus.hpp"
#include "punctscl/model.hpp"
#include "punctscl/training.hpp"

namespace punctscl::cli {

enum class InputFormat { kPlain, kTsv };

std::optional<InputFormat> parse_input_format(std::string_view name);

struct SynthSection {
  std::size_t n_tokens = 50000;
  std::size_t n_valid_tokens = 10000;
  std::size_t n_test_tokens = 10000;
  LabelRatios ratios = kIwsltRatios;
  std::uint64_t seed = 0;
};

struct DataSection {
  InputFormat format = InputFormat::kTsv;
  std::optional<std::filesystem::path> train;
  std::optional<std::filesystem::path> valid;
  std::optional<std::filesystem::path> test;
  std::size_t min_frequency = 1;
  std::optional<SynthSection> synth;
};

/// Parsed run configuration. `train.loss` carries the "loss" section.
struct RunConfigFile {
  DataSection data;
  EncoderConfig model;
  TrainConfig train;
  std::filesystem::path output_dir = "runs";
};

/// Strict parse: unknown keys and wrong types raise ConfigError. Relative
/// data paths and output_dir resolve against `base_dir`.
RunConfigFile parse_run_config(std::string_view json, const std::filesystem::path& base_dir = {});
RunConfigFile load_run_config(const std::filesystem::path& path);

}  // namespace punctscl::cli
