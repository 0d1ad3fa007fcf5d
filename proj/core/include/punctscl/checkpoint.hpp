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

#include <filesystem>
#include <string>

#include "punctscl/corpus.hpp"
#include "punctscl/model.hpp"

namespace punctscl {

/// Binary checkpoint layout (all integers little-endian):
///
///   8 bytes   magic "PSCLCKPT"
///   u32       format version (1)
///   u64       header length H
///   H bytes   UTF-8 JSON header: model config, vocabulary, parameter table
///   payload   float64 LE values, parameters in table order
///
/// The parameter table lists name, shape and element offset for each tensor.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  PunctuationModel model;
  Vocabulary vocabulary;
};

std::string serialize_checkpoint(const PunctuationModel& model, const Vocabulary& vocabulary);
/// Throws ParseError(0, ...) on a malformed or incompatible blob.
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const PunctuationModel& model,
                     const Vocabulary& vocabulary);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace punctscl
