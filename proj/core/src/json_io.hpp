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

#include <concepts>
#include <json.hpp>
#include <set>
#include <string>

#include "punctscl/error.hpp"
#include "punctscl/evaluation.hpp"
#include "punctscl/losses.hpp"
#include "punctscl/model.hpp"
#include "punctscl/training.hpp"

namespace punctscl::json_io {

using Json = nlohmann::ordered_json;

/// Reads named members of one JSON object and rejects anything left over.
class StrictObject {
 public:
  StrictObject(const Json& j, std::string context);

  bool has(const char* key) const;
  template <std::unsigned_integral T>
  void read(const char* key, T& out) {
    if (!has(key)) return;
    const Json& v = child(key);
    if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
    out = v.get<T>();
  }
  void read(const char* key, double& out);
  void read(const char* key, bool& out);
  void read(const char* key, std::string& out);
  const Json& child(const char* key);
  /// Throws ConfigError naming the first key that was never read.
  void finish() const;

  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

 private:
  const Json* j_;
  std::string context_;
  std::set<std::string> seen_;
};

Json encoder_config(const EncoderConfig& c);
void read_encoder_config(const Json& j, EncoderConfig& out, const std::string& context);

Json loss_config(const LossConfig& c);
void read_loss_config(const Json& j, LossConfig& out, const std::string& context);

Json train_config(const TrainConfig& c);
void read_train_config(const Json& j, TrainConfig& out, const std::string& context);

Json parse(std::string_view text, const std::string& context);
std::string dump(const Json& j);

}  // namespace punctscl::json_io
