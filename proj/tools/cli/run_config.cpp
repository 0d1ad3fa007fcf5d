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

#include "run_config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "punctscl/error.hpp"
#include "punctscl/serialization.hpp"

namespace punctscl::cli {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw ConfigError("config: " + what); }

void reject_unknown(const json& object, std::initializer_list<std::string_view> allowed,
                    const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (auto name : allowed) known = known || key == name;
    if (!known) fail("unknown key \"" + key + "\" in " + where);
  }
}

const json& object_at(const json& parent, const char* key, const std::string& where) {
  const json& value = parent.at(key);
  if (!value.is_object()) fail(where + "." + key + " must be an object");
  return value;
}

std::size_t read_count(const json& object, const char* key, std::size_t fallback, const std::string& where) {
  if (!object.contains(key)) return fallback;
  const json& value = object.at(key);
  if (!value.is_number_unsigned()) fail(where + "." + key + " must be a non-negative integer");
  return value.get<std::size_t>();
}

std::filesystem::path read_path(const json& object, const char* key, const std::filesystem::path& base,
                                const std::string& where) {
  const json& value = object.at(key);
  if (!value.is_string()) fail(where + "." + key + " must be a string");
  std::filesystem::path path = value.get<std::string>();
  return path.is_relative() && !base.empty() ? base / path : path;
}

SynthSection read_synth(const json& object) {
  reject_unknown(object, {"n_tokens", "n_valid_tokens", "n_test_tokens", "ratios", "seed"}, "data.synth");
  SynthSection s;
  s.n_tokens = read_count(object, "n_tokens", s.n_tokens, "data.synth");
  s.n_valid_tokens = read_count(object, "n_valid_tokens", s.n_valid_tokens, "data.synth");
  s.n_test_tokens = read_count(object, "n_test_tokens", s.n_test_tokens, "data.synth");
  s.seed = read_count(object, "seed", s.seed, "data.synth");
  if (object.contains("ratios")) {
    const json& r = object.at("ratios");
    if (!r.is_array() || r.size() != kNumLabels) fail("data.synth.ratios must be an array of 4 numbers");
    for (std::size_t i = 0; i < kNumLabels; ++i) {
      if (!r[i].is_number()) fail("data.synth.ratios must be an array of 4 numbers");
      s.ratios[i] = r[i].get<double>();
    }
  }
  return s;
}

DataSection read_data(const json& object, const std::filesystem::path& base) {
  reject_unknown(object, {"format", "train", "valid", "test", "min_frequency", "synth"}, "data");
  DataSection d;
  if (object.contains("format")) {
    const json& f = object.at("format");
    const auto format = f.is_string() ? parse_input_format(f.get<std::string>()) : std::nullopt;
    if (!format) fail("data.format must be \"plain\" or \"tsv\"");
    d.format = *format;
  }
  for (const char* key : {"train", "valid", "test"}) {
    if (!object.contains(key)) continue;
    auto path = read_path(object, key, base, "data");
    if (std::string_view(key) == "train") d.train = path;
    else if (std::string_view(key) == "valid") d.valid = path;
    else d.test = path;
  }
  d.min_frequency = read_count(object, "min_frequency", d.min_frequency, "data");
  if (d.min_frequency < 1) fail("data.min_frequency must be at least 1");
  if (object.contains("synth")) d.synth = read_synth(object_at(object, "synth", "data"));
  return d;
}

}  // namespace

std::optional<InputFormat> parse_input_format(std::string_view name) {
  if (name == "plain") return InputFormat::kPlain;
  if (name == "tsv") return InputFormat::kTsv;
  return std::nullopt;
}

RunConfigFile parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) fail("top level must be an object");
  reject_unknown(root, {"data", "model", "train", "loss", "output_dir"}, "config");

  RunConfigFile config;
  if (root.contains("data")) config.data = read_data(object_at(root, "data", "config"), base_dir);
  if (root.contains("model")) config.model = parse_encoder_config(object_at(root, "model", "config").dump());
  if (root.contains("train")) config.train = parse_train_config(object_at(root, "train", "config").dump());
  if (root.contains("loss")) config.train.loss = parse_loss_config(object_at(root, "loss", "config").dump());
  if (root.contains("output_dir")) config.output_dir = read_path(root, "output_dir", base_dir, "config");
  return config;
}

RunConfigFile load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path.parent_path());
}

}  // namespace punctscl::cli
