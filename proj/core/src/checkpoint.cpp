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

#include "punctscl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json_io.hpp"

namespace punctscl {
namespace {

constexpr std::string_view kMagic = "PSCLCKPT";

template <typename T>
void put_le(std::string& out, T v) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(std::string_view bytes, std::size_t at) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  }
  return v;
}

[[noreturn]] void malformed(const std::string& what) { throw ParseError(0, "checkpoint: " + what); }

}  // namespace

std::string serialize_checkpoint(const PunctuationModel& model, const Vocabulary& vocabulary) {
  using json_io::Json;
  Json header;
  header["model"] = json_io::encoder_config(model.config());
  header["vocabulary"] = {{"min_frequency", vocabulary.min_frequency()}, {"tokens", vocabulary.tokens()}};
  Json table = Json::array();
  std::size_t offset = 0;
  const auto params = model.named_parameters();
  for (const auto& p : params) {
    table.push_back({{"name", p.name}, {"shape", p.tensor->shape()}, {"offset", offset}});
    offset += p.tensor->size();
  }
  header["parameters"] = std::move(table);
  header["total_values"] = offset;
  const std::string text = header.dump();

  std::string out(kMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  out.reserve(out.size() + offset * 8);
  for (const auto& p : params) {
    for (double v : p.tensor->values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  using json_io::Json;
  constexpr std::size_t kPrefix = 8 + 4 + 8;
  if (bytes.size() < kPrefix || bytes.substr(0, kMagic.size()) != kMagic) malformed("bad magic");
  const auto version = get_le<std::uint32_t>(bytes, 8);
  if (version != kCheckpointVersion) malformed("unsupported version " + std::to_string(version));
  const auto header_len = get_le<std::uint64_t>(bytes, 12);
  if (header_len > bytes.size() - kPrefix) malformed("truncated header");

  Json header;
  try {
    header = Json::parse(bytes.substr(kPrefix, header_len));
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("header is not valid JSON: ") + e.what());
  }

  try {
    EncoderConfig config;
    json_io::read_encoder_config(header.at("model"), config, "checkpoint.model");
    const auto& vocab_json = header.at("vocabulary");
    auto vocabulary = Vocabulary::from_tokens(vocab_json.at("tokens").get<std::vector<std::string>>(),
                                              vocab_json.at("min_frequency").get<std::size_t>());
    if (vocabulary.size() != config.vocab_size) malformed("vocabulary size does not match the model config");

    auto model = PunctuationModel::init(config, 0);
    auto params = model.named_parameters();
    const auto& table = header.at("parameters");
    if (!table.is_array() || table.size() != params.size()) malformed("parameter table does not match the model");
    const std::size_t total = header.at("total_values").get<std::size_t>();
    const std::size_t payload = kPrefix + header_len;
    if (bytes.size() - payload != total * 8) malformed("payload size does not match the parameter table");

    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& entry = table[i];
      Tensor& t = *params[i].tensor;
      if (entry.at("name").get<std::string>() != params[i].name) {
        malformed("unexpected parameter '" + entry.at("name").get<std::string>() + "'");
      }
      if (entry.at("shape").get<Shape>() != t.shape()) malformed("shape mismatch for " + params[i].name);
      const std::size_t offset = entry.at("offset").get<std::size_t>();
      if (offset + t.size() > total) malformed("offset out of range for " + params[i].name);
      auto values = t.values();
      for (std::size_t k = 0; k < values.size(); ++k) {
        values[k] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, payload + (offset + k) * 8));
      }
    }
    return {std::move(model), std::move(vocabulary)};
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("bad header: ") + e.what());
  } catch (const ConfigError& e) {
    malformed(e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const PunctuationModel& model,
                     const Vocabulary& vocabulary) {
  const std::string blob = serialize_checkpoint(model, vocabulary);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_checkpoint(buffer.str());
}

}  // namespace punctscl
