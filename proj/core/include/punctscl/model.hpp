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
#include <string>
#include <utility>
#include <vector>

#include "punctscl/autograd.hpp"
#include "punctscl/corpus.hpp"
#include "punctscl/tensor.hpp"

namespace punctscl {

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t model_dim = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t ffn_dim = 128;
  double dropout = 0.1;
  std::size_t max_len = 128;

  /// Throws ConfigError on an unusable configuration.
  void validate() const;
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// Closed-form parameter count of the architecture described by `config`.
std::size_t parameter_count(const EncoderConfig& config);

struct EncoderBlock {
  Tensor query_weight, query_bias;
  Tensor key_weight, key_bias;
  Tensor value_weight, value_bias;
  Tensor output_weight, output_bias;
  Tensor attention_norm_gain, attention_norm_bias;
  Tensor ffn_in_weight, ffn_in_bias;
  Tensor ffn_out_weight, ffn_out_bias;
  Tensor ffn_norm_gain, ffn_norm_bias;
};

struct NamedParameter {
  std::string name;
  Tensor* tensor;
};

struct ConstNamedParameter {
  std::string name;
  const Tensor* tensor;
};

/// Post-norm transformer encoder with learned positions and one linear
/// classification head.
///
///   h0 = LayerNorm(tok[x] + pos[t])
///   a  = LayerNorm(h + Dropout(Attention(h)))
///   h' = LayerNorm(a + Dropout(W2 GELU(W1 a)))
///   R  = output of the last block
///   logits = R W + b
class PunctuationModel {
 public:
  /// Weights ~ N(0, 0.02^2); layer-norm gains 1; every bias 0.
  static PunctuationModel init(const EncoderConfig& config, std::uint64_t seed);

  const EncoderConfig& config() const noexcept { return config_; }

  /// Stable, name-ordered view over every trainable tensor.
  std::vector<NamedParameter> named_parameters();
  std::vector<ConstNamedParameter> named_parameters() const;
  std::size_t parameter_count() const;

 private:
  friend struct ModelAccess;
  EncoderConfig config_{};
  Tensor token_embedding_;
  Tensor position_embedding_;
  Tensor embedding_norm_gain_;
  Tensor embedding_norm_bias_;
  std::vector<EncoderBlock> blocks_;
  Tensor classifier_weight_;
  Tensor classifier_bias_;

  friend struct ForwardPass;
};

struct ForwardResult {
  Var representations;  ///< [rows x cols x d], last block output
  Var logits;           ///< [rows x cols x 4]
};

/// Runs the encoder on a padded batch. Padded keys are removed from every
/// attention row, so outputs at real positions do not depend on padding.
/// Dropout is applied only in train mode and is driven by `seed`.
ForwardResult encode_forward(PunctuationModel& model, Tape& tape, const Batch& batch, bool train_mode,
                             std::uint64_t seed);

/// Argmax over classes at mask-true cells (ties -> lowest index). Mask-false
/// cells are reported as O.
std::vector<int> predict_labels(const Tensor& logits, std::span<const std::uint8_t> mask);

}  // namespace punctscl
