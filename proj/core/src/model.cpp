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

#include "punctscl/model.hpp"

#include <random>

#include "punctscl/error.hpp"
#include "punctscl/ops.hpp"
#include "punctscl/random.hpp"

namespace punctscl {

void EncoderConfig::validate() const {
  if (vocab_size < 2) throw ConfigError("vocab_size must include PAD and UNK");
  if (model_dim == 0 || n_layers == 0 || n_heads == 0 || ffn_dim == 0 || max_len == 0) {
    throw ConfigError("encoder dimensions must be positive");
  }
  if (model_dim % n_heads != 0) {
    throw ConfigError("model_dim " + std::to_string(model_dim) + " is not divisible by n_heads " +
                      std::to_string(n_heads));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

std::size_t parameter_count(const EncoderConfig& c) {
  const std::size_t d = c.model_dim;
  const std::size_t embeddings = c.vocab_size * d + c.max_len * d + 2 * d;
  const std::size_t attention = 4 * (d * d + d) + 2 * d;
  const std::size_t ffn = (d * c.ffn_dim + c.ffn_dim) + (c.ffn_dim * d + d) + 2 * d;
  const std::size_t head = d * kNumLabels + kNumLabels;
  return embeddings + c.n_layers * (attention + ffn) + head;
}

namespace {

Tensor normal_tensor(Shape shape, double stddev, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = stddev * standard_normal(rng);
  t.set_requires_grad(true);
  return t;
}

Tensor filled_tensor(Shape shape, double value) {
  Tensor t(std::move(shape), value);
  t.set_requires_grad(true);
  return t;
}

}  // namespace

PunctuationModel PunctuationModel::init(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  constexpr double kInitStd = 0.02;
  std::mt19937_64 rng(seed);
  const std::size_t d = config.model_dim;
  const std::size_t f = config.ffn_dim;

  PunctuationModel m;
  m.config_ = config;
  m.token_embedding_ = normal_tensor({config.vocab_size, d}, kInitStd, rng);
  m.position_embedding_ = normal_tensor({config.max_len, d}, kInitStd, rng);
  m.embedding_norm_gain_ = filled_tensor({d}, 1.0);
  m.embedding_norm_bias_ = filled_tensor({d}, 0.0);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    EncoderBlock b;
    b.query_weight = normal_tensor({d, d}, kInitStd, rng);
    b.query_bias = filled_tensor({d}, 0.0);
    b.key_weight = normal_tensor({d, d}, kInitStd, rng);
    b.key_bias = filled_tensor({d}, 0.0);
    b.value_weight = normal_tensor({d, d}, kInitStd, rng);
    b.value_bias = filled_tensor({d}, 0.0);
    b.output_weight = normal_tensor({d, d}, kInitStd, rng);
    b.output_bias = filled_tensor({d}, 0.0);
    b.attention_norm_gain = filled_tensor({d}, 1.0);
    b.attention_norm_bias = filled_tensor({d}, 0.0);
    b.ffn_in_weight = normal_tensor({d, f}, kInitStd, rng);
    b.ffn_in_bias = filled_tensor({f}, 0.0);
    b.ffn_out_weight = normal_tensor({f, d}, kInitStd, rng);
    b.ffn_out_bias = filled_tensor({d}, 0.0);
    b.ffn_norm_gain = filled_tensor({d}, 1.0);
    b.ffn_norm_bias = filled_tensor({d}, 0.0);
    m.blocks_.push_back(std::move(b));
  }
  m.classifier_weight_ = normal_tensor({d, kNumLabels}, kInitStd, rng);
  m.classifier_bias_ = filled_tensor({kNumLabels}, 0.0);
  return m;
}

struct ModelAccess {
  template <typename Model, typename Out>
  static void parameters(Model& m, Out& out) {
    out.push_back({"embeddings.token", &m.token_embedding_});
    out.push_back({"embeddings.position", &m.position_embedding_});
    out.push_back({"embeddings.norm.gain", &m.embedding_norm_gain_});
    out.push_back({"embeddings.norm.bias", &m.embedding_norm_bias_});
    for (std::size_t l = 0; l < m.blocks_.size(); ++l) {
      auto& b = m.blocks_[l];
      const std::string p = "blocks." + std::to_string(l) + ".";
      out.push_back({p + "attention.query.weight", &b.query_weight});
      out.push_back({p + "attention.query.bias", &b.query_bias});
      out.push_back({p + "attention.key.weight", &b.key_weight});
      out.push_back({p + "attention.key.bias", &b.key_bias});
      out.push_back({p + "attention.value.weight", &b.value_weight});
      out.push_back({p + "attention.value.bias", &b.value_bias});
      out.push_back({p + "attention.output.weight", &b.output_weight});
      out.push_back({p + "attention.output.bias", &b.output_bias});
      out.push_back({p + "attention.norm.gain", &b.attention_norm_gain});
      out.push_back({p + "attention.norm.bias", &b.attention_norm_bias});
      out.push_back({p + "ffn.in.weight", &b.ffn_in_weight});
      out.push_back({p + "ffn.in.bias", &b.ffn_in_bias});
      out.push_back({p + "ffn.out.weight", &b.ffn_out_weight});
      out.push_back({p + "ffn.out.bias", &b.ffn_out_bias});
      out.push_back({p + "ffn.norm.gain", &b.ffn_norm_gain});
      out.push_back({p + "ffn.norm.bias", &b.ffn_norm_bias});
    }
    out.push_back({"classifier.weight", &m.classifier_weight_});
    out.push_back({"classifier.bias", &m.classifier_bias_});
  }
};

std::vector<NamedParameter> PunctuationModel::named_parameters() {
  std::vector<NamedParameter> out;
  ModelAccess::parameters(*this, out);
  return out;
}

std::vector<ConstNamedParameter> PunctuationModel::named_parameters() const {
  std::vector<ConstNamedParameter> out;
  ModelAccess::parameters(*this, out);
  return out;
}

std::size_t PunctuationModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : named_parameters()) n += p.tensor->size();
  return n;
}

struct ForwardPass {
  static ForwardResult run(PunctuationModel& m, Tape& tape, const Batch& batch, bool train_mode,
                           std::uint64_t seed) {
    const auto& cfg = m.config_;
    const std::size_t rows = batch.rows;
    const std::size_t cols = batch.cols;
    const std::size_t n = rows * cols;
    const std::size_t d = cfg.model_dim;
    if (cols > cfg.max_len) {
      throw ContractError("sequence length " + std::to_string(cols) + " exceeds max_len " +
                          std::to_string(cfg.max_len));
    }
    if (batch.token_ids.size() != n || batch.labels.size() != n || batch.mask.size() != n) {
      throw DimensionError("batch matrices do not match rows x cols");
    }
    if (n == 0) throw ContractError("empty batch");

    std::mt19937_64 rng(seed);
    const double p = train_mode ? cfg.dropout : 0.0;

    std::vector<int> positions(n);
    for (std::size_t i = 0; i < n; ++i) positions[i] = static_cast<int>(i % cols);

    Var tok = ops::embedding(tape.parameter(m.token_embedding_), batch.token_ids);
    Var pos = ops::embedding(tape.parameter(m.position_embedding_), positions);
    Var h = ops::layer_norm(ops::add(tok, pos), tape.parameter(m.embedding_norm_gain_),
                            tape.parameter(m.embedding_norm_bias_));
    h = ops::dropout(h, p, rng);

    auto linear = [&tape](const Var& x, Tensor& w, Tensor& b) {
      return ops::add_bias(ops::matmul(x, tape.parameter(w)), tape.parameter(b));
    };

    for (auto& blk : m.blocks_) {
      Var q = linear(h, blk.query_weight, blk.query_bias);
      Var k = linear(h, blk.key_weight, blk.key_bias);
      Var v = linear(h, blk.value_weight, blk.value_bias);
      Var ctx = ops::attention(q, k, v, batch.mask, rows, cols, cfg.n_heads);
      Var attn = ops::dropout(linear(ctx, blk.output_weight, blk.output_bias), p, rng);
      h = ops::layer_norm(ops::add(h, attn), tape.parameter(blk.attention_norm_gain),
                          tape.parameter(blk.attention_norm_bias));

      Var ff = ops::gelu(linear(h, blk.ffn_in_weight, blk.ffn_in_bias));
      ff = ops::dropout(linear(ff, blk.ffn_out_weight, blk.ffn_out_bias), p, rng);
      h = ops::layer_norm(ops::add(h, ff), tape.parameter(blk.ffn_norm_gain),
                          tape.parameter(blk.ffn_norm_bias));
    }

    Var logits = linear(h, m.classifier_weight_, m.classifier_bias_);
    return {ops::reshape(h, {rows, cols, d}), ops::reshape(logits, {rows, cols, kNumLabels})};
  }
};

ForwardResult encode_forward(PunctuationModel& model, Tape& tape, const Batch& batch, bool train_mode,
                             std::uint64_t seed) {
  return ForwardPass::run(model, tape, batch, train_mode, seed);
}

std::vector<int> predict_labels(const Tensor& logits, std::span<const std::uint8_t> mask) {
  const std::size_t classes = logits.cols();
  const std::size_t rows = logits.rows();
  if (mask.size() != rows) throw DimensionError("predict_labels: mask does not match logits");
  std::vector<int> out(rows, label_index(PunctLabel::kO));
  auto v = logits.values();
  for (std::size_t r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c) {
      if (v[r * classes + c] > v[r * classes + best]) best = c;
    }
    out[r] = static_cast<int>(best);
  }
  return out;
}

}  // namespace punctscl
