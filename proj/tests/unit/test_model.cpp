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

#include <gtest/gtest.h>

#include <cmath>

#include "punctscl/error.hpp"
#include "punctscl/losses.hpp"
#include "punctscl/model.hpp"
#include "punctscl/ops.hpp"

using namespace punctscl;

namespace {

EncoderConfig small_config() {
  EncoderConfig c;
  c.vocab_size = 100;
  c.model_dim = 16;
  c.n_layers = 2;
  c.n_heads = 2;
  c.ffn_dim = 32;
  c.max_len = 64;
  return c;
}

Batch make_batch(std::size_t rows, std::size_t cols, const std::vector<int>& ids, const std::vector<std::uint8_t>& mask) {
  Batch b;
  b.rows = rows;
  b.cols = cols;
  b.token_ids = ids;
  b.mask = mask;
  b.labels.assign(ids.size(), 0);
  for (std::size_t i = 0; i < ids.size(); ++i) b.labels[i] = mask[i] ? ids[i] % 4 : 0;
  return b;
}

std::vector<double> values_at(const Var& v, std::size_t width, const std::vector<std::size_t>& cells) {
  std::vector<double> out;
  for (auto c : cells)
    for (std::size_t k = 0; k < width; ++k) out.push_back(v.value().values()[c * width + k]);
  return out;
}

}  // namespace

TEST(EncoderConfig, Validation) {
  EXPECT_NO_THROW(small_config().validate());
  auto c = small_config();
  c.n_heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(PunctuationModel::init(c, 1), ConfigError);
  c = small_config();
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(PunctuationModel, ParameterCountClosedForm) {
  const auto c = small_config();
  const std::size_t d = 16, f = 32, v = 100, len = 64, layers = 2;
  const std::size_t embeddings = v * d + len * d + 2 * d;
  const std::size_t attention = 4 * (d * d + d) + 2 * d;
  const std::size_t ffn = (d * f + f) + (f * d + d) + 2 * d;
  const std::size_t classifier = d * 4 + 4;
  const std::size_t expected = embeddings + layers * (attention + ffn) + classifier;
  EXPECT_EQ(expected, 7172u);
  EXPECT_EQ(parameter_count(c), expected);
  EXPECT_EQ(PunctuationModel::init(c, 1).parameter_count(), expected);
}

TEST(PunctuationModel, InitIsDeterministicWithZeroBiasesAndUnitGains) {
  const auto a = PunctuationModel::init(small_config(), 5);
  const auto b = PunctuationModel::init(small_config(), 5);
  const auto c = PunctuationModel::init(small_config(), 6);
  const auto pa = a.named_parameters();
  const auto pb = b.named_parameters();
  const auto pc = c.named_parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool any_difference = false;
  double sum_sq = 0.0;
  std::size_t weight_count = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].name, pb[i].name);
    const auto va = pa[i].tensor->values();
    const auto vb = pb[i].tensor->values();
    EXPECT_TRUE(std::equal(va.begin(), va.end(), vb.begin())) << pa[i].name;
    const auto vc = pc[i].tensor->values();
    any_difference |= !std::equal(va.begin(), va.end(), vc.begin());
    const std::string& name = pa[i].name;
    if (name.ends_with("bias")) {
      for (double x : va) EXPECT_EQ(x, 0.0) << name;
    } else if (name.ends_with("gain")) {
      for (double x : va) EXPECT_EQ(x, 1.0) << name;
    } else {
      for (double x : va) sum_sq += x * x;
      weight_count += va.size();
    }
  }
  EXPECT_TRUE(any_difference);
  EXPECT_NEAR(std::sqrt(sum_sq / static_cast<double>(weight_count)), 0.02, 0.001);
}

TEST(PunctuationModel, SingleLinearHead) {
  const auto m = PunctuationModel::init(small_config(), 1);
  std::size_t classifier_tensors = 0;
  for (const auto& p : m.named_parameters()) {
    if (p.name.starts_with("classifier.")) ++classifier_tensors;
    if (p.name == "classifier.weight") EXPECT_EQ(p.tensor->shape(), (Shape{16, 4}));
  }
  EXPECT_EQ(classifier_tensors, 2u);
}

TEST(EncodeForward, Shapes) {
  auto m = PunctuationModel::init(small_config(), 2);
  Tape tape(false);
  const auto out = encode_forward(m, tape, make_batch(2, 4, {2, 3, 4, 5, 6, 7, 8, 9}, std::vector<std::uint8_t>(8, 1)),
                                  false, 0);
  EXPECT_EQ(out.representations.shape(), (Shape{2, 4, 16}));
  EXPECT_EQ(out.logits.shape(), (Shape{2, 4, 4}));
  EXPECT_TRUE(out.logits.value().all_finite());
}

TEST(EncodeForward, EvalModeIsPure) {
  auto m = PunctuationModel::init(small_config(), 3);
  const auto batch = make_batch(1, 5, {4, 8, 15, 16, 23}, std::vector<std::uint8_t>(5, 1));
  Tape t1(false), t2(false);
  const auto a = encode_forward(m, t1, batch, false, 1);
  const auto b = encode_forward(m, t2, batch, false, 99);
  const auto va = a.logits.value().values();
  const auto vb = b.logits.value().values();
  EXPECT_TRUE(std::equal(va.begin(), va.end(), vb.begin()));
}

TEST(EncodeForward, TrainModeDropoutFollowsSeed) {
  auto m = PunctuationModel::init(small_config(), 3);
  const auto batch = make_batch(1, 5, {4, 8, 15, 16, 23}, std::vector<std::uint8_t>(5, 1));
  Tape t1(false), t2(false), t3(false);
  const auto a = encode_forward(m, t1, batch, true, 7).logits.value();
  const auto b = encode_forward(m, t2, batch, true, 7).logits.value();
  const auto c = encode_forward(m, t3, batch, true, 8).logits.value();
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
}

TEST(EncodeForward, PaddingContentDoesNotLeak) {
  auto m = PunctuationModel::init(small_config(), 4);
  const std::vector<std::uint8_t> mask{1, 1, 1, 0, 0, 1, 1, 1, 1, 1};
  const auto clean = make_batch(2, 5, {5, 6, 7, 0, 0, 9, 10, 11, 12, 13}, mask);
  const auto garbage = make_batch(2, 5, {5, 6, 7, 42, 77, 9, 10, 11, 12, 13}, mask);
  Tape t1(false), t2(false);
  const auto a = encode_forward(m, t1, clean, false, 0);
  const auto b = encode_forward(m, t2, garbage, false, 0);
  const std::vector<std::size_t> real{0, 1, 2, 5, 6, 7, 8, 9};
  const auto la = values_at(a.logits, 4, real), lb = values_at(b.logits, 4, real);
  const auto ra = values_at(a.representations, 16, real), rb = values_at(b.representations, 16, real);
  for (std::size_t i = 0; i < la.size(); ++i) EXPECT_NEAR(la[i], lb[i], 1e-12);
  for (std::size_t i = 0; i < ra.size(); ++i) EXPECT_NEAR(ra[i], rb[i], 1e-12);
}

TEST(EncodeForward, PaddingWidthDoesNotLeak) {
  auto m = PunctuationModel::init(small_config(), 4);
  const auto narrow = make_batch(1, 3, {5, 6, 7}, {1, 1, 1});
  const auto wide = make_batch(1, 6, {5, 6, 7, 0, 0, 0}, {1, 1, 1, 0, 0, 0});
  Tape t1(false), t2(false);
  const auto a = encode_forward(m, t1, narrow, false, 0);
  const auto b = encode_forward(m, t2, wide, false, 0);
  const auto la = values_at(a.logits, 4, {0, 1, 2}), lb = values_at(b.logits, 4, {0, 1, 2});
  for (std::size_t i = 0; i < la.size(); ++i) EXPECT_NEAR(la[i], lb[i], 1e-12);
}

TEST(EncodeForward, TooLongSequenceIsRejected) {
  auto c = small_config();
  c.max_len = 4;
  auto m = PunctuationModel::init(c, 1);
  Tape tape(false);
  EXPECT_THROW(encode_forward(m, tape, make_batch(1, 5, {2, 2, 2, 2, 2}, {1, 1, 1, 1, 1}), false, 0), ContractError);
}

TEST(EncodeForward, EveryParameterReceivesAGradient) {
  auto m = PunctuationModel::init(small_config(), 6);
  for (auto& p : m.named_parameters()) {
    p.tensor->clear_grad();
  }
  const auto batch = make_batch(2, 4, {2, 3, 4, 5, 6, 7, 0, 0}, {1, 1, 1, 1, 1, 1, 0, 0});
  Tape tape;
  const auto out = encode_forward(m, tape, batch, true, 1);
  tape.backward(cross_entropy(out.logits, batch.labels, batch.mask));
  for (const auto& p : m.named_parameters()) {
    ASSERT_TRUE(p.tensor->has_grad()) << p.name;
    const auto g = p.tensor->grad();
    EXPECT_TRUE(std::any_of(g.begin(), g.end(), [](double x) { return x != 0.0; })) << p.name;
  }
}

TEST(EncodeForward, ParameterGradientsMatchDifferences) {
  auto c = small_config();
  c.model_dim = 8;
  c.ffn_dim = 8;
  c.n_layers = 1;
  c.vocab_size = 12;
  c.max_len = 6;
  auto m = PunctuationModel::init(c, 9);
  // Larger weights so every path carries signal.
  for (auto& p : m.named_parameters()) {
    for (auto& x : p.tensor->values()) x *= 20.0;
  }
  const auto batch = make_batch(2, 3, {2, 3, 4, 5, 6, 0}, {1, 1, 1, 1, 1, 0});
  auto loss_value = [&]() {
    Tape tape(false);
    const auto out = encode_forward(m, tape, batch, false, 0);
    return cross_entropy(out.logits, batch.labels, batch.mask).value().item();
  };
  for (auto& p : m.named_parameters()) p.tensor->zero_grad();
  {
    Tape tape;
    const auto out = encode_forward(m, tape, batch, false, 0);
    tape.backward(cross_entropy(out.logits, batch.labels, batch.mask));
  }
  const double h = 1e-6;
  for (auto& p : m.named_parameters()) {
    auto values = p.tensor->values();
    for (std::size_t i = 0; i < values.size(); i += 7) {
      const double original = values[i];
      values[i] = original + h;
      const double up = loss_value();
      values[i] = original - h;
      const double down = loss_value();
      values[i] = original;
      const double central = (up - down) / (2 * h);
      const double analytic = p.tensor->grad()[i];
      EXPECT_NEAR(analytic, central, 1e-8 + 1e-5 * std::fabs(central)) << p.name << "[" << i << "]";
    }
  }
}

TEST(PredictLabels, ArgmaxTiesAndShifts) {
  const Tensor logits = Tensor::matrix({{0, 0, 1, 0}, {0.5, 0.5, 0.5, 0.5}, {3, 1, 4, 1}, {9, 9, 9, 9}});
  const std::vector<std::uint8_t> mask{1, 1, 1, 0};
  EXPECT_EQ(predict_labels(logits, mask), (std::vector<int>{2, 0, 2, 0}));
  Tensor shifted = logits;
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) shifted.values()[r * 4 + c] += 17.25 * static_cast<double>(r + 1);
  EXPECT_EQ(predict_labels(shifted, mask), predict_labels(logits, mask));
  EXPECT_THROW(predict_labels(logits, std::vector<std::uint8_t>{1}), DimensionError);
}
