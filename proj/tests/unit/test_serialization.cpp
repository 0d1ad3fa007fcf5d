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

#include <filesystem>
#include <json.hpp>

#include "punctscl/checkpoint.hpp"
#include "punctscl/error.hpp"
#include "punctscl/serialization.hpp"

using namespace punctscl;

TEST(ConfigJson, RoundTripsAndKeepsDefaults) {
  EncoderConfig e;
  e.vocab_size = 321;
  e.model_dim = 32;
  EXPECT_EQ(parse_encoder_config(to_json(e)), e);
  EXPECT_EQ(parse_encoder_config("{}"), EncoderConfig{});

  LossConfig l;
  l.kind = LossKind::kFocal;
  l.o_anchor_cap = 64;
  l.temperature_mode = TemperatureMode::kSupConScaled;
  const auto back = parse_loss_config(to_json(l));
  EXPECT_EQ(back.kind, LossKind::kFocal);
  EXPECT_EQ(back.o_anchor_cap, 64u);
  EXPECT_EQ(back.temperature_mode, TemperatureMode::kSupConScaled);
  EXPECT_FALSE(parse_loss_config(R"({"o_anchor_cap": null})").o_anchor_cap.has_value());

  TrainConfig t;
  t.epochs = 3;
  t.beta2 = 0.98;
  t.seed = 12345678901234ull;
  const auto tb = parse_train_config(to_json(t));
  EXPECT_EQ(tb.epochs, 3u);
  EXPECT_EQ(tb.beta2, 0.98);
  EXPECT_EQ(tb.seed, 12345678901234ull);
}

TEST(ConfigJson, RejectsUnknownKeysAndBadTypes) {
  EXPECT_THROW(parse_encoder_config(R"({"model_dims": 8})"), ConfigError);
  EXPECT_THROW(parse_encoder_config(R"({"model_dim": "8"})"), ConfigError);
  EXPECT_THROW(parse_encoder_config(R"({"model_dim": -8})"), ConfigError);
  EXPECT_THROW(parse_loss_config(R"({"kind": "MSE"})"), ConfigError);
  EXPECT_THROW(parse_loss_config(R"({"lambda": true})"), ConfigError);
  EXPECT_THROW(parse_train_config(R"({"betas": [0.9]})"), ConfigError);
  EXPECT_THROW(parse_train_config("[1, 2]"), ConfigError);
  EXPECT_THROW(parse_train_config("{"), ConfigError);
}

TEST(RunRecordJson, RoundTrip) {
  RunRecord r;
  r.seed = 7;
  r.model.vocab_size = 50;
  r.train.loss.kind = LossKind::kCrossEntropy;
  r.epochs.push_back({1, 10, 0.5, 0.5, std::nullopt, 0.25});
  r.epochs.push_back({2, 10, 0.4, 0.4, std::nullopt, 0.3});
  r.best_epoch = 2;
  r.best_valid_f1 = 0.3;
  const std::string text = to_json(r);
  const auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j["loss_kind"], "CE");
  EXPECT_TRUE(j["epochs"][0]["train_scl"].is_null());
  const auto back = parse_run_record(text);
  EXPECT_EQ(to_json(back), text);
  EXPECT_EQ(back.model, r.model);
}

TEST(EvaluationReportJson, TableLayout) {
  ConfusionCounts cm;
  cm.counts[1][1] = 3;
  cm.counts[0][1] = 1;
  cm.counts[1][0] = 2;
  auto report = make_report(cm);
  report.separation = SeparationStats{0.5, 0.1, 0.4, 10, 20};
  const auto j = nlohmann::json::parse(to_json(report));
  EXPECT_DOUBLE_EQ(j["COMMA"]["P"].get<double>(), 0.75);
  EXPECT_DOUBLE_EQ(j["COMMA"]["R"].get<double>(), 0.6);
  EXPECT_TRUE(j["PERIOD"]["undefined"].get<bool>());
  EXPECT_TRUE(j.contains("OVERALL"));
  EXPECT_EQ(j["confusion"][1][0], 2);
  EXPECT_DOUBLE_EQ(j["separation"]["score"].get<double>(), 0.4);
  EXPECT_FALSE(nlohmann::json::parse(to_json(make_report(cm))).contains("separation"));
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto tokens = generate_synthetic_corpus(300, 3, kIwsltRatios);
  const auto vocab = Vocabulary::build(tokens, 1);
  EncoderConfig c;
  c.vocab_size = vocab.size();
  c.model_dim = 8;
  c.n_heads = 2;
  c.ffn_dim = 8;
  c.n_layers = 1;
  c.max_len = 16;
  const auto model = PunctuationModel::init(c, 4);
  const auto path = std::filesystem::temp_directory_path() / "punctscl_checkpoint_test.bin";
  save_checkpoint(path, model, vocab);
  const auto loaded = load_checkpoint(path);
  std::filesystem::remove(path);
  EXPECT_EQ(loaded.model.config(), c);
  EXPECT_EQ(loaded.vocabulary.tokens(), vocab.tokens());
  const auto a = model.named_parameters();
  const auto b = loaded.model.named_parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].name, b[i].name);
    EXPECT_TRUE(std::equal(a[i].tensor->values().begin(), a[i].tensor->values().end(), b[i].tensor->values().begin()));
  }
}

TEST(Checkpoint, LayoutAndCorruption) {
  const auto vocab = Vocabulary::build(generate_synthetic_corpus(100, 1, kIwsltRatios), 1);
  EncoderConfig c;
  c.vocab_size = vocab.size();
  c.model_dim = 4;
  c.n_heads = 1;
  c.ffn_dim = 4;
  c.n_layers = 1;
  c.max_len = 4;
  const auto model = PunctuationModel::init(c, 2);
  const std::string blob = serialize_checkpoint(model, vocab);
  EXPECT_EQ(blob.substr(0, 8), "PSCLCKPT");
  EXPECT_EQ(static_cast<unsigned char>(blob[8]), 1u);
  std::uint64_t header_len = 0;
  for (int i = 0; i < 8; ++i) header_len |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob[12 + i])) << (8 * i);
  EXPECT_EQ(blob.size(), 20 + header_len + 8 * model.parameter_count());

  EXPECT_THROW(deserialize_checkpoint("nonsense"), ParseError);
  EXPECT_THROW(deserialize_checkpoint(blob.substr(0, blob.size() - 8)), ParseError);
  std::string wrong_version = blob;
  wrong_version[8] = 2;
  EXPECT_THROW(deserialize_checkpoint(wrong_version), ParseError);
}
