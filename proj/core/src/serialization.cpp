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

#include "punctscl/serialization.hpp"

#include <cmath>

#include "json_io.hpp"

namespace punctscl {
namespace json_io {

StrictObject::StrictObject(const Json& j, std::string context) : j_(&j), context_(std::move(context)) {
  if (!j.is_object()) throw ConfigError(context_ + ": expected a JSON object");
}

bool StrictObject::has(const char* key) const { return j_->contains(key); }

const Json& StrictObject::child(const char* key) {
  if (!has(key)) throw ConfigError(context_ + "." + key + ": missing");
  seen_.insert(key);
  return (*j_)[key];
}

void StrictObject::read(const char* key, double& out) {
  if (!has(key)) return;
  const Json& v = child(key);
  if (!v.is_number()) fail(key, "expected a number");
  out = v.get<double>();
}

void StrictObject::read(const char* key, bool& out) {
  if (!has(key)) return;
  const Json& v = child(key);
  if (!v.is_boolean()) fail(key, "expected true or false");
  out = v.get<bool>();
}

void StrictObject::read(const char* key, std::string& out) {
  if (!has(key)) return;
  const Json& v = child(key);
  if (!v.is_string()) fail(key, "expected a string");
  out = v.get<std::string>();
}

void StrictObject::finish() const {
  for (auto it = j_->begin(); it != j_->end(); ++it) {
    if (!seen_.contains(it.key())) throw ConfigError(context_ + ": unknown key '" + it.key() + "'");
  }
}

void StrictObject::fail(const std::string& key, const std::string& what) const {
  throw ConfigError(context_ + "." + key + ": " + what);
}

Json encoder_config(const EncoderConfig& c) {
  Json j;
  j["vocab_size"] = c.vocab_size;
  j["model_dim"] = c.model_dim;
  j["n_layers"] = c.n_layers;
  j["n_heads"] = c.n_heads;
  j["ffn_dim"] = c.ffn_dim;
  j["dropout"] = c.dropout;
  j["max_len"] = c.max_len;
  return j;
}

void read_encoder_config(const Json& j, EncoderConfig& out, const std::string& context) {
  StrictObject o(j, context);
  o.read("vocab_size", out.vocab_size);
  o.read("model_dim", out.model_dim);
  o.read("n_layers", out.n_layers);
  o.read("n_heads", out.n_heads);
  o.read("ffn_dim", out.ffn_dim);
  o.read("dropout", out.dropout);
  o.read("max_len", out.max_len);
  o.finish();
}

Json loss_config(const LossConfig& c) {
  Json j;
  j["kind"] = std::string(loss_kind_name(c.kind));
  j["lambda"] = c.lambda;
  j["temperature"] = c.temperature;
  j["base_temperature"] = c.base_temperature;
  j["focal_gamma"] = c.focal_gamma;
  j["o_anchor_cap"] = c.o_anchor_cap ? Json(*c.o_anchor_cap) : Json(nullptr);
  j["temperature_mode"] = std::string(temperature_mode_name(c.temperature_mode));
  j["mean_over_anchors"] = c.mean_over_anchors;
  return j;
}

void read_loss_config(const Json& j, LossConfig& out, const std::string& context) {
  StrictObject o(j, context);
  if (o.has("kind")) {
    std::string name;
    o.read("kind", name);
    const auto kind = parse_loss_kind(name);
    if (!kind) o.fail("kind", "unknown loss kind '" + name + "'");
    out.kind = *kind;
  }
  o.read("lambda", out.lambda);
  o.read("temperature", out.temperature);
  o.read("base_temperature", out.base_temperature);
  o.read("focal_gamma", out.focal_gamma);
  if (o.has("o_anchor_cap")) {
    if (o.child("o_anchor_cap").is_null()) {
      out.o_anchor_cap.reset();
    } else {
      std::size_t cap = 0;
      o.read("o_anchor_cap", cap);
      out.o_anchor_cap = cap;
    }
  }
  if (o.has("temperature_mode")) {
    std::string name;
    o.read("temperature_mode", name);
    const auto mode = parse_temperature_mode(name);
    if (!mode) o.fail("temperature_mode", "unknown mode '" + name + "'");
    out.temperature_mode = *mode;
  }
  o.read("mean_over_anchors", out.mean_over_anchors);
  o.finish();
}

Json train_config(const TrainConfig& c) {
  Json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["betas"] = Json::array({c.beta1, c.beta2});
  j["eps"] = c.eps;
  j["weight_decay"] = c.weight_decay;
  j["seed"] = c.seed;
  j["max_len"] = c.max_len;
  return j;
}

void read_train_config(const Json& j, TrainConfig& out, const std::string& context) {
  StrictObject o(j, context);
  o.read("epochs", out.epochs);
  o.read("batch_size", out.batch_size);
  o.read("learning_rate", out.learning_rate);
  if (o.has("betas")) {
    const Json& b = o.child("betas");
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number()) {
      o.fail("betas", "expected an array of two numbers");
    }
    out.beta1 = b[0].get<double>();
    out.beta2 = b[1].get<double>();
  }
  o.read("eps", out.eps);
  o.read("weight_decay", out.weight_decay);
  o.read("seed", out.seed);
  o.read("max_len", out.max_len);
  o.finish();
}

Json parse(std::string_view text, const std::string& context) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(context + ": invalid JSON (" + e.what() + ")");
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace json_io

using json_io::Json;

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json prf(const Prf& p) {
  Json j;
  j["P"] = p.precision;
  j["R"] = p.recall;
  j["F1"] = p.f1;
  j["undefined"] = p.undefined;
  return j;
}

}  // namespace

std::string to_json(const EncoderConfig& config) { return json_io::dump(json_io::encoder_config(config)); }

EncoderConfig parse_encoder_config(std::string_view json) {
  EncoderConfig c;
  json_io::read_encoder_config(json_io::parse(json, "model"), c, "model");
  return c;
}

std::string to_json(const LossConfig& config) { return json_io::dump(json_io::loss_config(config)); }

LossConfig parse_loss_config(std::string_view json) {
  LossConfig c;
  json_io::read_loss_config(json_io::parse(json, "loss"), c, "loss");
  return c;
}

std::string to_json(const TrainConfig& config) { return json_io::dump(json_io::train_config(config)); }

TrainConfig parse_train_config(std::string_view json) {
  TrainConfig c;
  json_io::read_train_config(json_io::parse(json, "train"), c, "train");
  return c;
}

std::string to_json(const RunRecord& record) {
  Json j;
  j["seed"] = record.seed;
  j["loss_kind"] = std::string(loss_kind_name(record.train.loss.kind));
  j["best_epoch"] = record.best_epoch;
  j["best_valid_f1"] = record.best_valid_f1;
  Json epochs = Json::array();
  for (const auto& e : record.epochs) {
    Json r;
    r["epoch"] = e.epoch;
    r["steps"] = e.steps;
    r["train_loss"] = e.train_loss;
    r["train_ce"] = optional_number(e.train_ce);
    r["train_scl"] = optional_number(e.train_scl);
    r["valid_f1"] = e.valid_f1;
    epochs.push_back(std::move(r));
  }
  j["epochs"] = std::move(epochs);
  Json config;
  config["model"] = json_io::encoder_config(record.model);
  config["train"] = json_io::train_config(record.train);
  config["loss"] = json_io::loss_config(record.train.loss);
  j["config"] = std::move(config);
  return json_io::dump(j);
}

RunRecord parse_run_record(std::string_view json) {
  const Json j = json_io::parse(json, "run_record");
  json_io::StrictObject o(j, "run_record");
  RunRecord r;
  o.read("seed", r.seed);
  std::string kind;
  o.read("loss_kind", kind);
  o.read("best_epoch", r.best_epoch);
  o.read("best_valid_f1", r.best_valid_f1);
  const Json& epochs = o.child("epochs");
  if (!epochs.is_array()) o.fail("epochs", "expected an array");
  for (const auto& e : epochs) {
    json_io::StrictObject eo(e, "run_record.epochs[]");
    EpochRecord rec;
    eo.read("epoch", rec.epoch);
    eo.read("steps", rec.steps);
    eo.read("train_loss", rec.train_loss);
    for (auto [key, slot] : {std::pair{"train_ce", &rec.train_ce}, std::pair{"train_scl", &rec.train_scl}}) {
      if (!eo.has(key) || eo.child(key).is_null()) continue;
      double v = 0.0;
      eo.read(key, v);
      *slot = v;
    }
    eo.read("valid_f1", rec.valid_f1);
    eo.finish();
    r.epochs.push_back(rec);
  }
  json_io::StrictObject config(o.child("config"), "run_record.config");
  json_io::read_encoder_config(config.child("model"), r.model, "run_record.config.model");
  json_io::read_train_config(config.child("train"), r.train, "run_record.config.train");
  json_io::read_loss_config(config.child("loss"), r.train.loss, "run_record.config.loss");
  config.finish();
  o.finish();
  if (kind != loss_kind_name(r.train.loss.kind)) {
    throw ConfigError("run_record.loss_kind does not match run_record.config.loss.kind");
  }
  return r;
}

std::string to_json(const EvaluationReport& report) {
  Json j;
  for (std::size_t i = 0; i < kScoredLabels.size(); ++i) {
    j[std::string(label_name(kScoredLabels[i]))] = prf(report.per_class[i]);
  }
  j["OVERALL"] = prf(report.overall);
  j["averaging"] = report.averaging == Averaging::kMicro ? "micro" : "macro";
  Json counts = Json::array();
  for (const auto& row : report.confusion.counts) counts.push_back(row);
  j["confusion"] = std::move(counts);
  j["confusion_labels"] = kLabelNames;
  if (report.separation) {
    const auto& s = *report.separation;
    j["separation"] = {{"intra", s.intra},
                       {"inter", s.inter},
                       {"score", s.score},
                       {"intra_pairs", s.intra_pairs},
                       {"inter_pairs", s.inter_pairs}};
  }
  return json_io::dump(j);
}

std::string to_json(std::span<const oracle::OracleReport> reports, std::uint64_t seed, std::size_t trials) {
  Json j;
  j["seed"] = seed;
  j["trials"] = trials;
  j["passed"] = oracle::all_passed(reports);
  Json checks = Json::array();
  for (const auto& r : reports) {
    Json c;
    c["name"] = r.name;
    c["max_abs_deviation"] = r.max_abs_deviation;
    c["max_rel_deviation"] = r.max_rel_deviation;
    c["threshold"] = r.threshold;
    c["threshold_kind"] = r.relative ? "relative" : "absolute";
    c["trials"] = r.trials;
    c["passed"] = r.passed();
    c["failing_trial_seeds"] = r.failing_trial_seeds;
    if (r.relative) c["max_resolution_ratio"] = r.max_resolution_ratio;
    checks.push_back(std::move(c));
  }
  j["checks"] = std::move(checks);
  return json_io::dump(j);
}

}  // namespace punctscl
