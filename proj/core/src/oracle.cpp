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

#include "punctscl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "punctscl/error.hpp"
#include "punctscl/gradcheck.hpp"
#include "punctscl/losses.hpp"
#include "punctscl/random.hpp"

namespace punctscl::oracle {

double scl_oracle(const std::vector<std::vector<double>>& rows, std::span<const int> labels, double tau) {
  if (!(tau > 0.0)) throw ContractError("scl_oracle: tau must be positive");
  if (rows.size() != labels.size()) throw DimensionError("scl_oracle: one label per row required");
  const std::size_t n = rows.size();

  std::vector<std::vector<double>> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (double v : rows[i]) sq += v * v;
    const double norm = std::max(std::sqrt(sq), 1e-12);
    for (double v : rows[i]) z[i].push_back(v / norm);
  }
  auto sim = [&](std::size_t a, std::size_t b) {
    double dot = 0.0;
    for (std::size_t c = 0; c < z[a].size(); ++c) dot += z[a][c] * z[b][c];
    return std::exp(dot / tau);
  };

  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t positives = 0;
    for (std::size_t p = 0; p < n; ++p) {
      if (p != i && labels[p] == labels[i]) ++positives;
    }
    if (positives == 0) continue;
    double inner = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      if (p == i || labels[p] != labels[i]) continue;
      double denominator = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (k != i) denominator += sim(i, k);
      }
      inner += std::log(sim(i, p) / denominator);
    }
    loss += -inner / static_cast<double>(positives);
  }
  return loss;
}

double cross_entropy_oracle(const std::vector<std::vector<double>>& logits, std::span<const int> labels) {
  if (logits.empty() || logits.size() != labels.size()) throw DimensionError("cross_entropy_oracle: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    double z = 0.0;
    for (double v : logits[i]) z += std::exp(v);
    total += -std::log(std::exp(logits[i][static_cast<std::size_t>(labels[i])]) / z);
  }
  return total / static_cast<double>(logits.size());
}

double focal_oracle(const std::vector<std::vector<double>>& logits, std::span<const int> labels, double gamma) {
  if (logits.empty() || logits.size() != labels.size()) throw DimensionError("focal_oracle: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    double z = 0.0;
    for (double v : logits[i]) z += std::exp(v);
    const double pt = std::exp(logits[i][static_cast<std::size_t>(labels[i])]) / z;
    total += -std::pow(1.0 - pt, gamma) * std::log(pt);
  }
  return total / static_cast<double>(logits.size());
}

void enumerate_label_assignments(std::size_t n, int classes,
                                 const std::function<void(std::span<const int>)>& visit) {
  if (classes < 1) throw ContractError("enumerate_label_assignments: need at least one class");
  std::vector<int> labels(n, 0);
  while (true) {
    visit(labels);
    std::size_t pos = 0;
    while (pos < n && ++labels[pos] == classes) labels[pos++] = 0;
    if (pos == n) return;
  }
}

OracleTargets OracleTargets::production() {
  OracleTargets t;
  t.token_scl = [](const Var& r, std::span<const int> labels, std::span<const std::uint8_t> mask, double tau) {
    return punctscl::token_scl(r, labels, mask, tau);
  };
  t.cross_entropy = [](const Var& x, std::span<const int> labels, std::span<const std::uint8_t> mask, double) {
    return punctscl::cross_entropy(x, labels, mask);
  };
  t.focal = [](const Var& x, std::span<const int> labels, std::span<const std::uint8_t> mask, double) {
    return punctscl::focal_loss(x, labels, mask, 2.0);
  };
  t.combined = [](const Var& logits, const Var& r, std::span<const int> labels,
                  std::span<const std::uint8_t> mask, double tau) {
    LossConfig config;
    config.kind = LossKind::kSclCombined;
    config.lambda = 0.1;
    config.temperature = tau;
    config.base_temperature = 1.0;
    return punctscl::combined_loss(logits, r, labels, mask, config, 0).total;
  };
  return t;
}

namespace {

struct Trial {
  std::uint64_t seed = 0;
  double tau = 1.0;
  std::size_t dim = 0;
  std::vector<int> labels;          // every position, masked ones included
  std::vector<std::uint8_t> mask;
  Tensor reps;                      // [positions x dim]
  Tensor logits;                    // [positions x 4]

  std::vector<std::vector<double>> rows(const Tensor& t) const {
    std::vector<std::vector<double>> out;
    const std::size_t c = t.cols();
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) out.emplace_back(t.values().begin() + static_cast<std::ptrdiff_t>(i * c),
                                    t.values().begin() + static_cast<std::ptrdiff_t>((i + 1) * c));
    }
    return out;
  }
  std::vector<int> real_labels() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) out.push_back(labels[i]);
    }
    return out;
  }
};

Trial make_trial(std::uint64_t seed, const OracleSuiteOptions& o) {
  std::mt19937_64 rng(seed);
  Trial t;
  t.seed = seed;
  const std::size_t n = o.min_tokens + uniform_index(rng, o.max_tokens - o.min_tokens + 1);
  t.dim = o.min_dim + uniform_index(rng, o.max_dim - o.min_dim + 1);
  t.tau = o.taus[uniform_index(rng, o.taus.size())];
  const std::size_t padding = uniform_index(rng, 4);
  const std::size_t positions = n + padding;
  t.mask.assign(positions, 1);
  for (std::size_t p = 0; p < padding; ++p) {
    std::size_t at = uniform_index(rng, positions);
    while (!t.mask[at]) at = (at + 1) % positions;
    t.mask[at] = 0;
  }
  t.labels.resize(positions);
  for (auto& l : t.labels) l = static_cast<int>(uniform_index(rng, 4));
  t.reps = Tensor({positions, t.dim});
  for (auto& v : t.reps.values()) v = -2.0 + 4.0 * uniform01(rng);
  t.logits = Tensor({positions, 4});
  for (auto& v : t.logits.values()) v = -2.0 + 4.0 * uniform01(rng);
  return t;
}

double evaluate_loss(const LossUnderTest& f, const Tensor& input, const Trial& t) {
  Tape tape(false);
  return f(tape.constant(input), t.labels, t.mask, t.tau).value().item();
}

class Recorder {
 public:
  Recorder(std::string name, double threshold, bool relative, std::uint64_t seed)
      : report_{std::move(name), 0.0, 0.0, threshold, relative, 0, seed, {}, 0.0} {}

  void value(double got, double expected, std::uint64_t trial_seed) {
    const double abs_dev = std::fabs(got - expected);
    const double rel_dev = abs_dev / std::max(std::fabs(expected), 1e-300);
    note(abs_dev, rel_dev, trial_seed);
  }
  void note(double abs_dev, double rel_dev, std::uint64_t trial_seed) {
    report_.max_abs_deviation = std::max(report_.max_abs_deviation, abs_dev);
    report_.max_rel_deviation = std::max(report_.max_rel_deviation, rel_dev);
    const double measured = report_.relative ? rel_dev : abs_dev;
    if (!(measured <= report_.threshold)) fail(trial_seed);
  }
  void note_resolution(double ratio) {
    report_.max_resolution_ratio = std::max(report_.max_resolution_ratio, ratio);
  }
  void fail(std::uint64_t trial_seed) {
    auto& seeds = report_.failing_trial_seeds;
    if (seeds.empty() || seeds.back() != trial_seed) seeds.push_back(trial_seed);
  }
  void end_trial() { ++report_.trials; }
  OracleReport take() { return std::move(report_); }

 private:
  OracleReport report_;
};

}  // namespace

std::vector<OracleReport> run_oracle_suite(std::uint64_t seed, std::size_t trials, const OracleTargets& targets,
                                           const OracleSuiteOptions& options) {
  if (trials == 0) throw ContractError("run_oracle_suite: trials must be at least 1");
  if (options.taus.empty()) throw ContractError("run_oracle_suite: no temperatures given");
  if (options.min_tokens < 1 || options.max_tokens < options.min_tokens || options.min_dim < 1 ||
      options.max_dim < options.min_dim) {
    throw ContractError("run_oracle_suite: invalid size ranges");
  }

  Recorder scl_value("token_scl_vs_oracle", options.loss_threshold, false, seed);
  Recorder scl_exhaustive("token_scl_exhaustive_labels", options.loss_threshold, false, seed);
  Recorder ce_value("cross_entropy_vs_oracle", options.loss_threshold, false, seed);
  Recorder focal_value("focal_loss_vs_oracle", options.loss_threshold, false, seed);
  Recorder scl_grad("token_scl_gradient", options.gradient_threshold, true, seed);
  Recorder ce_grad("cross_entropy_gradient", options.gradient_threshold, true, seed);
  Recorder focal_grad("focal_loss_gradient", options.gradient_threshold, true, seed);
  Recorder combined_grad("combined_loss_gradient", options.gradient_threshold, true, seed);

  auto check_gradient = [&](Recorder& rec, const TapeFunction& f, std::vector<Tensor> inputs,
                            std::uint64_t trial_seed) {
    try {
      const auto r = gradient_check(f, inputs, options.fd_step);
      rec.note(r.max_absolute_error, r.max_relative_error, trial_seed);
      rec.note_resolution(r.max_absolute_error / r.resolution);
    } catch (const NumericError&) {
      rec.fail(trial_seed);
    }
  };
  auto single = [](const LossUnderTest& loss, const Trial& t) -> TapeFunction {
    return [&loss, &t](Tape&, std::span<const Var> in) { return loss(in[0], t.labels, t.mask, t.tau); };
  };

  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::uint64_t trial_seed = derive_seed(seed, trial);
    const Trial t = make_trial(trial_seed, options);
    const auto real_labels = t.real_labels();
    const auto rep_rows = t.rows(t.reps);
    const auto logit_rows = t.rows(t.logits);

    scl_value.value(evaluate_loss(targets.token_scl, t.reps, t), scl_oracle(rep_rows, real_labels, t.tau), trial_seed);
    ce_value.value(evaluate_loss(targets.cross_entropy, t.logits, t), cross_entropy_oracle(logit_rows, real_labels),
                   trial_seed);
    focal_value.value(evaluate_loss(targets.focal, t.logits, t), focal_oracle(logit_rows, real_labels, 2.0),
                      trial_seed);

    // Every labelling of a few tokens at fixed representations.
    {
      const std::size_t small = 2 + trial % 3;
      const Tensor reps({small, t.dim},
                        std::vector<double>(t.reps.values().begin(),
                                            t.reps.values().begin() + static_cast<std::ptrdiff_t>(small * t.dim)));
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < small; ++i) {
        rows.emplace_back(reps.values().begin() + static_cast<std::ptrdiff_t>(i * t.dim),
                          reps.values().begin() + static_cast<std::ptrdiff_t>((i + 1) * t.dim));
      }
      const std::vector<std::uint8_t> all(small, 1);
      enumerate_label_assignments(small, 4, [&](std::span<const int> labels) {
        Tape tape(false);
        const double got = targets.token_scl(tape.constant(reps), labels, all, t.tau).value().item();
        scl_exhaustive.value(got, scl_oracle(rows, labels, t.tau), trial_seed);
      });
    }

    check_gradient(scl_grad, single(targets.token_scl, t), {t.reps}, trial_seed);
    check_gradient(ce_grad, single(targets.cross_entropy, t), {t.logits}, trial_seed);
    check_gradient(focal_grad, single(targets.focal, t), {t.logits}, trial_seed);
    check_gradient(
        combined_grad,
        [&](Tape&, std::span<const Var> in) { return targets.combined(in[0], in[1], t.labels, t.mask, t.tau); },
        {t.logits, t.reps}, trial_seed);

    for (auto* r : {&scl_value, &scl_exhaustive, &ce_value, &focal_value, &scl_grad, &ce_grad, &focal_grad,
                    &combined_grad}) {
      r->end_trial();
    }
  }

  std::vector<OracleReport> reports;
  for (auto* r : {&scl_value, &scl_exhaustive, &ce_value, &focal_value, &scl_grad, &ce_grad, &focal_grad,
                  &combined_grad}) {
    reports.push_back(r->take());
  }
  return reports;
}

bool all_passed(std::span<const OracleReport> reports) {
  return std::all_of(reports.begin(), reports.end(), [](const OracleReport& r) { return r.passed(); });
}

}  // namespace punctscl::oracle
