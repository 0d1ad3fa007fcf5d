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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "punctscl/autograd.hpp"

/// Deliberately naive reference implementations used to cross-check the
/// production losses. Nothing here calls into losses.cpp.
namespace punctscl::oracle {

/// Triple loop over anchors, positives and contrast tokens on plain vectors.
double scl_oracle(const std::vector<std::vector<double>>& rows, std::span<const int> labels, double tau);

/// Mean of -log(exp(x_y) / sum_c exp(x_c)), computed without max-shifting.
double cross_entropy_oracle(const std::vector<std::vector<double>>& logits, std::span<const int> labels);

/// Mean of -(1 - p_t)^gamma log p_t.
double focal_oracle(const std::vector<std::vector<double>>& logits, std::span<const int> labels,
                    double gamma);

/// Calls `visit` with every assignment of `classes` labels to `n` tokens.
void enumerate_label_assignments(std::size_t n, int classes,
                                 const std::function<void(std::span<const int>)>& visit);

struct OracleReport {
  std::string name;
  double max_abs_deviation = 0.0;
  double max_rel_deviation = 0.0;
  double threshold = 0.0;
  bool relative = false;  ///< threshold applies to the relative deviation
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> failing_trial_seeds;
  /// Gradient checks only: max over trials of the absolute deviation divided
  /// by the finite-difference resolution of that trial. Values of order 1
  /// mean the deviation is at the rounding floor of the loss value.
  double max_resolution_ratio = 0.0;

  bool passed() const { return failing_trial_seeds.empty(); }
};

using LossUnderTest =
    std::function<Var(const Var& input, std::span<const int> labels, std::span<const std::uint8_t> mask,
                      double tau)>;
using PairLossUnderTest =
    std::function<Var(const Var& logits, const Var& representations, std::span<const int> labels,
                      std::span<const std::uint8_t> mask, double tau)>;

/// The functions the suite exercises. Defaults bind the production losses;
/// tests swap in faulty versions to confirm the suite catches them.
struct OracleTargets {
  LossUnderTest token_scl;
  LossUnderTest cross_entropy;
  LossUnderTest focal;  ///< gamma = 2
  PairLossUnderTest combined;  ///< SCL_COMBINED, lambda = 0.1

  static OracleTargets production();
};

struct OracleSuiteOptions {
  std::vector<double> taus{0.25, 1.0, 8.5714};
  std::size_t min_tokens = 2;
  std::size_t max_tokens = 64;
  std::size_t min_dim = 2;
  std::size_t max_dim = 16;
  double loss_threshold = 1e-10;
  double gradient_threshold = 1e-5;
  double fd_step = 1e-6;
};

/// Randomized comparison of production losses against the oracles and of
/// analytic gradients against central differences. Throws ContractError
/// for trials == 0. Deterministic in `seed`.
std::vector<OracleReport> run_oracle_suite(std::uint64_t seed, std::size_t trials,
                                           const OracleTargets& targets = OracleTargets::production(),
                                           const OracleSuiteOptions& options = {});

bool all_passed(std::span<const OracleReport> reports);

}  // namespace punctscl::oracle
