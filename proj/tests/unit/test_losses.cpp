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
#include <numeric>
#include <random>

#include "punctscl/error.hpp"
#include "punctscl/gradcheck.hpp"
#include "punctscl/losses.hpp"
#include "punctscl/oracle.hpp"
#include "punctscl/random.hpp"
#include "test_util.hpp"

using namespace punctscl;
using punctscl::testing::random_tensor;

namespace {

double value_of(const Var& v) { return v.value().item(); }

std::vector<std::uint8_t> all_true(std::size_t n) { return std::vector<std::uint8_t>(n, 1); }

std::vector<std::vector<double>> rows_of(const Tensor& t) {
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    out.emplace_back(t.values().begin() + static_cast<std::ptrdiff_t>(r * t.cols()),
                     t.values().begin() + static_cast<std::ptrdiff_t>((r + 1) * t.cols()));
  }
  return out;
}

std::vector<int> random_labels(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> labels(n);
  for (auto& l : labels) l = static_cast<int>(uniform_index(rng, 4));
  return labels;
}

Tensor rotate(const Tensor& x, const std::vector<double>& q) {
  const std::size_t d = x.cols();
  Tensor out(x.shape());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += x.values()[r * d + k] * q[k * d + j];
      out.values()[r * d + j] = acc;
    }
  return out;
}

// Random orthogonal matrix from Gram-Schmidt on a random square matrix.
std::vector<double> random_orthogonal(std::size_t d, std::uint64_t seed) {
  const Tensor m = random_tensor({d, d}, seed);
  std::vector<double> q(m.values().begin(), m.values().end());
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += q[i * d + k] * q[j * d + k];
      for (std::size_t k = 0; k < d; ++k) q[i * d + k] -= dot * q[j * d + k];
    }
    double norm = 0.0;
    for (std::size_t k = 0; k < d; ++k) norm += q[i * d + k] * q[i * d + k];
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < d; ++k) q[i * d + k] /= norm;
  }
  return q;
}

}  // namespace

TEST(EffectiveTemperature, Examples) {
  EXPECT_DOUBLE_EQ(effective_temperature(0.6, 0.07), 0.6 / 0.07);
  EXPECT_NEAR(effective_temperature(0.6, 0.07), 8.5714285714, 1e-9);
  EXPECT_EQ(effective_temperature(0.3, 0.3), 1.0);
  EXPECT_NEAR(effective_temperature(1.0, 0.07), 14.2857142857, 1e-9);
  EXPECT_THROW(effective_temperature(0.0, 0.07), ContractError);
  EXPECT_THROW(effective_temperature(0.6, -1.0), ContractError);
}

TEST(CrossEntropy, AllZeroLogitsGiveLogFour) {
  Tape tape;
  const auto labels = random_labels(6, 1);
  const double ce = value_of(cross_entropy(tape.constant(Tensor({2, 3, 4})), labels, all_true(6)));
  EXPECT_NEAR(ce, std::log(4.0), 1e-12);
}

TEST(CrossEntropy, SaturatedTrueClassGivesZero) {
  Tape tape;
  const std::vector<int> labels{0, 3, 1};
  Tensor logits({3, 4});
  for (std::size_t i = 0; i < 3; ++i) logits.values()[i * 4 + static_cast<std::size_t>(labels[i])] = 1000.0;
  EXPECT_NEAR(value_of(cross_entropy(tape.constant(logits), labels, all_true(3))), 0.0, 1e-300);
}

TEST(CrossEntropy, TwoTokenHandComputation) {
  Tape tape;
  const std::vector<int> labels{0, 1};
  const double ce = value_of(cross_entropy(tape.constant(Tensor::matrix({{1, 0, 0, 0}, {0, 2, 0, 0}})), labels,
                                           all_true(2)));
  const double first = std::log(std::exp(1.0) + 3.0) - 1.0;
  const double second = std::log(std::exp(2.0) + 3.0) - 2.0;
  EXPECT_NEAR(first, 0.743668, 1e-6);
  EXPECT_NEAR(second, 0.340753, 1e-6);
  EXPECT_NEAR(ce, 0.5 * (first + second), 1e-12);
  EXPECT_NEAR(ce, 0.542211, 1e-6);
}

TEST(CrossEntropy, IgnoresMaskedTokensAndNeedsOne) {
  Tape tape;
  Tensor logits = random_tensor({3, 4}, 2);
  const std::vector<int> labels{1, 2, 3};
  const std::vector<std::uint8_t> mask{1, 0, 1};
  const double a = value_of(cross_entropy(tape.constant(logits), labels, mask));
  logits.values()[5] = 999.0;
  EXPECT_EQ(value_of(cross_entropy(tape.constant(logits), labels, mask)), a);
  EXPECT_THROW(cross_entropy(tape.constant(logits), labels, std::vector<std::uint8_t>(3, 0)), ContractError);
}

TEST(CrossEntropy, MatchesOracleOnRandomBatches) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Tape tape;
    const Tensor logits = random_tensor({17, 4}, seed);
    const auto labels = random_labels(17, seed + 50);
    EXPECT_NEAR(value_of(cross_entropy(tape.constant(logits), labels, all_true(17))),
                oracle::cross_entropy_oracle(rows_of(logits), labels), 1e-12);
  }
}

TEST(Focal, GammaZeroEqualsCrossEntropy) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Tape tape;
    const auto x = tape.constant(random_tensor({9, 4}, seed));
    const auto labels = random_labels(9, seed + 7);
    EXPECT_NEAR(value_of(focal_loss(x, labels, all_true(9), 0.0)), value_of(cross_entropy(x, labels, all_true(9))),
                1e-12);
  }
}

TEST(Focal, HalfProbabilityGammaTwo) {
  Tape tape;
  // Logits giving p_t = 0.5 for class 0: e^a / (e^a + 3) = 0.5 -> a = ln 3.
  const auto x = tape.constant(Tensor::matrix({{std::log(3.0), 0, 0, 0}}));
  const double v = value_of(focal_loss(x, std::vector<int>{0}, all_true(1), 2.0));
  EXPECT_NEAR(v, 0.25 * std::log(2.0), 1e-12);
  EXPECT_NEAR(v, 0.173287, 1e-6);
}

TEST(Focal, VanishesFasterThanCrossEntropy) {
  double previous_ratio = 1.0;
  for (double margin : {2.0, 4.0, 6.0, 8.0}) {
    Tape tape;
    const auto x = tape.constant(Tensor::matrix({{margin, 0, 0, 0}}));
    const std::vector<int> label{0};
    const double ratio = value_of(focal_loss(x, label, all_true(1), 2.0)) / value_of(cross_entropy(x, label, all_true(1)));
    EXPECT_LT(ratio, previous_ratio);
    previous_ratio = ratio;
  }
}

TEST(TokenScl, ThreeTokenFixture) {
  Tape tape;
  const auto r = tape.constant(Tensor::matrix({{1, 0}, {0, 1}, {-1, 0}}));
  const std::vector<int> labels{1, 1, 2};
  const double v = value_of(token_scl(r, labels, all_true(3), 1.0));
  const double expected = std::log(1.0 + std::exp(-1.0)) + std::log(2.0);
  EXPECT_NEAR(expected, 1.006409, 1e-6);
  EXPECT_NEAR(v, expected, 1e-12);
}

TEST(TokenScl, DistinctLabelsGiveZero) {
  Tape tape;
  const auto r = tape.constant(random_tensor({4, 3}, 3));
  EXPECT_EQ(value_of(token_scl(r, std::vector<int>{0, 1, 2, 3}, all_true(4), 0.5)), 0.0);
  EXPECT_EQ(value_of(token_scl(tape.constant(random_tensor({1, 3}, 4)), std::vector<int>{2}, all_true(1), 0.5)),
            0.0);
}

TEST(TokenScl, Contracts) {
  Tape tape;
  const auto r = tape.constant(random_tensor({3, 2}, 5));
  const std::vector<int> labels{1, 1, 2};
  EXPECT_THROW(token_scl(r, labels, all_true(3), 0.0), ContractError);
  EXPECT_THROW(token_scl(r, labels, all_true(3), -1.0), ContractError);
  EXPECT_THROW(token_scl(r, labels, std::vector<std::uint8_t>(3, 0), 1.0), ContractError);
}

TEST(TokenScl, IdenticalVectorsClosedForm) {
  // With equal similarities every positive has softmax weight 1/(n-1).
  for (std::size_t n : {2u, 3u, 5u}) {
    Tape tape;
    const auto r = tape.constant(Tensor({n, 3}, 0.7));
    const double v = value_of(token_scl(r, std::vector<int>(n, 2), all_true(n), 1.0));
    EXPECT_NEAR(v, static_cast<double>(n) * std::log(static_cast<double>(n - 1)), 1e-12) << n;
  }
}

TEST(TokenScl, SeparationMonotonicity) {
  Tape tape;
  const std::vector<int> labels{1, 1, 2};
  const double base = value_of(token_scl(tape.constant(Tensor::matrix({{1, 0}, {0, 1}, {-1, 0}})), labels, all_true(3), 1.0));
  const double closer = value_of(token_scl(tape.constant(Tensor::matrix({{1, 0}, {0, 1}, {0, 1}})), labels, all_true(3), 1.0));
  EXPECT_GT(closer, base);
}

TEST(TokenScl, MatchesOracleAcrossTemperatureSweep) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 30; ++i) {
    const double tau = std::exp(std::log(0.05) + (std::log(20.0) - std::log(0.05)) * i / 29.0);
    const std::size_t n = 2 + uniform_index(rng, 40);
    const std::size_t d = 2 + uniform_index(rng, 15);
    const Tensor reps = random_tensor({n, d}, 500 + i);
    const auto labels = random_labels(n, 900 + i);
    Tape tape;
    EXPECT_NEAR(value_of(token_scl(tape.constant(reps), labels, all_true(n), tau)),
                oracle::scl_oracle(rows_of(reps), labels, tau), 1e-10)
        << "tau " << tau;
  }
}

TEST(TokenScl, MaskedPositionsAreExcluded) {
  const Tensor reps = random_tensor({6, 4}, 8);
  const std::vector<int> labels{0, 1, 0, 1, 2, 0};
  const std::vector<std::uint8_t> mask{1, 1, 0, 1, 1, 0};
  Tape tape;
  const double v = value_of(token_scl(tape.constant(reps), labels, mask, 0.8));
  std::vector<std::vector<double>> kept;
  std::vector<int> kept_labels;
  const auto all_rows = rows_of(reps);
  for (std::size_t i = 0; i < 6; ++i) {
    if (mask[i]) {
      kept.push_back(all_rows[i]);
      kept_labels.push_back(labels[i]);
    }
  }
  EXPECT_NEAR(v, oracle::scl_oracle(kept, kept_labels, 0.8), 1e-12);
}

TEST(TokenScl, RotationAndScaleInvariance) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::size_t n = 12, d = 5;
    const Tensor reps = random_tensor({n, d}, seed);
    const auto labels = random_labels(n, seed + 100);
    Tape tape;
    const double base = value_of(token_scl(tape.constant(reps), labels, all_true(n), 0.7));
    const double rotated =
        value_of(token_scl(tape.constant(rotate(reps, random_orthogonal(d, seed + 200))), labels, all_true(n), 0.7));
    Tensor scaled = reps;
    for (auto& v : scaled.values()) v *= 3.7;
    const double rescaled = value_of(token_scl(tape.constant(scaled), labels, all_true(n), 0.7));
    EXPECT_NEAR(rotated, base, 1e-9);
    EXPECT_NEAR(rescaled, base, 1e-9);
  }
}

TEST(TokenScl, PermutationInvarianceIsExact) {
  std::mt19937_64 rng(4);
  const std::size_t n = 30, d = 6;
  const Tensor reps = random_tensor({n, d}, 9);
  const auto labels = random_labels(n, 10);
  Tape tape;
  const double base = value_of(token_scl(tape.constant(reps), labels, all_true(n), 0.4));
  for (int round = 0; round < 5; ++round) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    shuffle_in_place(perm, rng);
    Tensor p({n, d});
    std::vector<int> pl(n);
    for (std::size_t i = 0; i < n; ++i) {
      pl[i] = labels[perm[i]];
      for (std::size_t c = 0; c < d; ++c) p.values()[i * d + c] = reps.values()[perm[i] * d + c];
    }
    EXPECT_EQ(value_of(token_scl(tape.constant(p), pl, all_true(n), 0.4)), base);
  }
}

TEST(TokenScl, AnchorCapKeepsNonOTokensAndIsSeeded) {
  const std::size_t n = 40, d = 4;
  const Tensor reps = random_tensor({n, d}, 11);
  std::vector<int> labels(n, 0);
  for (std::size_t i = 0; i < n; i += 5) labels[i] = 1 + static_cast<int>(i % 3);
  Tape tape;
  SclOptions uncapped;
  SclOptions capped;
  capped.o_anchor_cap = 100;
  EXPECT_EQ(value_of(token_scl(tape.constant(reps), labels, all_true(n), 0.5, uncapped)),
            value_of(token_scl(tape.constant(reps), labels, all_true(n), 0.5, capped)));

  capped.o_anchor_cap = 5;
  capped.seed = 3;
  const double a = value_of(token_scl(tape.constant(reps), labels, all_true(n), 0.5, capped));
  const double b = value_of(token_scl(tape.constant(reps), labels, all_true(n), 0.5, capped));
  EXPECT_EQ(a, b);

  // The capped loss equals the oracle on the non-O tokens plus some five O tokens.
  capped.o_anchor_cap = 0;
  std::vector<std::vector<double>> kept;
  std::vector<int> kept_labels;
  const auto all_rows = rows_of(reps);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0) {
      kept.push_back(all_rows[i]);
      kept_labels.push_back(labels[i]);
    }
  }
  EXPECT_NEAR(value_of(token_scl(tape.constant(reps), labels, all_true(n), 0.5, capped)),
              oracle::scl_oracle(kept, kept_labels, 0.5), 1e-12);
}

TEST(TokenScl, MeanOverAnchorsDividesByAnchorCount) {
  Tape tape;
  const auto r = tape.constant(Tensor::matrix({{1, 0}, {0, 1}, {-1, 0}}));
  const std::vector<int> labels{1, 1, 2};
  SclOptions mean;
  mean.mean_over_anchors = true;
  EXPECT_NEAR(value_of(token_scl(r, labels, all_true(3), 1.0, mean)),
              (std::log(1.0 + std::exp(-1.0)) + std::log(2.0)) / 2.0, 1e-12);
}

TEST(CombinedLoss, Endpoints) {
  const Tensor logits = random_tensor({10, 4}, 12);
  const Tensor reps = random_tensor({10, 6}, 13);
  const auto labels = random_labels(10, 14);
  const auto mask = all_true(10);
  Tape tape;
  const auto lx = tape.constant(logits);
  const auto rx = tape.constant(reps);

  LossConfig config;
  config.lambda = 0.0;
  const auto zero = combined_loss(lx, rx, labels, mask, config, 0);
  EXPECT_EQ(value_of(zero.total), value_of(cross_entropy(lx, labels, mask)));
  EXPECT_FALSE(zero.scl.has_value());

  config.lambda = 1.0;
  const auto one = combined_loss(lx, rx, labels, mask, config, 0);
  EXPECT_EQ(value_of(one.total),
            value_of(token_scl(rx, labels, mask, effective_temperature(config.temperature, config.base_temperature))));

  config.lambda = 0.1;
  const auto mixed = combined_loss(lx, rx, labels, mask, config, 0);
  ASSERT_TRUE(mixed.ce && mixed.scl);
  EXPECT_NEAR(value_of(mixed.total), 0.9 * *mixed.ce + 0.1 * *mixed.scl, 1e-12);

  config.kind = LossKind::kCrossEntropy;
  config.lambda = 0.5;
  EXPECT_EQ(value_of(combined_loss(lx, rx, labels, mask, config, 0).total), value_of(cross_entropy(lx, labels, mask)));
}

TEST(CombinedLoss, MixingArithmetic) {
  // ce = 1 and scl = 2 at lambda 0.1 give 1.1.
  EXPECT_NEAR((1.0 - 0.1) * 1.0 + 0.1 * 2.0, 1.1, 1e-15);
  Tape tape;
  const auto logits = tape.constant(Tensor({3, 4}));
  const auto reps = tape.constant(Tensor::matrix({{1, 0}, {0, 1}, {-1, 0}}));
  const std::vector<int> labels{1, 1, 2};
  LossConfig config;
  config.temperature = 1.0;
  config.base_temperature = 1.0;
  const auto parts = combined_loss(logits, reps, labels, all_true(3), config, 0);
  EXPECT_NEAR(value_of(parts.total), 0.9 * std::log(4.0) + 0.1 * (std::log(1.0 + std::exp(-1.0)) + std::log(2.0)),
              1e-12);
}

TEST(CombinedLoss, SupConScaledMode) {
  Tape tape;
  const auto logits = tape.constant(Tensor({3, 4}));
  const auto reps = tape.constant(Tensor::matrix({{1, 0}, {0, 1}, {-1, 0}}));
  const std::vector<int> labels{1, 1, 2};
  LossConfig config;
  config.lambda = 1.0;
  config.temperature = 0.6;
  config.base_temperature = 0.07;
  config.temperature_mode = TemperatureMode::kSupConScaled;
  const auto parts = combined_loss(logits, reps, labels, all_true(3), config, 0);
  const double expected = (0.6 / 0.07) * oracle::scl_oracle({{1, 0}, {0, 1}, {-1, 0}}, labels, 0.6);
  EXPECT_NEAR(value_of(parts.total), expected, 1e-12);
}

TEST(LossConfig, Validation) {
  LossConfig c;
  EXPECT_NO_THROW(c.validate());
  c.lambda = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.temperature = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.focal_gamma = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(parse_loss_kind("SCL_COMBINED"), LossKind::kSclCombined);
  EXPECT_FALSE(parse_loss_kind("scl").has_value());
  EXPECT_EQ(loss_kind_name(LossKind::kFocal), "FOCAL");
}

// Gradient examples on small random instances. The six-token contrastive case
// uses tau = 1; see the oracle suite for the full size and temperature range.
TEST(LossGradients, SmallInstances) {
  const Tensor logits = random_tensor({4, 4}, 21);
  const Tensor reps = random_tensor({6, 3}, 22);
  const auto labels4 = random_labels(4, 23);
  const std::vector<int> labels6{0, 1, 0, 2, 1, 0};
  EXPECT_LE(gradient_check([&](Tape&, const Var& v) { return cross_entropy(v, labels4, all_true(4)); }, logits),
            1e-5);
  EXPECT_LE(gradient_check([&](Tape&, const Var& v) { return focal_loss(v, labels4, all_true(4), 2.0); }, logits),
            1e-5);
  EXPECT_LE(gradient_check([&](Tape&, const Var& v) { return token_scl(v, labels6, all_true(6), 1.0); }, reps),
            1e-5);

  const std::vector<int> labels_combined{0, 1, 1, 0};
  const Tensor reps4 = random_tensor({4, 3}, 24);
  LossConfig config;
  config.temperature = 1.0;
  config.base_temperature = 1.0;
  const TapeFunction combined = [&](Tape&, std::span<const Var> in) {
    return combined_loss(in[0], in[1], labels_combined, all_true(4), config, 0).total;
  };
  const std::vector<Tensor> inputs{logits, reps4};
  EXPECT_LE(gradient_check(combined, inputs).max_relative_error, 1e-5);
}

// Deviation relative to the finite-difference resolution of the loss value:
// a correct gradient stays within a few units, a wrong one is far off.
TEST(LossGradients, ContrastiveGradientWithinDifferenceResolution) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::size_t n = 40;
    const Tensor reps = random_tensor({n, 8}, seed);
    const auto labels = random_labels(n, seed + 1);
    for (double tau : {0.25, 1.0, 8.5714}) {
      const TapeFunction f = [&](Tape&, std::span<const Var> in) { return token_scl(in[0], labels, all_true(n), tau); };
      const auto r = gradient_check(f, std::span<const Tensor>(&reps, 1));
      EXPECT_LE(r.max_absolute_error, 16.0 * r.resolution) << "seed " << seed << " tau " << tau;
    }
  }
}
