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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "punctscl/corpus.hpp"
#include "punctscl/model.hpp"
#include "punctscl/tensor.hpp"

namespace punctscl {

/// counts[true][predicted] over scored (mask-true) tokens.
struct ConfusionCounts {
  std::array<std::array<std::size_t, kNumLabels>, kNumLabels> counts{};

  std::size_t total() const;
  ConfusionCounts& operator+=(const ConfusionCounts& other);
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          std::span<const std::uint8_t> mask);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Set when precision or recall had a zero denominator and was reported as 0.
  bool undefined = false;
};

/// The three scored classes, in report order.
inline constexpr std::array<PunctLabel, 3> kScoredLabels{PunctLabel::kComma, PunctLabel::kPeriod,
                                                         PunctLabel::kQuestion};

/// P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2TP/(2TP+FP+FN). O is not a valid class here.
Prf per_class_prf(const ConfusionCounts& cm, PunctLabel label);

enum class Averaging { kMicro, kMacro };

/// Micro: TP/FP/FN summed over COMMA, PERIOD, QUESTION before dividing.
/// Macro: unweighted mean of the per-class P, R and F1.
Prf overall_prf(const ConfusionCounts& cm, Averaging averaging = Averaging::kMicro);

struct SeparationStats {
  double intra = 0.0;  ///< mean cosine over same-label pairs
  double inter = 0.0;  ///< mean cosine over different-label pairs
  double score = 0.0;  ///< intra - inter
  std::size_t intra_pairs = 0;
  std::size_t inter_pairs = 0;
};

/// Cosine-similarity cluster diagnostics over representation rows. When a
/// side has more than `max_pairs` pairs, `max_pairs` pairs are drawn
/// uniformly (with replacement) using `seed`; otherwise all pairs are used.
SeparationStats embedding_separation(const Tensor& representations, std::span<const int> labels,
                                     std::size_t max_pairs = 10000, std::uint64_t seed = 0);

struct EvaluationReport {
  std::array<Prf, 3> per_class{};  ///< COMMA, PERIOD, QUESTION
  Prf overall{};
  Averaging averaging = Averaging::kMicro;
  ConfusionCounts confusion{};
  std::optional<SeparationStats> separation;
};

EvaluationReport make_report(const ConfusionCounts& cm, Averaging averaging = Averaging::kMicro);

struct EvaluateOptions {
  bool diagnose = false;
  std::size_t max_pairs = 10000;
  std::uint64_t seed = 0;
  Averaging averaging = Averaging::kMicro;
};

/// Eval-mode forward over every batch; batches are processed in parallel and
/// merged in input order.
EvaluationReport evaluate(PunctuationModel& model, std::span<const Batch> batches,
                          const EvaluateOptions& options = {});

}  // namespace punctscl
