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

#include "punctscl/evaluation.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "punctscl/error.hpp"
#include "punctscl/exact_sum.hpp"
#include "punctscl/parallel.hpp"
#include "punctscl/random.hpp"

namespace punctscl {

std::size_t ConfusionCounts::total() const {
  std::size_t n = 0;
  for (const auto& row : counts) {
    for (auto c : row) n += c;
  }
  return n;
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
  for (std::size_t t = 0; t < kNumLabels; ++t) {
    for (std::size_t p = 0; p < kNumLabels; ++p) counts[t][p] += other.counts[t][p];
  }
  return *this;
}

ConfusionCounts confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          std::span<const std::uint8_t> mask) {
  if (y_true.size() != y_pred.size() || y_true.size() != mask.size()) {
    throw ContractError("confusion: y_true, y_pred and mask must have equal sizes");
  }
  ConfusionCounts cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (!mask[i]) continue;
    if (y_true[i] < 0 || y_true[i] >= static_cast<int>(kNumLabels) || y_pred[i] < 0 ||
        y_pred[i] >= static_cast<int>(kNumLabels)) {
      throw ContractError("confusion: label outside 0..3");
    }
    ++cm.counts[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])];
  }
  return cm;
}

namespace {

struct Tally {
  std::size_t tp = 0, fp = 0, fn = 0;
};

Tally tally(const ConfusionCounts& cm, std::size_t c) {
  Tally t;
  t.tp = cm.counts[c][c];
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    if (k == c) continue;
    t.fp += cm.counts[k][c];
    t.fn += cm.counts[c][k];
  }
  return t;
}

Prf prf_from(const Tally& t) {
  Prf out;
  const auto tp = static_cast<double>(t.tp);
  if (t.tp + t.fp > 0) {
    out.precision = tp / static_cast<double>(t.tp + t.fp);
  } else {
    out.undefined = true;
  }
  if (t.tp + t.fn > 0) {
    out.recall = tp / static_cast<double>(t.tp + t.fn);
  } else {
    out.undefined = true;
  }
  // Equal to the harmonic mean of P and R, but a single rational division.
  if (t.tp > 0) out.f1 = 2.0 * tp / static_cast<double>(2 * t.tp + t.fp + t.fn);
  return out;
}

}  // namespace

Prf per_class_prf(const ConfusionCounts& cm, PunctLabel label) {
  if (label == PunctLabel::kO) throw ContractError("per_class_prf: O is not a scored class");
  return prf_from(tally(cm, static_cast<std::size_t>(label)));
}

Prf overall_prf(const ConfusionCounts& cm, Averaging averaging) {
  if (averaging == Averaging::kMicro) {
    Tally sum;
    for (auto label : kScoredLabels) {
      const auto t = tally(cm, static_cast<std::size_t>(label));
      sum.tp += t.tp;
      sum.fp += t.fp;
      sum.fn += t.fn;
    }
    return prf_from(sum);
  }
  Prf out;
  for (auto label : kScoredLabels) {
    const auto p = per_class_prf(cm, label);
    out.precision += p.precision / 3.0;
    out.recall += p.recall / 3.0;
    out.f1 += p.f1 / 3.0;
    out.undefined = out.undefined || p.undefined;
  }
  return out;
}

namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Index drawn with probability proportional to weights[i].
std::size_t weighted_index(std::span<const double> cumulative, std::mt19937_64& rng) {
  const double u = uniform01(rng) * cumulative.back();
  for (std::size_t i = 0; i < cumulative.size(); ++i) {
    if (u < cumulative[i]) return i;
  }
  return cumulative.size() - 1;
}

}  // namespace

SeparationStats embedding_separation(const Tensor& representations, std::span<const int> labels,
                                     std::size_t max_pairs, std::uint64_t seed) {
  const std::size_t n = representations.rows();
  const std::size_t d = representations.cols();
  if (labels.size() != n) throw DimensionError("embedding_separation: one label per row required");
  if (max_pairs == 0) throw ContractError("embedding_separation: max_pairs must be positive");

  std::vector<std::vector<std::size_t>> members(kNumLabels);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= static_cast<int>(kNumLabels)) {
      throw ContractError("embedding_separation: label outside 0..3");
    }
    members[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::vector<std::size_t> classes;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    if (!members[c].empty()) classes.push_back(c);
  }
  if (n < 2 || classes.size() < 2) {
    throw ContractError("embedding_separation needs at least two tokens in at least two classes");
  }

  auto values = representations.values();
  auto row = [&](std::size_t i) { return values.subspan(i * d, d); };
  std::mt19937_64 rng(seed);

  // Same-label pairs.
  std::vector<double> intra;
  std::vector<double> intra_cumulative(kNumLabels);
  double intra_total = 0.0;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    const double m = static_cast<double>(members[c].size());
    intra_total += m * (m - 1.0) / 2.0;
    intra_cumulative[c] = intra_total;
  }
  if (intra_total == 0.0) throw ContractError("embedding_separation: no class has two members");
  if (intra_total <= static_cast<double>(max_pairs)) {
    for (const auto& group : members) {
      for (std::size_t a = 0; a < group.size(); ++a) {
        for (std::size_t b = a + 1; b < group.size(); ++b) intra.push_back(cosine(row(group[a]), row(group[b])));
      }
    }
  } else {
    for (std::size_t s = 0; s < max_pairs; ++s) {
      const auto& group = members[weighted_index(intra_cumulative, rng)];
      const std::size_t a = uniform_index(rng, group.size());
      std::size_t b = uniform_index(rng, group.size() - 1);
      if (b >= a) ++b;
      intra.push_back(cosine(row(group[a]), row(group[b])));
    }
  }

  // Different-label pairs.
  std::vector<std::pair<std::size_t, std::size_t>> class_pairs;
  std::vector<double> inter_cumulative;
  double inter_total = 0.0;
  for (std::size_t a = 0; a < kNumLabels; ++a) {
    for (std::size_t b = a + 1; b < kNumLabels; ++b) {
      inter_total += static_cast<double>(members[a].size()) * static_cast<double>(members[b].size());
      class_pairs.emplace_back(a, b);
      inter_cumulative.push_back(inter_total);
    }
  }
  std::vector<double> inter;
  if (inter_total <= static_cast<double>(max_pairs)) {
    for (auto [a, b] : class_pairs) {
      for (auto i : members[a]) {
        for (auto j : members[b]) inter.push_back(cosine(row(i), row(j)));
      }
    }
  } else {
    for (std::size_t s = 0; s < max_pairs; ++s) {
      const auto [a, b] = class_pairs[weighted_index(inter_cumulative, rng)];
      const auto i = members[a][uniform_index(rng, members[a].size())];
      const auto j = members[b][uniform_index(rng, members[b].size())];
      inter.push_back(cosine(row(i), row(j)));
    }
  }

  SeparationStats out;
  out.intra_pairs = intra.size();
  out.inter_pairs = inter.size();
  out.intra = order_invariant_sum(intra) / static_cast<double>(intra.size());
  out.inter = order_invariant_sum(inter) / static_cast<double>(inter.size());
  out.score = out.intra - out.inter;
  return out;
}

EvaluationReport make_report(const ConfusionCounts& cm, Averaging averaging) {
  EvaluationReport r;
  for (std::size_t i = 0; i < kScoredLabels.size(); ++i) r.per_class[i] = per_class_prf(cm, kScoredLabels[i]);
  r.overall = overall_prf(cm, averaging);
  r.averaging = averaging;
  r.confusion = cm;
  return r;
}

EvaluationReport evaluate(PunctuationModel& model, std::span<const Batch> batches,
                          const EvaluateOptions& options) {
  struct BatchResult {
    ConfusionCounts cm;
    std::vector<double> reps;
    std::vector<int> labels;
  };
  std::vector<BatchResult> results(batches.size());
  const std::size_t d = model.config().model_dim;

  parallel_for(batches.size(), [&](std::size_t i) {
    const Batch& batch = batches[i];
    Tape tape(/*grad_enabled=*/false);
    const auto fwd = encode_forward(model, tape, batch, /*train_mode=*/false, 0);
    const auto predicted = predict_labels(fwd.logits.value(), batch.mask);
    auto& out = results[i];
    out.cm = confusion(batch.labels, predicted, batch.mask);
    if (options.diagnose) {
      auto r = fwd.representations.value().values();
      for (std::size_t t = 0; t < batch.mask.size(); ++t) {
        if (!batch.mask[t]) continue;
        out.reps.insert(out.reps.end(), r.begin() + static_cast<std::ptrdiff_t>(t * d),
                        r.begin() + static_cast<std::ptrdiff_t>((t + 1) * d));
        out.labels.push_back(batch.labels[t]);
      }
    }
  });

  ConfusionCounts cm;
  for (const auto& r : results) cm += r.cm;
  EvaluationReport report = make_report(cm, options.averaging);
  if (options.diagnose) {
    std::vector<double> reps;
    std::vector<int> labels;
    for (auto& r : results) {
      reps.insert(reps.end(), r.reps.begin(), r.reps.end());
      labels.insert(labels.end(), r.labels.begin(), r.labels.end());
    }
    const Tensor all({labels.size(), d}, std::move(reps));
    report.separation = embedding_separation(all, labels, options.max_pairs, options.seed);
  }
  return report;
}

}  // namespace punctscl
