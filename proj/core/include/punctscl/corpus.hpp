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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace punctscl {

/// Per-token target. The numeric value is the class index used everywhere.
enum class PunctLabel : std::uint8_t { kO = 0, kComma = 1, kPeriod = 2, kQuestion = 3 };

inline constexpr std::size_t kNumLabels = 4;
inline constexpr std::array<std::string_view, kNumLabels> kLabelNames{"O", "COMMA", "PERIOD",
                                                                      "QUESTION"};

std::string_view label_name(PunctLabel label);
std::optional<PunctLabel> parse_label(std::string_view name);
constexpr int label_index(PunctLabel label) { return static_cast<int>(label); }

struct LabeledToken {
  std::string text;
  PunctLabel label = PunctLabel::kO;

  friend bool operator==(const LabeledToken&, const LabeledToken&) = default;
};

/// Which trailing punctuation character produces which label. Characters not
/// in the map are stripped without affecting the label.
struct PunctuationMap {
  std::map<char, PunctLabel> marks{{',', PunctLabel::kComma}, {';', PunctLabel::kComma},
                                   {':', PunctLabel::kComma}, {'.', PunctLabel::kPeriod},
                                   {'!', PunctLabel::kPeriod}, {'?', PunctLabel::kQuestion}};
};

/// True for ASCII punctuation; these never survive into token text.
bool is_punctuation(char c);

/// Whitespace-tokenizes raw text, lowercases ASCII letters, strips punctuation
/// and labels each word by the first mapped mark in its trailing punctuation.
/// A free-standing mark (e.g. "you ?") labels the preceding word if that word
/// is still O.
std::vector<LabeledToken> parse_plain_text(std::string_view text,
                                           const PunctuationMap& map = PunctuationMap{});

/// Parses "token<TAB>LABEL" lines. Blank lines are skipped; tokens are
/// lowercased. Throws ParseError with the 1-based line number.
std::vector<LabeledToken> parse_tsv(std::string_view text);

/// Canonical TSV: one "token\tLABEL\n" line per token.
std::string to_tsv(std::span<const LabeledToken> tokens);

/// Token to id map with PAD = 0 and UNK = 1.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary();

  /// Ids ordered by descending count, ties broken lexicographically. Tokens
  /// seen fewer than `min_frequency` times map to UNK.
  static Vocabulary build(std::span<const LabeledToken> tokens, std::size_t min_frequency = 1);
  /// Restores a vocabulary from its id-ordered token list (PAD and UNK first).
  static Vocabulary from_tokens(std::vector<std::string> id_to_token, std::size_t min_frequency);

  int id(std::string_view token) const;
  const std::string& token(int id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return id_to_token_.size(); }
  std::size_t min_frequency() const noexcept { return min_frequency_; }
  const std::vector<std::string>& tokens() const noexcept { return id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
  std::size_t min_frequency_ = 1;
};

/// One contiguous chunk of the token stream.
struct Window {
  std::vector<int> token_ids;
  std::vector<int> labels;
};

/// Padded training unit. Matrices are row-major [rows x cols]; padded cells
/// have token id PAD, label O and mask 0.
struct Batch {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<int> token_ids;
  std::vector<int> labels;
  std::vector<std::uint8_t> mask;

  std::size_t real_tokens() const;
};

std::vector<Window> make_windows(std::span<const LabeledToken> tokens, const Vocabulary& vocab,
                                 std::size_t max_len);
/// Groups consecutive windows into batches, padding each batch to its
/// longest window.
std::vector<Batch> group_windows(std::span<const Window> windows, std::size_t batch_size);
/// Recovers the windows (real tokens only) held by a batch.
std::vector<Window> split_batch(const Batch& batch);

std::vector<Batch> batchify(std::span<const LabeledToken> tokens, const Vocabulary& vocab,
                            std::size_t max_len, std::size_t batch_size,
                            std::optional<std::uint64_t> shuffle_seed = std::nullopt);

struct LabelHistogram {
  std::array<std::size_t, kNumLabels> counts{};

  std::size_t total() const;
  std::array<double, kNumLabels> ratios() const;
};

LabelHistogram label_histogram(std::span<const LabeledToken> tokens);
/// {"O":n,"COMMA":n,"PERIOD":n,"QUESTION":n,"ratios":[...]}
std::string histogram_to_json(const LabelHistogram& histogram);

using LabelRatios = std::array<double, kNumLabels>;
/// Label shares of the IWSLT training split: 85.7 / 7.53 / 6.3 / 0.47 percent.
inline constexpr LabelRatios kIwsltRatios{0.857, 0.0753, 0.063, 0.0047};

/// Learnable synthetic corpus. Labels are drawn i.i.d. from `ratios`; word
/// forms then depend on the labels: sentences ending in QUESTION mostly open
/// with an interrogative, clauses after a COMMA often open with a
/// conjunction, and sentence-final words lean towards a small closing
/// vocabulary. Deterministic in (n_tokens, seed, ratios).
std::vector<LabeledToken> generate_synthetic_corpus(std::size_t n_tokens, std::uint64_t seed,
                                                    const LabelRatios& ratios = kIwsltRatios);

}  // namespace punctscl
