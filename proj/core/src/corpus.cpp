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

#include "punctscl/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <random>

#include "punctscl/error.hpp"
#include "punctscl/random.hpp"

namespace punctscl {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = ascii_lower(c);
  return out;
}

// Multi-byte UTF-8 punctuation that is stripped like its ASCII counterparts.
constexpr std::array<std::string_view, 10> kUtf8Punctuation{
    "“", "”", "‘", "’", "—", "–", "…", "«", "»",
    "¿"};

std::size_t utf8_punctuation_length(std::string_view s, std::size_t pos) {
  for (auto p : kUtf8Punctuation) {
    if (s.substr(pos, p.size()) == p) return p.size();
  }
  return 0;
}

}  // namespace

std::string_view label_name(PunctLabel label) { return kLabelNames[static_cast<std::size_t>(label)]; }

std::optional<PunctLabel> parse_label(std::string_view name) {
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    if (kLabelNames[i] == name) return static_cast<PunctLabel>(i);
  }
  return std::nullopt;
}

bool is_punctuation(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u) != 0;
}

std::vector<LabeledToken> parse_plain_text(std::string_view text, const PunctuationMap& map) {
  std::vector<LabeledToken> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && is_space(text[pos])) ++pos;
    const std::size_t begin = pos;
    while (pos < text.size() && !is_space(text[pos])) ++pos;
    const std::string_view raw = text.substr(begin, pos - begin);
    if (raw.empty()) continue;

    std::string word;
    bool has_label = false;
    PunctLabel label = PunctLabel::kO;
    for (std::size_t i = 0; i < raw.size();) {
      if (const auto n = utf8_punctuation_length(raw, i); n > 0) {
        i += n;
        continue;
      }
      const char c = raw[i++];
      if (is_punctuation(c)) {
        // Only marks after the last word character decide the label.
        if (!has_label) {
          if (auto it = map.marks.find(c); it != map.marks.end()) {
            label = it->second;
            has_label = true;
          }
        }
      } else {
        word.push_back(ascii_lower(c));
        has_label = false;
        label = PunctLabel::kO;
      }
    }

    if (!word.empty()) {
      out.push_back({std::move(word), label});
    } else if (has_label && !out.empty() && out.back().label == PunctLabel::kO) {
      out.back().label = label;
    }
  }
  return out;
}

std::vector<LabeledToken> parse_tsv(std::string_view text) {
  std::vector<LabeledToken> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (std::all_of(line.begin(), line.end(), is_space)) continue;

    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError(line_no, "expected token<TAB>label");
    const auto token = line.substr(0, tab);
    const auto label_text = line.substr(tab + 1);
    if (token.empty()) throw ParseError(line_no, "empty token");
    if (std::any_of(token.begin(), token.end(), [](char c) { return is_punctuation(c) || is_space(c); })) {
      throw ParseError(line_no, "token contains punctuation or whitespace: '" + std::string(token) + "'");
    }
    const auto label = parse_label(label_text);
    if (!label) throw ParseError(line_no, "unknown label '" + std::string(label_text) + "'");
    out.push_back({lowercase(token), *label});
  }
  return out;
}

std::string to_tsv(std::span<const LabeledToken> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    out += t.text;
    out += '\t';
    out += label_name(t.label);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() : id_to_token_{"<pad>", "<unk>"} {}

Vocabulary Vocabulary::build(std::span<const LabeledToken> tokens, std::size_t min_frequency) {
  if (min_frequency < 1) throw ContractError("min_frequency must be at least 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& t : tokens) ++counts[t.text];

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, count] : counts) {
    if (count >= min_frequency) kept.emplace_back(token, count);
  }
  // Map iteration is lexicographic, so a stable sort keeps that order on ties.
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> id_to_token{"<pad>", "<unk>"};
  for (auto& [token, count] : kept) id_to_token.push_back(token);
  return from_tokens(std::move(id_to_token), min_frequency);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> id_to_token, std::size_t min_frequency) {
  if (id_to_token.size() < 2) throw ContractError("vocabulary needs the PAD and UNK entries");
  Vocabulary v;
  v.id_to_token_ = std::move(id_to_token);
  v.min_frequency_ = min_frequency;
  for (std::size_t i = 2; i < v.id_to_token_.size(); ++i) {
    if (!v.token_to_id_.emplace(v.id_to_token_[i], static_cast<int>(i)).second) {
      throw ContractError("duplicate vocabulary entry '" + v.id_to_token_[i] + "'");
    }
  }
  return v;
}

int Vocabulary::id(std::string_view token) const {
  const auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnk : it->second;
}

// ---------------------------------------------------------------------------
// Batching

std::size_t Batch::real_tokens() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

std::vector<Window> make_windows(std::span<const LabeledToken> tokens, const Vocabulary& vocab,
                                 std::size_t max_len) {
  if (max_len < 1) throw ContractError("max_len must be at least 1");
  std::vector<Window> windows;
  for (std::size_t start = 0; start < tokens.size(); start += max_len) {
    const std::size_t end = std::min(tokens.size(), start + max_len);
    Window w;
    w.token_ids.reserve(end - start);
    w.labels.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) {
      w.token_ids.push_back(vocab.id(tokens[i].text));
      w.labels.push_back(label_index(tokens[i].label));
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

std::vector<Batch> group_windows(std::span<const Window> windows, std::size_t batch_size) {
  if (batch_size < 1) throw ContractError("batch_size must be at least 1");
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < windows.size(); start += batch_size) {
    const std::size_t end = std::min(windows.size(), start + batch_size);
    Batch b;
    b.rows = end - start;
    for (std::size_t i = start; i < end; ++i) b.cols = std::max(b.cols, windows[i].token_ids.size());
    b.token_ids.assign(b.rows * b.cols, Vocabulary::kPad);
    b.labels.assign(b.rows * b.cols, label_index(PunctLabel::kO));
    b.mask.assign(b.rows * b.cols, 0);
    for (std::size_t r = 0; r < b.rows; ++r) {
      const auto& w = windows[start + r];
      for (std::size_t c = 0; c < w.token_ids.size(); ++c) {
        b.token_ids[r * b.cols + c] = w.token_ids[c];
        b.labels[r * b.cols + c] = w.labels[c];
        b.mask[r * b.cols + c] = 1;
      }
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

std::vector<Window> split_batch(const Batch& batch) {
  std::vector<Window> windows(batch.rows);
  for (std::size_t r = 0; r < batch.rows; ++r) {
    for (std::size_t c = 0; c < batch.cols; ++c) {
      const std::size_t i = r * batch.cols + c;
      if (!batch.mask[i]) continue;
      windows[r].token_ids.push_back(batch.token_ids[i]);
      windows[r].labels.push_back(batch.labels[i]);
    }
  }
  return windows;
}

std::vector<Batch> batchify(std::span<const LabeledToken> tokens, const Vocabulary& vocab,
                            std::size_t max_len, std::size_t batch_size,
                            std::optional<std::uint64_t> shuffle_seed) {
  if (batch_size < 1) throw ContractError("batch_size must be at least 1");
  auto windows = make_windows(tokens, vocab, max_len);
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    shuffle_in_place(windows, rng);
  }
  return group_windows(windows, batch_size);
}

// ---------------------------------------------------------------------------
// Histogram

std::size_t LabelHistogram::total() const {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

std::array<double, kNumLabels> LabelHistogram::ratios() const {
  std::array<double, kNumLabels> r{};
  const std::size_t n = total();
  if (n == 0) return r;
  for (std::size_t i = 0; i < kNumLabels; ++i) r[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
  return r;
}

LabelHistogram label_histogram(std::span<const LabeledToken> tokens) {
  LabelHistogram h;
  for (const auto& t : tokens) ++h.counts[static_cast<std::size_t>(t.label)];
  return h;
}

std::string histogram_to_json(const LabelHistogram& histogram) {
  nlohmann::ordered_json j;
  for (std::size_t i = 0; i < kNumLabels; ++i) j[std::string(kLabelNames[i])] = histogram.counts[i];
  const auto r = histogram.ratios();
  j["ratios"] = std::vector<double>(r.begin(), r.end());
  return j.dump();
}

// ---------------------------------------------------------------------------
// Synthetic corpus

namespace {

constexpr std::array<std::string_view, 12> kInterrogatives{
    "what", "why", "how", "where", "when", "who", "which", "do", "does", "did", "can", "is"};
constexpr std::array<std::string_view, 12> kDeclarativeOpeners{
    "i", "we", "the", "it", "this", "they", "you", "she", "he", "there", "our", "my"};
constexpr std::array<std::string_view, 8> kConjunctions{
    "and", "but", "which", "because", "so", "while", "although", "or"};
constexpr std::array<std::string_view, 10> kCommaProne{
    "however", "well", "yes", "first", "okay", "actually", "instead", "meanwhile", "also", "then"};
constexpr std::array<std::string_view, 12> kClosers{
    "today", "now", "again", "too", "here", "there", "anymore", "together", "forever", "tonight",
    "everywhere", "before"};

// Ordered roughly by frequency; sampled with Zipf weights.
constexpr auto kGeneralWords = std::to_array<std::string_view>({
    "people", "think", "world", "know", "time", "really", "year", "make", "going", "things",
    "want", "see", "get", "way", "like", "just", "work", "life", "look", "change",
    "idea", "thing", "new", "good", "little", "lot", "right", "great", "take", "said",
    "first", "come", "need", "find", "different", "problem", "day", "actually", "kind", "made",
    "years", "start", "help", "water", "story", "give", "design", "back", "many", "system",
    "mean", "country", "question", "point", "brain", "children", "small", "city", "data", "human",
    "school", "place", "energy", "money", "learn", "build", "number", "talk", "family", "power",
    "information", "called", "bit", "important", "music", "technology", "planet", "example",
    "whole", "found", "along", "long", "big", "science", "light", "show", "river", "car",
    "women", "men", "space", "percent", "answer", "ocean", "reason", "history", "food", "body",
    "future", "picture", "language", "health", "patients", "cancer", "cells", "computer", "building",
    "africa", "india", "china", "america", "europe", "community", "government", "market", "social",
    "moment", "experience", "research", "nature", "animal", "species", "forest", "climate",
    "oil", "bridge", "street", "house", "room", "table", "phone", "video", "image", "map",
    "teacher", "student", "doctor", "friend", "mother", "father", "child", "girl", "boy", "game",
    "model", "machine", "robot", "network", "signal", "pattern", "memory", "dream", "art", "book"});

template <std::size_t N>
std::string_view pick_word(const std::array<std::string_view, N>& words, std::mt19937_64& rng) {
  return words[uniform_index(rng, N)];
}

class ZipfSampler {
 public:
  explicit ZipfSampler(std::size_t n) : cumulative_(n) {
    double acc = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      acc += 1.0 / static_cast<double>(r + 1);
      cumulative_[r] = acc;
    }
  }
  std::size_t operator()(std::mt19937_64& rng) const {
    const double u = uniform01(rng) * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

}  // namespace

std::vector<LabeledToken> generate_synthetic_corpus(std::size_t n_tokens, std::uint64_t seed,
                                                    const LabelRatios& ratios) {
  if (n_tokens < 1) throw ContractError("n_tokens must be at least 1");
  double total = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ContractError("label ratios must be finite and non-negative");
    total += r;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw ContractError("label ratios must sum to 1");

  std::mt19937_64 rng(seed);
  std::array<double, kNumLabels> cumulative{};
  double acc = 0.0;
  for (std::size_t i = 0; i < kNumLabels; ++i) cumulative[i] = (acc += ratios[i]);

  std::vector<PunctLabel> labels(n_tokens);
  for (auto& label : labels) {
    const double u = uniform01(rng);
    std::size_t c = 0;
    while (c + 1 < kNumLabels && u >= cumulative[c]) ++c;
    label = static_cast<PunctLabel>(c);
  }

  const ZipfSampler zipf(kGeneralWords.size());
  std::vector<std::string_view> words(n_tokens);
  for (auto& w : words) w = kGeneralWords[zipf(rng)];

  // Comma cues: the comma-carrying word and the clause opener after it.
  for (std::size_t i = 0; i < n_tokens; ++i) {
    if (labels[i] != PunctLabel::kComma) continue;
    if (uniform01(rng) < 0.25) words[i] = pick_word(kCommaProne, rng);
    if (i + 1 < n_tokens && uniform01(rng) < 0.6) words[i + 1] = pick_word(kConjunctions, rng);
  }

  // Sentence cues: spans end at PERIOD or QUESTION.
  std::size_t start = 0;
  for (std::size_t i = 0; i <= n_tokens; ++i) {
    const bool at_end = i == n_tokens;
    const bool terminal = !at_end && (labels[i] == PunctLabel::kPeriod || labels[i] == PunctLabel::kQuestion);
    if (!at_end && !terminal) continue;
    const std::size_t last = at_end ? n_tokens - 1 : i;
    if (start > last) break;
    const bool question = !at_end && labels[i] == PunctLabel::kQuestion;
    if (last > start) {
      if (question) {
        words[start] = uniform01(rng) < 0.85 ? pick_word(kInterrogatives, rng) : pick_word(kDeclarativeOpeners, rng);
      } else if (uniform01(rng) < 0.03) {
        words[start] = pick_word(kInterrogatives, rng);
      } else if (uniform01(rng) < 0.7) {
        words[start] = pick_word(kDeclarativeOpeners, rng);
      }
    }
    if (terminal && uniform01(rng) < 0.35) words[last] = pick_word(kClosers, rng);
    start = i + 1;
  }

  std::vector<LabeledToken> out;
  out.reserve(n_tokens);
  for (std::size_t i = 0; i < n_tokens; ++i) out.push_back({std::string(words[i]), labels[i]});
  return out;
}

}  // namespace punctscl
