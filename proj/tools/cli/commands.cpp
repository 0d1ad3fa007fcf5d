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

#include "commands.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <vector>

#include "punctscl/checkpoint.hpp"
#include "punctscl/error.hpp"
#include "punctscl/evaluation.hpp"
#include "punctscl/random.hpp"
#include "punctscl/serialization.hpp"

namespace punctscl::cli {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << contents;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::vector<LabeledToken> read_tokens(const std::filesystem::path& path, InputFormat format) {
  const std::string text = read_file(path);
  try {
    return format == InputFormat::kTsv ? parse_tsv(text) : parse_plain_text(text);
  } catch (const ParseError& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

/// Runs `body`, turning any exception into a message on stderr and exit 1.
template <typename Body>
int guarded(const char* command, Streams io, Body&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    io.err << "punctscl " << command << ": " << e.what() << '\n';
    return kExitFailure;
  }
}

struct Splits {
  std::vector<LabeledToken> train;
  std::vector<LabeledToken> valid;
  std::vector<LabeledToken> test;
};

Splits synthesize(const SynthSection& synth) {
  return {generate_synthetic_corpus(synth.n_tokens, derive_seed(synth.seed, 0), synth.ratios),
          generate_synthetic_corpus(synth.n_valid_tokens, derive_seed(synth.seed, 1), synth.ratios),
          generate_synthetic_corpus(synth.n_test_tokens, derive_seed(synth.seed, 2), synth.ratios)};
}

std::string fixed(double value) {
  std::ostringstream s;
  s << std::setprecision(6) << std::fixed << value;
  return s.str();
}

}  // namespace

int cmd_prepare(const std::filesystem::path& input, InputFormat format, const std::filesystem::path& output,
                Streams io) {
  return guarded("prepare", io, [&] {
    const auto tokens = read_tokens(input, format);
    write_file(output, to_tsv(tokens));
    io.out << histogram_to_json(label_histogram(tokens)) << '\n';
    return kExitOk;
  });
}

int cmd_synth(const RunConfigFile& config, std::optional<std::uint64_t> seed_override, Streams io) {
  return guarded("synth", io, [&] {
    SynthSection synth = config.data.synth.value_or(SynthSection{});
    if (seed_override) synth.seed = *seed_override;
    const Splits splits = synthesize(synth);
    const auto& d = config.data;
    const auto train_path = d.train.value_or(config.output_dir / "train.tsv");
    const auto valid_path = d.valid.value_or(config.output_dir / "valid.tsv");
    const auto test_path = d.test.value_or(config.output_dir / "test.tsv");
    write_file(train_path, to_tsv(splits.train));
    write_file(valid_path, to_tsv(splits.valid));
    write_file(test_path, to_tsv(splits.test));
    io.out << "{\"train\": " << histogram_to_json(label_histogram(splits.train))
           << ", \"valid\": " << histogram_to_json(label_histogram(splits.valid))
           << ", \"test\": " << histogram_to_json(label_histogram(splits.test)) << "}\n";
    return kExitOk;
  });
}

int cmd_train(const RunConfigFile& config, std::optional<std::uint64_t> seed_override, Streams io) {
  return guarded("train", io, [&] {
    TrainConfig train_config = config.train;
    if (seed_override) train_config.seed = *seed_override;
    train_config.validate();

    Splits splits;
    if (config.data.train) {
      if (!config.data.valid) throw ConfigError("config: data.valid is required with data.train");
      splits.train = read_tokens(*config.data.train, config.data.format);
      splits.valid = read_tokens(*config.data.valid, config.data.format);
    } else if (config.data.synth) {
      splits = synthesize(*config.data.synth);
    } else {
      throw ConfigError("config: data.train or data.synth is required");
    }
    if (splits.train.empty()) throw ConfigError("training data is empty");

    const auto vocab = Vocabulary::build(splits.train, config.data.min_frequency);
    EncoderConfig model_config = config.model;
    if (model_config.vocab_size != 0 && model_config.vocab_size != vocab.size()) {
      throw ConfigError("config: model.vocab_size " + std::to_string(model_config.vocab_size) +
                        " does not match the training vocabulary size " + std::to_string(vocab.size()));
    }
    model_config.vocab_size = vocab.size();
    model_config.validate();
    if (train_config.max_len > model_config.max_len) {
      throw ConfigError("config: train.max_len exceeds model.max_len");
    }

    const auto train_batches =
        batchify(splits.train, vocab, train_config.max_len, train_config.batch_size, std::nullopt);
    const auto valid_batches =
        batchify(splits.valid, vocab, train_config.max_len, train_config.batch_size, std::nullopt);

    auto model = PunctuationModel::init(model_config, train_config.seed);
    auto result = train(model, train_batches, valid_batches, train_config, [&](const EpochRecord& e) {
      io.out << "epoch " << e.epoch << " steps " << e.steps << " loss " << fixed(e.train_loss);
      if (e.train_ce) io.out << " ce " << fixed(*e.train_ce);
      if (e.train_scl) io.out << " scl " << fixed(*e.train_scl);
      io.out << " valid_f1 " << fixed(e.valid_f1) << '\n' << std::flush;
    });

    const std::string stem = "seed" + std::to_string(train_config.seed) + "_" +
                             std::string(loss_kind_name(train_config.loss.kind));
    const auto record_path = config.output_dir / ("run_record_" + stem + ".json");
    const auto checkpoint_path = config.output_dir / ("checkpoint_" + stem + ".bin");
    write_file(record_path, to_json(result.record));
    std::filesystem::create_directories(config.output_dir);
    save_checkpoint(checkpoint_path, result.best_model, vocab);
    io.out << "best_epoch " << result.record.best_epoch << " best_valid_f1 " << fixed(result.record.best_valid_f1)
           << '\n'
           << "wrote " << record_path.string() << '\n'
           << "wrote " << checkpoint_path.string() << '\n';
    return kExitOk;
  });
}

int cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& test,
             const EvalOptions& options, Streams io) {
  return guarded("eval", io, [&] {
    auto loaded = load_checkpoint(checkpoint);
    const auto tokens = read_tokens(test, options.format);
    const auto batches =
        batchify(tokens, loaded.vocabulary, loaded.model.config().max_len, options.batch_size, std::nullopt);
    EvaluateOptions eval_options;
    eval_options.diagnose = options.diagnose;
    eval_options.seed = options.seed;
    io.out << to_json(evaluate(loaded.model, batches, eval_options));
    return kExitOk;
  });
}

int cmd_gradcheck(std::uint64_t seed, std::size_t trials, Streams io, const oracle::OracleTargets& targets) {
  if (trials == 0) {
    io.err << "punctscl gradcheck: --trials must be at least 1\n";
    return kExitUsage;
  }
  return guarded("gradcheck", io, [&] {
    const auto reports = oracle::run_oracle_suite(seed, trials, targets);
    io.out << to_json(reports, seed, trials);
    if (oracle::all_passed(reports)) return kExitOk;
    for (const auto& r : reports) {
      if (r.passed()) continue;
      io.err << "FAILED " << r.name << " trial seeds:";
      for (auto s : r.failing_trial_seeds) io.err << ' ' << s;
      io.err << '\n';
    }
    return kExitFailure;
  });
}

}  // namespace punctscl::cli
