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

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "cli/commands.hpp"

namespace {

using namespace punctscl::cli;

std::optional<InputFormat> format_or_report(const std::string& name) {
  auto format = parse_input_format(name);
  if (!format) std::cerr << "punctscl: --format must be plain or tsv\n";
  return format;
}

std::optional<RunConfigFile> config_or_report(const std::string& path) {
  try {
    return path.empty() ? RunConfigFile{} : load_run_config(path);
  } catch (const std::exception& e) {
    std::cerr << "punctscl: " << e.what() << '\n';
    return std::nullopt;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Token-level supervised contrastive punctuation restoration"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool diagnose = false;
  app.add_option("--config", config_path, "Run configuration JSON");
  app.add_option("--seed", seed, "Override the seed of the command");
  app.add_flag("--diagnose", diagnose, "Add embedding separation diagnostics to eval reports");

  auto* prepare = app.add_subcommand("prepare", "Convert raw text or TSV into canonical TSV");
  std::string input, output, format = "plain";
  prepare->add_option("input", input, "Input file")->required();
  prepare->add_option("output", output, "Output TSV")->required();
  prepare->add_option("--format", format, "plain or tsv");

  auto* synth = app.add_subcommand("synth", "Write synthetic train/valid/test TSVs");
  auto* train = app.add_subcommand("train", "Train a model from a run configuration");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a labelled file");
  std::string checkpoint, test, eval_format = "tsv";
  eval->add_option("checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("test", test, "Labelled test file")->required();
  eval->add_option("--format", eval_format, "plain or tsv");

  auto* gradcheck = app.add_subcommand("gradcheck", "Check losses and gradients against reference oracles");
  std::size_t trials = 50;
  gradcheck->add_option("--trials", trials, "Random trials per check");

  for (auto* sub : {prepare, synth, train, eval, gradcheck}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const Streams io{std::cout, std::cerr};
  if (prepare->parsed()) {
    const auto f = format_or_report(format);
    return f ? cmd_prepare(input, *f, output, io) : kExitUsage;
  }
  if (synth->parsed() || train->parsed()) {
    const auto config = config_or_report(config_path);
    if (!config) return kExitFailure;
    return synth->parsed() ? cmd_synth(*config, seed, io) : cmd_train(*config, seed, io);
  }
  if (eval->parsed()) {
    const auto f = format_or_report(eval_format);
    if (!f) return kExitUsage;
    EvalOptions options;
    options.format = *f;
    options.diagnose = diagnose;
    options.seed = seed.value_or(0);
    return cmd_eval(checkpoint, test, options, io);
  }
  return cmd_gradcheck(seed.value_or(0), trials, io);
}
