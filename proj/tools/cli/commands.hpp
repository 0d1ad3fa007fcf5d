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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "punctscl/oracle.hpp"
#include "run_config.hpp"

namespace punctscl::cli {

/// Process exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Where a command writes its report (stdout) and diagnostics (stderr).
struct Streams {
  std::ostream& out;
  std::ostream& err;
};

/// Reads `input` (plain text or TSV), writes canonical TSV to `output` and
/// prints the label histogram JSON.
int cmd_prepare(const std::filesystem::path& input, InputFormat format, const std::filesystem::path& output,
                Streams io);

/// Writes train/valid/test TSVs for the synth section. Split seeds are
/// derived from synth.seed (or `seed_override`) so the splits are disjoint.
/// Files go to the configured data paths, or to output_dir/{train,valid,test}.tsv.
int cmd_synth(const RunConfigFile& config, std::optional<std::uint64_t> seed_override, Streams io);

/// Trains one model and writes run_record_seed{S}_{KIND}.json and
/// checkpoint_seed{S}_{KIND}.bin into output_dir. Data comes from the
/// configured train/valid paths, or is generated in memory from the synth
/// section when no train path is given.
int cmd_train(const RunConfigFile& config, std::optional<std::uint64_t> seed_override, Streams io);

struct EvalOptions {
  InputFormat format = InputFormat::kTsv;
  bool diagnose = false;
  std::uint64_t seed = 0;
  std::size_t batch_size = 16;
};

/// Loads a checkpoint, evaluates it on `test` and prints the report JSON.
int cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& test,
             const EvalOptions& options, Streams io);

/// Runs the oracle suite and prints its JSON report. Exit 0 iff every check
/// passes; trials == 0 is a usage error.
int cmd_gradcheck(std::uint64_t seed, std::size_t trials, Streams io,
                  const oracle::OracleTargets& targets = oracle::OracleTargets::production());

}  // namespace punctscl::cli
