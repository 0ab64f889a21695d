/* Copyright 2026 The LaSS Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lass/config.hpp"
#include "lass/errors.hpp"

namespace lass {

// gen-data, train-base, make-masks, lass-train, evaluate, zero-shot, extend,
// analyze, sweep.
const std::vector<std::string>& pipeline_commands();

struct RunOptions {
  std::filesystem::path run_dir;
  std::optional<std::filesystem::path> config_path;
  std::optional<std::uint64_t> seed;  // overrides data/model/train seeds
  bool force = false;
  bool use_env = true;                // apply LASS_<SECTION>_<KEY> overrides
  std::ostream* log = nullptr;        // defaults to std::cerr
};

// Config file (or defaults), then environment, then --seed.
ExperimentConfig resolve_config(const RunOptions& opts);

// Runs one command; throws lass::Error subclasses on failure.
void execute_command(const std::string& command, const ExperimentConfig& cfg,
                     const RunOptions& opts);

// Resolves the config, runs the command and maps failures to exit codes:
// 0 success, 2 configuration, 3 missing prerequisite, 4 numerical abort,
// 1 anything else.
int run_command(const std::string& command, const RunOptions& opts);

int exit_code_for(ErrorKind kind);

// Highest-step checkpoint "{phase}.{step}.ckpt" in `dir`, if any.
std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& dir,
                                                        const std::string& phase);

// Config sections whose values a command's artifacts depend on.
std::vector<std::string> command_sections(const std::string& command);

}  // namespace lass
