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
// lass: command-line driver for the LaSS toy lab.
//
//   lass gen-data   --run-dir runs/a [--config lab.ini] [--seed N] [--force]
//   lass train-base --run-dir runs/a
//   ...
//
// Exit codes: 0 ok, 2 bad configuration, 3 missing prerequisite,
// 4 numerical abort, 1 anything else.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lass/pipeline.hpp"

namespace {

const char* describe(const std::string& cmd) {
  if (cmd == "gen-data") return "Generate the synthetic multilingual corpus";
  if (cmd == "train-base") return "Train the joint multilingual base model";
  if (cmd == "make-masks") return "Fine-tune per pair and prune to language-specific masks";
  if (cmd == "lass-train") return "Continue training under the masks (plus control arms)";
  if (cmd == "evaluate") return "BLEU, accuracy, tiers and win ratio on supervised pairs";
  if (cmd == "zero-shot") return "Merged-mask zero-shot evaluation and mask-swap grid";
  if (cmd == "extend") return "Add a new language pair under its own mask";
  if (cmd == "analyze") return "Mask similarity matrices and layer profiles";
  if (cmd == "sweep") return "Pruning-rate sweep";
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LaSS toy lab: language-specific sub-networks for multilingual translation"};
  app.require_subcommand(1);

  lass::RunOptions opts;
  std::string config_path;
  std::uint64_t seed = 0;

  for (const auto& cmd : lass::pipeline_commands()) {
    auto* sub = app.add_subcommand(cmd, describe(cmd));
    sub->add_option("--run-dir", opts.run_dir, "Run directory")->required();
    sub->add_option("--config", config_path, "INI configuration file");
    sub->add_option("--seed", seed, "Override the data, model and train seeds");
    sub->add_flag("--force", opts.force, "Rerun even if outputs exist for another config");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const auto* sub = app.get_subcommands().front();
  if (!config_path.empty()) opts.config_path = config_path;
  if (sub->count("--seed") > 0) opts.seed = seed;
  return lass::run_command(sub->get_name(), opts);
}
