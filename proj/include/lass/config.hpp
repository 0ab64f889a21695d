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
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lass/corpus.hpp"
#include "lass/evaluation.hpp"
#include "lass/model.hpp"
#include "lass/training.hpp"

namespace lass {

enum class ValueType { kInt, kReal, kBool, kString };

struct ConfigKey {
  std::string section;
  std::string key;
  ValueType type;
  std::string default_value;
};

// The full key schema in a fixed order.
const std::vector<ConfigKey>& config_schema();

// Sections {data, model, train, mask, eval, sweep} of key=value entries with
// every default materialized.
class ExperimentConfig {
 public:
  ExperimentConfig();  // all defaults

  // Throws ConfigError on unknown section/key or a value of the wrong type.
  void set(std::string_view section, std::string_view key, std::string value);
  const std::string& get(std::string_view section, std::string_view key) const;
  std::int64_t get_int(std::string_view section, std::string_view key) const;
  double get_real(std::string_view section, std::string_view key) const;
  bool get_bool(std::string_view section, std::string_view key) const;

  // Canonical INI text; identical configs give identical text.
  std::string resolved_text() const;
  // FNV-1a over the canonical text of the given sections (all when empty).
  std::uint64_t hash(const std::vector<std::string>& sections = {}) const;

  // Typed views; each validates cross-field invariants.
  CorpusSpec corpus_spec() const;
  ModelConfig model_config(int corpus_vocab) const;
  TrainConfig train_config() const;  // max_steps = train.base_steps
  DecodeOptions decode_options() const;
  TierThresholds tier_thresholds() const;
  std::vector<std::string> holdout_languages() const;
  std::vector<double> sweep_alphas() const;
  std::vector<std::string> arms() const;

  // Every typed view above; throws the first ConfigError found.
  void validate() const;

 private:
  std::map<std::string, std::map<std::string, std::string>, std::less<>> values_;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Applies LASS_<SECTION>_<KEY> variables (upper case) found by `getenv`.
void apply_env_overrides(
    ExperimentConfig& cfg,
    const std::function<std::optional<std::string>(const std::string&)>& getenv);
void apply_env_overrides(ExperimentConfig& cfg);

// Splitting helpers for list-valued keys.
std::vector<std::string> split_list(std::string_view s, char sep);

}  // namespace lass
