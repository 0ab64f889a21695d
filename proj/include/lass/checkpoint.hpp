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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lass/model.hpp"
#include "lass/param_store.hpp"

namespace lass {

// Checkpoint layout (little-endian):
//   "LSSC" | u16 version | u32 length + config text ("key=value\n" lines)
//   then per entry in name order: u32 length + name | u32 rank |
//   rank x u32 dims | raw f32 values.
// The config text holds the model configuration followed by free-form
// metadata (phase, step, config hash).
struct Checkpoint {
  ModelConfig config;
  ParamStore params;
  std::map<std::string, std::string> meta;
};

std::vector<std::uint8_t> serialize_checkpoint(
    const ModelConfig& cfg, const ParamStore& params,
    const std::map<std::string, std::string>& meta = {});
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg,
                     const ParamStore& params,
                     const std::map<std::string, std::string>& meta = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lass
