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
#include "lass/checkpoint.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "lass/errors.hpp"
#include "lass/io.hpp"

namespace lass {

namespace {

constexpr char kMagic[4] = {'L', 'S', 'S', 'C'};
constexpr std::uint16_t kVersion = 1;

const std::set<std::string>& model_keys() {
  static const std::set<std::string> keys = {
      "num_layers", "d_model", "num_heads",      "d_ff", "vocab_size",
      "max_seq_len", "dropout", "label_smoothing", "seed"};
  return keys;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(
    const ModelConfig& cfg, const ParamStore& params,
    const std::map<std::string, std::string>& meta) {
  std::string text = cfg.to_kv();
  for (const auto& [k, v] : meta) {
    if (model_keys().count(k) || k.find_first_of("=\n") != std::string::npos ||
        v.find('\n') != std::string::npos) {
      throw UsageError("invalid checkpoint metadata key '" + k + "'");
    }
    text += k + "=" + v + "\n";
  }
  ByteWriter w;
  w.raw(std::string_view(kMagic, 4));
  w.u16(kVersion);
  w.str(text);
  for (const auto& e : params.entries()) {
    w.str(e.name);
    w.u32(static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) w.u32(static_cast<std::uint32_t>(d));
    for (float v : e.values) w.f32(v);
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.raw(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic)) {
    throw FormatError("bad checkpoint magic", 0);
  }
  auto version = r.u16();
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  }
  Checkpoint ck;
  std::map<std::string, std::string> model_kv;
  {
    std::istringstream in(r.str("config block"));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw FormatError("malformed config line '" + line + "'", 6);
      }
      auto key = line.substr(0, eq);
      auto value = line.substr(eq + 1);
      if (model_keys().count(key)) {
        model_kv[key] = value;
      } else {
        ck.meta[key] = value;
      }
    }
  }
  ck.config = ModelConfig::from_kv(model_kv);
  std::string prev;
  while (!r.done()) {
    auto name = r.str("tensor name");
    if (!prev.empty() && name <= prev) {
      throw FormatError("tensor " + name + " out of name order", r.pos());
    }
    prev = name;
    auto rank = r.u32();
    if (rank > 8) throw FormatError("implausible rank for " + name, r.pos() - 4);
    std::vector<std::size_t> shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(r.u32());
    const std::size_t n = shape_numel(shape);
    if (n > r.remaining() / 4) {
      throw FormatError("tensor " + name + " extends beyond end of input", r.pos());
    }
    auto& e = ck.params.add(name, shape);
    for (std::size_t i = 0; i < n; ++i) e.values[i] = r.f32();
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg,
                     const ParamStore& params,
                     const std::map<std::string, std::string>& meta) {
  write_file_bytes(path, serialize_checkpoint(cfg, params, meta));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  try {
    return deserialize_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace lass
