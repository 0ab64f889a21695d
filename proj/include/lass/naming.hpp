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

#include <optional>
#include <string>
#include <string_view>

namespace lass {

// Canonical parameter names. Masks refer to tensors by these names, so the
// scheme is part of the mask file format:
//
//   embed.tok  embed.pos
//   enc.{L}.attn_{q,k,v,o}.{weight,bias}  enc.{L}.ffn_{1,2}.{weight,bias}
//   enc.{L}.ln_{1,2}.{gain,bias}
//   dec.{L}.self_{q,k,v,o}.*  dec.{L}.cross_{q,k,v,o}.*  dec.{L}.ffn_{1,2}.*
//   dec.{L}.ln_{1,2,3}.{gain,bias}
struct ParamName {
  std::string stack;      // "enc", "dec" or "embed"
  int layer = -1;         // -1 for embeddings
  std::string component;  // "attn_q", "cross_o", "ffn_1", "ln_2", "tok", ...
  std::string kind;       // "weight", "bias", "gain" or "" for embeddings
};

std::optional<ParamName> parse_param_name(std::string_view name);

std::string param_name(std::string_view stack, int layer,
                       std::string_view component, std::string_view kind);

// Weight matrices of attention projections and FFN layers. Embeddings,
// biases and layer-norm parameters are shared by every language pair.
bool is_maskable(std::string_view name);

bool is_encoder_param(std::string_view name);
bool is_decoder_param(std::string_view name);

// Projection letter or FFN index used by the capacity profile: "q", "k",
// "v", "o", "ffn_1", "ffn_2". Returns "" for non-maskable names.
std::string component_class(std::string_view name);

}  // namespace lass
