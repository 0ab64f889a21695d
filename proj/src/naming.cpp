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
#include "lass/naming.hpp"

#include <charconv>
#include <vector>

#include "lass/types.hpp"
#include "lass/errors.hpp"

namespace lass {

namespace {

std::vector<std::string_view> split_dots(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto dot = s.find('.', start);
    if (dot == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, dot - start));
    start = dot + 1;
  }
}

bool is_projection(std::string_view c, std::string_view prefix) {
  if (c.size() != prefix.size() + 1 || c.substr(0, prefix.size()) != prefix) {
    return false;
  }
  char p = c.back();
  return p == 'q' || p == 'k' || p == 'v' || p == 'o';
}

bool is_ffn(std::string_view c) { return c == "ffn_1" || c == "ffn_2"; }

}  // namespace

LangPair LangPair::parse(std::string_view text) {
  auto dash = text.find('-');
  if (dash == std::string_view::npos || dash == 0 || dash + 1 == text.size() ||
      text.find('-', dash + 1) != std::string_view::npos) {
    throw DataError("malformed language pair '" + std::string(text) +
                    "', expected src-tgt");
  }
  return {std::string(text.substr(0, dash)), std::string(text.substr(dash + 1))};
}

std::optional<ParamName> parse_param_name(std::string_view name) {
  auto parts = split_dots(name);
  if (parts.size() == 2 && parts[0] == "embed" &&
      (parts[1] == "tok" || parts[1] == "pos")) {
    return ParamName{"embed", -1, std::string(parts[1]), ""};
  }
  if (parts.size() != 4) return std::nullopt;
  if (parts[0] != "enc" && parts[0] != "dec") return std::nullopt;
  int layer = 0;
  auto [p, ec] = std::from_chars(parts[1].data(),
                                 parts[1].data() + parts[1].size(), layer);
  if (ec != std::errc() || p != parts[1].data() + parts[1].size() || layer < 0) {
    return std::nullopt;
  }
  std::string_view comp = parts[2];
  std::string_view kind = parts[3];
  bool enc = parts[0] == "enc";
  bool ln = comp == "ln_1" || comp == "ln_2" || (!enc && comp == "ln_3");
  if (ln) {
    if (kind != "gain" && kind != "bias") return std::nullopt;
  } else {
    bool ok = is_ffn(comp) ||
              (enc ? is_projection(comp, "attn_")
                   : (is_projection(comp, "self_") || is_projection(comp, "cross_")));
    if (!ok || (kind != "weight" && kind != "bias")) return std::nullopt;
  }
  return ParamName{std::string(parts[0]), layer, std::string(comp),
                   std::string(kind)};
}

std::string param_name(std::string_view stack, int layer,
                       std::string_view component, std::string_view kind) {
  std::string s(stack);
  if (layer >= 0) {
    s += ".";
    s += std::to_string(layer);
  }
  s += ".";
  s += component;
  if (!kind.empty()) {
    s += ".";
    s += kind;
  }
  return s;
}

bool is_maskable(std::string_view name) {
  auto p = parse_param_name(name);
  return p && p->kind == "weight";
}

bool is_encoder_param(std::string_view name) {
  return name.substr(0, 4) == "enc.";
}

bool is_decoder_param(std::string_view name) {
  return name.substr(0, 4) == "dec.";
}

std::string component_class(std::string_view name) {
  auto p = parse_param_name(name);
  if (!p || p->kind != "weight") return "";
  if (is_ffn(p->component)) return p->component;
  return std::string(1, p->component.back());
}

}  // namespace lass
