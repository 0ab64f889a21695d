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

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace lass {

using TokenId = std::int32_t;

// An ordered translation direction, e.g. en -> aa.
struct LangPair {
  std::string src;
  std::string tgt;

  auto operator<=>(const LangPair&) const = default;

  // "src-tgt", the form used in file names and reports.
  std::string str() const { return src + "-" + tgt; }
  static LangPair parse(std::string_view text);
};

}  // namespace lass
