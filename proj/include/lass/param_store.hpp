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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lass/aligned.hpp"

namespace lass {

template <typename T>
struct ParamEntry {
  std::string name;
  std::vector<std::size_t> shape;
  AlignedVector<T> values;
  AlignedVector<T> grad;
  // Start of this entry inside the conceptual flat parameter vector.
  std::size_t offset = 0;

  std::size_t size() const { return values.size(); }
};

std::size_t shape_numel(std::span<const std::size_t> shape);
std::string shape_string(std::span<const std::size_t> shape);

// Named, shaped parameter tensors with gradients. Entries are kept in
// lexicographic name order and laid out back to back in a flat index space of
// length total_size(). Adding entries invalidates references to entries.
template <typename T>
class BasicParamStore {
 public:
  using Entry = ParamEntry<T>;

  Entry& add(std::string name, std::vector<std::size_t> shape);

  bool contains(std::string_view name) const;
  Entry& at(std::string_view name);
  const Entry& at(std::string_view name) const;

  std::span<Entry> entries() { return entries_; }
  std::span<const Entry> entries() const { return entries_; }
  std::size_t num_entries() const { return entries_.size(); }
  std::size_t total_size() const { return total_; }

  // (offset, length) of `name` in the flat vector.
  std::pair<std::size_t, std::size_t> flat_slice(std::string_view name) const;
  std::vector<T> flatten() const;
  std::vector<T> flatten_grad() const;

  void zero_grad();

  // Hash over the sorted (name, shape) list; two stores with the same
  // naming scheme and shapes share a fingerprint.
  std::uint64_t fingerprint() const;

  template <typename U>
  BasicParamStore<U> cast() const {
    BasicParamStore<U> out;
    for (const auto& e : entries_) {
      auto& d = out.add(e.name, e.shape);
      for (std::size_t i = 0; i < e.values.size(); ++i) {
        d.values[i] = static_cast<U>(e.values[i]);
      }
    }
    return out;
  }

  // Values equal bit for bit, names and shapes identical.
  bool bit_equal(const BasicParamStore& other) const;

 private:
  const Entry* find(std::string_view name) const;
  void relayout();

  std::vector<Entry> entries_;
  std::size_t total_ = 0;
};

using ParamStore = BasicParamStore<float>;

}  // namespace lass
