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
#include "lass/param_store.hpp"

#include <algorithm>
#include <cstring>
#include <functional>

#include "lass/errors.hpp"
#include "lass/io.hpp"

namespace lass {

std::size_t shape_numel(std::span<const std::size_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(std::span<const std::size_t> shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
typename BasicParamStore<T>::Entry& BasicParamStore<T>::add(
    std::string name, std::vector<std::size_t> shape) {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), name,
      [](const Entry& e, const std::string& n) { return e.name < n; });
  if (it != entries_.end() && it->name == name) {
    throw StructuralError("duplicate parameter name: " + name);
  }
  Entry e;
  e.name = std::move(name);
  e.shape = std::move(shape);
  std::size_t n = shape_numel(e.shape);
  e.values.assign(n, T(0));
  e.grad.assign(n, T(0));
  auto pos = entries_.insert(it, std::move(e));
  auto idx = pos - entries_.begin();
  relayout();
  return entries_[static_cast<std::size_t>(idx)];
}

template <typename T>
void BasicParamStore<T>::relayout() {
  std::size_t off = 0;
  for (auto& e : entries_) {
    e.offset = off;
    off += e.values.size();
  }
  total_ = off;
}

template <typename T>
const typename BasicParamStore<T>::Entry* BasicParamStore<T>::find(
    std::string_view name) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), name,
      [](const Entry& e, std::string_view n) { return e.name < n; });
  if (it == entries_.end() || it->name != name) return nullptr;
  return &*it;
}

template <typename T>
bool BasicParamStore<T>::contains(std::string_view name) const {
  return find(name) != nullptr;
}

template <typename T>
typename BasicParamStore<T>::Entry& BasicParamStore<T>::at(
    std::string_view name) {
  return const_cast<Entry&>(std::as_const(*this).at(name));
}

template <typename T>
const typename BasicParamStore<T>::Entry& BasicParamStore<T>::at(
    std::string_view name) const {
  const Entry* e = find(name);
  if (!e) throw LookupError("unknown parameter: " + std::string(name));
  return *e;
}

template <typename T>
std::pair<std::size_t, std::size_t> BasicParamStore<T>::flat_slice(
    std::string_view name) const {
  const auto& e = at(name);
  return {e.offset, e.values.size()};
}

template <typename T>
std::vector<T> BasicParamStore<T>::flatten() const {
  std::vector<T> out;
  out.reserve(total_);
  for (const auto& e : entries_) {
    out.insert(out.end(), e.values.begin(), e.values.end());
  }
  return out;
}

template <typename T>
std::vector<T> BasicParamStore<T>::flatten_grad() const {
  std::vector<T> out;
  out.reserve(total_);
  for (const auto& e : entries_) {
    out.insert(out.end(), e.grad.begin(), e.grad.end());
  }
  return out;
}

template <typename T>
void BasicParamStore<T>::zero_grad() {
  for (auto& e : entries_) std::fill(e.grad.begin(), e.grad.end(), T(0));
}

template <typename T>
std::uint64_t BasicParamStore<T>::fingerprint() const {
  std::uint64_t h = fnv1a64("");
  for (const auto& e : entries_) {
    h = fnv1a64(e.name, h);
    h = fnv1a64(":", h);
    h = fnv1a64(shape_string(e.shape), h);
    h = fnv1a64(";", h);
  }
  return h;
}

template <typename T>
bool BasicParamStore<T>::bit_equal(const BasicParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.shape != b.shape) return false;
    if (std::memcmp(a.values.data(), b.values.data(),
                    a.values.size() * sizeof(T)) != 0) {
      return false;
    }
  }
  return true;
}

template class BasicParamStore<float>;
template class BasicParamStore<double>;

}  // namespace lass
