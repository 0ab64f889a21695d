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

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lass {

// Fixed-length packed bit vector. Bit i lives in word i / 64 at position
// i % 64, so the little-endian byte image is LSB-first per byte.
class PackedBits {
 public:
  PackedBits() = default;
  explicit PackedBits(std::size_t n, bool value = false)
      : n_(n), words_((n + 63) / 64, value ? ~std::uint64_t{0} : 0) {
    trim();
  }

  std::size_t size() const { return n_; }

  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i, bool v = true) {
    std::uint64_t bit = std::uint64_t{1} << (i & 63);
    if (v) {
      words_[i >> 6] |= bit;
    } else {
      words_[i >> 6] &= ~bit;
    }
  }
  void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  // |this AND other|; sizes must match.
  std::size_t count_and(const PackedBits& other) const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      c += static_cast<std::size_t>(std::popcount(words_[i] & other.words_[i]));
    }
    return c;
  }

  PackedBits operator~() const {
    PackedBits out = *this;
    for (auto& w : out.words_) w = ~w;
    out.trim();
    return out;
  }

  // Byte image, ceil(n/8) bytes, padding bits zero.
  std::vector<std::uint8_t> to_bytes() const {
    std::vector<std::uint8_t> out((n_ + 7) / 8);
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] = static_cast<std::uint8_t>(words_[k / 8] >> (8 * (k % 8)));
    }
    return out;
  }
  static PackedBits from_bytes(std::span<const std::uint8_t> bytes,
                               std::size_t n) {
    PackedBits out(n);
    for (std::size_t k = 0; k < bytes.size() && k < (n + 7) / 8; ++k) {
      out.words_[k / 8] |= std::uint64_t{bytes[k]} << (8 * (k % 8));
    }
    out.trim();
    return out;
  }

  bool operator==(const PackedBits&) const = default;

 private:
  void trim() {
    if (n_ % 64 != 0 && !words_.empty()) {
      words_.back() &= (std::uint64_t{1} << (n_ % 64)) - 1;
    }
  }

  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace lass
