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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lass/bits.hpp"
#include "lass/param_store.hpp"
#include "lass/types.hpp"

namespace lass {

enum class Provenance : std::uint8_t { kPruned = 0, kRandom = 1, kMerged = 2 };
enum class PruneScope { kPerTensor, kGlobal };

std::string_view to_string(Provenance p);
std::string_view to_string(PruneScope s);
PruneScope parse_prune_scope(std::string_view s);

// One binary sub-network over the maskable tensors of a model. Bit 1 keeps
// the weight for this language pair, bit 0 removes it.
struct ParameterMask {
  std::map<std::string, PackedBits, std::less<>> tensors;
  float alpha = 0.0f;
  Provenance provenance = Provenance::kPruned;
  LangPair pair;
  std::uint64_t fingerprint = 0;

  const PackedBits* find(std::string_view name) const {
    auto it = tensors.find(name);
    return it == tensors.end() ? nullptr : &it->second;
  }
  std::size_t ones() const;
  std::size_t bit_count() const;
  double density() const;

  // Throws StructuralError naming the first offending tensor unless this mask
  // covers exactly the maskable tensors of `store` with matching lengths.
  template <typename T>
  void check_congruent(const BasicParamStore<T>& store) const;

  bool operator==(const ParameterMask&) const = default;
};

template <typename T>
ParameterMask all_ones_mask(const BasicParamStore<T>& store, LangPair pair = {});

// Masks keyed by direction; all share one naming-scheme fingerprint.
class MaskSet {
 public:
  MaskSet() = default;
  explicit MaskSet(std::uint64_t fingerprint) : fingerprint_(fingerprint) {}

  void add(ParameterMask mask);
  bool contains(const LangPair& pair) const { return masks_.count(pair) != 0; }
  const ParameterMask& at(const LangPair& pair) const;
  std::size_t size() const { return masks_.size(); }
  std::uint64_t fingerprint() const { return fingerprint_; }
  const std::map<LangPair, ParameterMask>& masks() const { return masks_; }
  std::vector<LangPair> pairs() const;

 private:
  std::map<LangPair, ParameterMask> masks_;
  std::uint64_t fingerprint_ = 0;
};

// Keeps round((1 - alpha) * n) weights with the largest magnitude per scope
// unit (each tensor, or all maskable weights together for kGlobal). Among
// equal magnitudes the lower flat index is pruned first.
template <typename T>
ParameterMask magnitude_prune(const BasicParamStore<T>& store, double alpha,
                              PruneScope scope, LangPair pair = {});

// Per tensor, exactly round((1 - alpha) * n) ones at seeded uniform positions.
template <typename T>
ParameterMask random_mask(const BasicParamStore<T>& store, double alpha,
                          std::uint64_t seed, LangPair pair = {});

// |m1 AND m2| / |m1|. Asymmetric; rows of a similarity matrix are m1.
double similarity(const ParameterMask& m1, const ParameterMask& m2);
// Same ratio restricted to tensors accepted by `keep`.
double similarity(const ParameterMask& m1, const ParameterMask& m2,
                  const std::function<bool(std::string_view)>& keep);
std::size_t intersection_count(const ParameterMask& m1, const ParameterMask& m2);

// X->Y mask from the encoder bits of X->pivot and decoder bits of pivot->Y.
ParameterMask merge_zero_shot(const ParameterMask& x_to_pivot,
                              const ParameterMask& pivot_to_y);
// Encoder bits from one donor, decoder bits from another; no pivot check.
ParameterMask combine_encoder_decoder(const ParameterMask& encoder_donor,
                                      const ParameterMask& decoder_donor,
                                      LangPair pair);

enum class ChecksumPolicy { kVerify, kSkip };

std::vector<std::uint8_t> serialize_mask(const ParameterMask& mask);
ParameterMask deserialize_mask(std::span<const std::uint8_t> bytes,
                               ChecksumPolicy policy = ChecksumPolicy::kVerify);
void save_mask(const std::filesystem::path& path, const ParameterMask& mask);
ParameterMask load_mask(const std::filesystem::path& path);

// Mask file name for a direction, "{src}-{tgt}.mask".
std::string mask_file_name(const LangPair& pair);
void save_mask_set(const std::filesystem::path& dir, const MaskSet& set);
MaskSet load_mask_set(const std::filesystem::path& dir);

// Copy of `store` with every masked-out maskable weight set to zero.
template <typename T>
BasicParamStore<T> apply_mask(const BasicParamStore<T>& store,
                              const ParameterMask& mask);
// In-place variant over an existing copy with identical layout.
template <typename T>
void apply_mask_into(const BasicParamStore<T>& store, const ParameterMask& mask,
                     BasicParamStore<T>& out);

std::size_t retained_count(double alpha, std::size_t n);

}  // namespace lass
