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
#include "lass/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lass/errors.hpp"
#include "lass/io.hpp"
#include "lass/naming.hpp"

namespace lass {

namespace {

constexpr char kMagic[4] = {'L', 'A', 'S', 'S'};
constexpr std::uint16_t kVersion = 1;

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw ConfigError("pruning rate alpha must lie in [0,1), got " +
                      std::to_string(alpha));
  }
}

template <typename T>
ParameterMask empty_mask(const BasicParamStore<T>& store, double alpha,
                         Provenance prov, LangPair pair) {
  ParameterMask m;
  m.alpha = static_cast<float>(alpha);
  m.provenance = prov;
  m.pair = std::move(pair);
  m.fingerprint = store.fingerprint();
  return m;
}

void check_same_structure(const ParameterMask& a, const ParameterMask& b) {
  if (a.fingerprint != b.fingerprint) {
    throw StructuralError("mask fingerprint mismatch: " + hex64(a.fingerprint) +
                          " vs " + hex64(b.fingerprint));
  }
  if (a.tensors.size() != b.tensors.size()) {
    throw StructuralError("masks cover different tensor sets");
  }
  auto it = b.tensors.begin();
  for (const auto& [name, bits] : a.tensors) {
    if (it->first != name || it->second.size() != bits.size()) {
      throw StructuralError("masks disagree on tensor " + name);
    }
    ++it;
  }
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kPruned: return "pruned";
    case Provenance::kRandom: return "random";
    case Provenance::kMerged: return "merged";
  }
  return "?";
}

std::string_view to_string(PruneScope s) {
  return s == PruneScope::kGlobal ? "global" : "per_tensor";
}

PruneScope parse_prune_scope(std::string_view s) {
  if (s == "per_tensor") return PruneScope::kPerTensor;
  if (s == "global") return PruneScope::kGlobal;
  throw ConfigError("unknown pruning scope '" + std::string(s) +
                    "', expected per_tensor or global");
}

std::size_t retained_count(double alpha, std::size_t n) {
  return static_cast<std::size_t>(
      std::llround((1.0 - alpha) * static_cast<double>(n)));
}

std::size_t ParameterMask::ones() const {
  std::size_t c = 0;
  for (const auto& [_, bits] : tensors) c += bits.count();
  return c;
}

std::size_t ParameterMask::bit_count() const {
  std::size_t c = 0;
  for (const auto& [_, bits] : tensors) c += bits.size();
  return c;
}

double ParameterMask::density() const {
  auto n = bit_count();
  return n ? static_cast<double>(ones()) / static_cast<double>(n) : 0.0;
}

template <typename T>
void ParameterMask::check_congruent(const BasicParamStore<T>& store) const {
  std::size_t seen = 0;
  for (const auto& e : store.entries()) {
    if (!is_maskable(e.name)) continue;
    const PackedBits* bits = find(e.name);
    if (!bits) {
      throw StructuralError("mask " + pair.str() + " lacks tensor " + e.name);
    }
    if (bits->size() != e.size()) {
      throw StructuralError("mask " + pair.str() + " tensor " + e.name +
                            " has " + std::to_string(bits->size()) +
                            " bits, parameter has " + std::to_string(e.size()));
    }
    ++seen;
  }
  if (seen != tensors.size()) {
    for (const auto& [name, _] : tensors) {
      if (!store.contains(name) || !is_maskable(name)) {
        throw StructuralError("mask " + pair.str() +
                              " names a tensor the model does not have: " +
                              name);
      }
    }
  }
}

template <typename T>
ParameterMask all_ones_mask(const BasicParamStore<T>& store, LangPair pair) {
  auto m = empty_mask(store, 0.0, Provenance::kPruned, std::move(pair));
  for (const auto& e : store.entries()) {
    if (is_maskable(e.name)) m.tensors.emplace(e.name, PackedBits(e.size(), true));
  }
  return m;
}

void MaskSet::add(ParameterMask mask) {
  if (masks_.empty() && fingerprint_ == 0) fingerprint_ = mask.fingerprint;
  if (mask.fingerprint != fingerprint_) {
    throw StructuralError("mask " + mask.pair.str() +
                          " has a different naming-scheme fingerprint");
  }
  auto pair = mask.pair;
  if (!masks_.emplace(pair, std::move(mask)).second) {
    throw UsageError("duplicate mask for pair " + pair.str());
  }
}

const ParameterMask& MaskSet::at(const LangPair& pair) const {
  auto it = masks_.find(pair);
  if (it == masks_.end()) throw LookupError("no mask for pair " + pair.str());
  return it->second;
}

std::vector<LangPair> MaskSet::pairs() const {
  std::vector<LangPair> out;
  for (const auto& [p, _] : masks_) out.push_back(p);
  return out;
}

template <typename T>
ParameterMask magnitude_prune(const BasicParamStore<T>& store, double alpha,
                              PruneScope scope, LangPair pair) {
  check_alpha(alpha);
  auto m = empty_mask(store, alpha, Provenance::kPruned, std::move(pair));

  if (scope == PruneScope::kPerTensor) {
    std::vector<std::uint32_t> order;
    for (const auto& e : store.entries()) {
      if (!is_maskable(e.name)) continue;
      const std::size_t n = e.size();
      const std::size_t pruned = n - retained_count(alpha, n);
      order.resize(n);
      std::iota(order.begin(), order.end(), 0u);
      const auto& w = e.values;
      auto lower = [&w](std::uint32_t a, std::uint32_t b) {
        T wa = std::abs(w[a]);
        T wb = std::abs(w[b]);
        return wa < wb || (wa == wb && a < b);
      };
      PackedBits bits(n);
      if (pruned < n) {
        std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(pruned),
                         order.end(), lower);
      }
      for (std::size_t k = pruned; k < n; ++k) bits.set(order[k]);
      m.tensors.emplace(e.name, std::move(bits));
    }
    return m;
  }

  // Global: one ranking over every maskable weight, tie-broken by flat index.
  struct Ref {
    T mag;
    std::size_t flat;
    std::uint32_t tensor;
    std::uint32_t index;
  };
  std::vector<Ref> refs;
  std::vector<const ParamEntry<T>*> maskable;
  for (const auto& e : store.entries()) {
    if (!is_maskable(e.name)) continue;
    auto t = static_cast<std::uint32_t>(maskable.size());
    maskable.push_back(&e);
    for (std::size_t i = 0; i < e.size(); ++i) {
      refs.push_back({std::abs(e.values[i]), e.offset + i, t,
                      static_cast<std::uint32_t>(i)});
    }
  }
  const std::size_t pruned = refs.size() - retained_count(alpha, refs.size());
  if (pruned < refs.size()) {
    std::nth_element(refs.begin(), refs.begin() + static_cast<std::ptrdiff_t>(pruned),
                     refs.end(), [](const Ref& a, const Ref& b) {
                       return a.mag < b.mag || (a.mag == b.mag && a.flat < b.flat);
                     });
  }
  std::vector<PackedBits> bits;
  for (const auto* e : maskable) bits.emplace_back(e->size());
  for (std::size_t k = pruned; k < refs.size(); ++k) {
    bits[refs[k].tensor].set(refs[k].index);
  }
  for (std::size_t t = 0; t < maskable.size(); ++t) {
    m.tensors.emplace(maskable[t]->name, std::move(bits[t]));
  }
  return m;
}

template <typename T>
ParameterMask random_mask(const BasicParamStore<T>& store, double alpha,
                          std::uint64_t seed, LangPair pair) {
  check_alpha(alpha);
  auto m = empty_mask(store, alpha, Provenance::kRandom, std::move(pair));
  std::mt19937_64 rng(seed);
  std::vector<std::uint32_t> pool;
  for (const auto& e : store.entries()) {
    if (!is_maskable(e.name)) continue;
    const std::size_t n = e.size();
    const std::size_t keep = retained_count(alpha, n);
    pool.resize(n);
    std::iota(pool.begin(), pool.end(), 0u);
    PackedBits bits(n);
    // Partial Fisher-Yates: the first `keep` slots are a uniform draw
    // without replacement.
    for (std::size_t i = 0; i < keep; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(pool[i], pool[pick(rng)]);
      bits.set(pool[i]);
    }
    m.tensors.emplace(e.name, std::move(bits));
  }
  return m;
}

std::size_t intersection_count(const ParameterMask& m1, const ParameterMask& m2) {
  check_same_structure(m1, m2);
  std::size_t c = 0;
  auto it = m2.tensors.begin();
  for (const auto& [_, bits] : m1.tensors) {
    c += bits.count_and(it->second);
    ++it;
  }
  return c;
}

double similarity(const ParameterMask& m1, const ParameterMask& m2) {
  return similarity(m1, m2, [](std::string_view) { return true; });
}

double similarity(const ParameterMask& m1, const ParameterMask& m2,
                  const std::function<bool(std::string_view)>& keep) {
  check_same_structure(m1, m2);
  std::size_t shared = 0;
  std::size_t ones = 0;
  auto it = m2.tensors.begin();
  for (const auto& [name, bits] : m1.tensors) {
    if (keep(name)) {
      shared += bits.count_and(it->second);
      ones += bits.count();
    }
    ++it;
  }
  if (ones == 0) {
    throw UsageError("similarity is undefined when the first mask (" +
                     m1.pair.str() + ") has no ones in the selected tensors");
  }
  return static_cast<double>(shared) / static_cast<double>(ones);
}

ParameterMask combine_encoder_decoder(const ParameterMask& encoder_donor,
                                      const ParameterMask& decoder_donor,
                                      LangPair pair) {
  check_same_structure(encoder_donor, decoder_donor);
  ParameterMask out;
  out.alpha = encoder_donor.alpha;
  out.provenance = Provenance::kMerged;
  out.pair = std::move(pair);
  out.fingerprint = encoder_donor.fingerprint;
  for (const auto& [name, bits] : encoder_donor.tensors) {
    if (is_decoder_param(name)) {
      out.tensors.emplace(name, *decoder_donor.find(name));
    } else {
      out.tensors.emplace(name, bits);
    }
  }
  return out;
}

ParameterMask merge_zero_shot(const ParameterMask& x_to_pivot,
                              const ParameterMask& pivot_to_y) {
  if (x_to_pivot.pair.tgt != pivot_to_y.pair.src) {
    throw UsageError("cannot merge " + x_to_pivot.pair.str() + " with " +
                     pivot_to_y.pair.str() +
                     ": the first mask must target the language the second "
                     "one translates from");
  }
  return combine_encoder_decoder(x_to_pivot, pivot_to_y,
                                 {x_to_pivot.pair.src, pivot_to_y.pair.tgt});
}

std::vector<std::uint8_t> serialize_mask(const ParameterMask& mask) {
  if (mask.tensors.empty()) {
    throw FormatError("refusing to write a mask with no tensors");
  }
  ByteWriter w;
  w.raw(std::string_view(kMagic, 4));
  w.u16(kVersion);
  w.str(mask.pair.src);
  w.str(mask.pair.tgt);
  w.f32(mask.alpha);
  w.u8(static_cast<std::uint8_t>(mask.provenance));
  w.u64(mask.fingerprint);
  w.u32(static_cast<std::uint32_t>(mask.tensors.size()));
  for (const auto& [name, bits] : mask.tensors) {
    w.str(name);
    w.u64(bits.size());
    w.raw(bits.to_bytes());
  }
  w.u32(crc32_of(w.bytes()));
  return w.take();
}

ParameterMask deserialize_mask(std::span<const std::uint8_t> bytes,
                               ChecksumPolicy policy) {
  ByteReader r(bytes);
  auto magic = r.raw(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic)) {
    throw FormatError("bad mask magic", 0);
  }
  auto version = r.u16();
  if (version != kVersion) {
    throw FormatError("unsupported mask version " + std::to_string(version), 4);
  }
  if (policy == ChecksumPolicy::kVerify) {
    if (bytes.size() < 10) throw FormatError("truncated mask file", bytes.size());
    const std::size_t trailer = bytes.size() - 4;
    ByteReader tr(bytes.subspan(trailer));
    std::uint32_t stored = tr.u32();
    if (stored != crc32_of(bytes.first(trailer))) {
      throw FormatError("mask checksum mismatch", trailer);
    }
  }
  ParameterMask m;
  m.pair.src = r.str("pair source");
  m.pair.tgt = r.str("pair target");
  m.alpha = r.f32();
  auto prov = r.u8();
  if (prov > 2) {
    throw FormatError("unknown provenance " + std::to_string(prov), r.pos() - 1);
  }
  m.provenance = static_cast<Provenance>(prov);
  m.fingerprint = r.u64();
  auto count = r.u32();
  for (std::uint32_t t = 0; t < count; ++t) {
    auto name = r.str("tensor name");
    auto nbits = r.u64();
    if ((nbits + 7) / 8 > r.remaining()) {
      throw FormatError("tensor " + name + " claims " + std::to_string(nbits) +
                            " bits beyond end of input",
                        r.pos());
    }
    auto payload = r.raw(static_cast<std::size_t>((nbits + 7) / 8), "bits");
    if (!m.tensors.emplace(name, PackedBits::from_bytes(payload, nbits)).second) {
      throw FormatError("duplicate tensor " + name, r.pos());
    }
  }
  r.u32();  // checksum trailer
  if (!r.done()) throw FormatError("trailing bytes after mask", r.pos());
  return m;
}

void save_mask(const std::filesystem::path& path, const ParameterMask& mask) {
  write_file_bytes(path, serialize_mask(mask));
}

ParameterMask load_mask(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  try {
    return deserialize_mask(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string mask_file_name(const LangPair& pair) { return pair.str() + ".mask"; }

void save_mask_set(const std::filesystem::path& dir, const MaskSet& set) {
  for (const auto& [pair, mask] : set.masks()) {
    save_mask(dir / mask_file_name(pair), mask);
  }
}

MaskSet load_mask_set(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& ent : std::filesystem::directory_iterator(dir)) {
    if (ent.path().extension() == ".mask") files.push_back(ent.path());
  }
  std::sort(files.begin(), files.end());
  MaskSet set;
  for (const auto& f : files) set.add(load_mask(f));
  return set;
}

template <typename T>
void apply_mask_into(const BasicParamStore<T>& store, const ParameterMask& mask,
                     BasicParamStore<T>& out) {
  auto src = store.entries();
  auto dst = out.entries();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto& e = src[i];
    auto& d = dst[i];
    const PackedBits* bits = mask.find(e.name);
    if (!bits) {
      std::copy(e.values.begin(), e.values.end(), d.values.begin());
      continue;
    }
    for (std::size_t k = 0; k < e.size(); ++k) {
      d.values[k] = bits->test(k) ? e.values[k] : T(0);
    }
  }
}

template <typename T>
BasicParamStore<T> apply_mask(const BasicParamStore<T>& store,
                              const ParameterMask& mask) {
  if (mask.fingerprint != store.fingerprint()) {
    throw StructuralError("mask " + mask.pair.str() +
                          " was built for a different model");
  }
  mask.check_congruent(store);
  BasicParamStore<T> out = store;
  apply_mask_into(store, mask, out);
  out.zero_grad();
  return out;
}

#define LASS_INSTANTIATE(T)                                                    \
  template void ParameterMask::check_congruent(const BasicParamStore<T>&)      \
      const;                                                                   \
  template ParameterMask all_ones_mask(const BasicParamStore<T>&, LangPair);   \
  template ParameterMask magnitude_prune(const BasicParamStore<T>&, double,    \
                                         PruneScope, LangPair);                \
  template ParameterMask random_mask(const BasicParamStore<T>&, double,        \
                                     std::uint64_t, LangPair);                 \
  template BasicParamStore<T> apply_mask(const BasicParamStore<T>&,            \
                                         const ParameterMask&);                \
  template void apply_mask_into(const BasicParamStore<T>&,                     \
                                const ParameterMask&, BasicParamStore<T>&);

LASS_INSTANTIATE(float)
LASS_INSTANTIATE(double)

#undef LASS_INSTANTIATE

}  // namespace lass
