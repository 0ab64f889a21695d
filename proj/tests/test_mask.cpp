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
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lass/io.hpp"
#include "lass/mask.hpp"
#include "lass/naming.hpp"
#include "test_util.hpp"

using namespace lass;

namespace {

// Independent pruning oracle: sort (|w|, index) ascending and drop the first
// n - keep entries.
std::vector<char> oracle_keep(std::span<const float> w, double alpha) {
  const std::size_t n = w.size();
  const auto keep = static_cast<std::size_t>(std::llround((1.0 - alpha) * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const float fa = std::fabs(w[a]), fb = std::fabs(w[b]);
    return fa != fb ? fa < fb : a < b;
  });
  std::vector<char> out(n, 1);
  for (std::size_t i = 0; i < n - keep; ++i) out[idx[i]] = 0;
  return out;
}

ParamStore layer_store(std::uint64_t seed) {
  return testing::random_store<float>({{"enc.0.attn_q.weight", {8, 8}},
                                       {"enc.0.attn_q.bias", {8}},
                                       {"enc.0.ffn_1.weight", {8, 16}},
                                       {"dec.0.self_v.weight", {8, 8}},
                                       {"dec.0.cross_o.weight", {8, 8}},
                                       {"dec.0.ln_1.gain", {8}},
                                       {"embed.tok", {20, 8}}},
                                      seed);
}

ParameterMask single_tensor_mask(std::initializer_list<int> bits) {
  ParameterMask m;
  PackedBits b(bits.size());
  std::size_t i = 0;
  for (int v : bits) b.set(i++, v != 0);
  m.tensors["enc.0.attn_q.weight"] = b;
  return m;
}

}  // namespace

TEST_CASE("magnitude_prune hand example") {
  ParamStore s;
  s.add("enc.0.attn_q.weight", {2, 2}).values = {0.1f, -0.5f, 0.3f, -0.2f};
  auto m = magnitude_prune(s, 0.5, PruneScope::kPerTensor);
  const auto& b = m.tensors.at("enc.0.attn_q.weight");
  CHECK(!b.test(0));
  CHECK(b.test(1));
  CHECK(b.test(2));
  CHECK(!b.test(3));
}

TEST_CASE("magnitude_prune alpha=0 keeps everything, alpha=0.7 of 1000 keeps 300") {
  auto s = testing::random_store<float>({{"enc.0.ffn_1.weight", {10, 100}}}, 3);
  CHECK(magnitude_prune(s, 0.0, PruneScope::kPerTensor).ones() == 1000);
  CHECK(magnitude_prune(s, 0.7, PruneScope::kPerTensor).ones() == 300);
  CHECK(retained_count(0.7, 1000) == 300);
  CHECK(retained_count(0.3, 10) == 7);
  CHECK_THROWS_AS(magnitude_prune(s, 1.0, PruneScope::kPerTensor), ConfigError);
  CHECK_THROWS_AS(magnitude_prune(s, -0.1, PruneScope::kPerTensor), ConfigError);
}

TEST_CASE("magnitude_prune matches the sort oracle, ties included") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 100; ++t) {
    ParamStore s;
    const std::size_t n = 1 + rng() % 300;
    auto& e = s.add("enc.0.attn_k.weight", {n});
    // Quantized values force many exact ties (and +0/-0 pairs).
    for (auto& v : e.values) v = static_cast<float>(static_cast<int>(rng() % 9) - 4) * 0.25f;
    for (int a = 1; a <= 9; ++a) {
      const double alpha = a / 10.0;
      auto m = magnitude_prune(s, alpha, PruneScope::kPerTensor);
      auto want = oracle_keep(e.values, alpha);
      const auto& got = m.tensors.at("enc.0.attn_k.weight");
      bool same = true;
      for (std::size_t i = 0; i < n; ++i) same &= got.test(i) == (want[i] != 0);
      CHECK_MESSAGE(same, "tensor " << t << " alpha " << alpha);
    }
  }
}

TEST_CASE("global scope ranks all maskable weights together") {
  auto s = layer_store(5);
  auto m = magnitude_prune(s, 0.6, PruneScope::kGlobal);
  std::vector<float> all;
  std::vector<std::string> owner;
  for (const auto& e : s.entries()) {
    if (!is_maskable(e.name)) continue;
    for (float v : e.values) {
      all.push_back(v);
      owner.push_back(e.name);
    }
  }
  auto want = oracle_keep(all, 0.6);
  std::size_t k = 0;
  bool same = true;
  for (const auto& e : s.entries()) {
    if (!is_maskable(e.name)) continue;
    const auto& bits = m.tensors.at(e.name);
    for (std::size_t i = 0; i < e.size(); ++i) same &= bits.test(i) == (want[k++] != 0);
  }
  CHECK(same);
  CHECK(m.tensors.count("enc.0.attn_q.bias") == 0);
  CHECK(m.tensors.count("embed.tok") == 0);
  CHECK(m.tensors.count("dec.0.ln_1.gain") == 0);
}

TEST_CASE("random_mask counts and determinism") {
  auto s = layer_store(1);
  auto a = random_mask(s, 0.3, 99);
  auto b = random_mask(s, 0.3, 99);
  CHECK(a == b);
  for (const auto& [name, bits] : a.tensors) {
    CHECK(bits.count() == retained_count(0.3, bits.size()));
  }
  ParamStore ten;
  ten.add("enc.0.attn_q.weight", {10});
  CHECK(random_mask(ten, 0.3, 1).ones() == 7);
  CHECK(a.provenance == Provenance::kRandom);
}

TEST_CASE("similarity hand examples and identities") {
  auto m1 = single_tensor_mask({1, 1, 0, 0});
  auto m2 = single_tensor_mask({1, 0, 1, 0});
  auto m3 = single_tensor_mask({0, 0, 1, 1});
  CHECK(similarity(m1, m2) == 0.5);
  CHECK(similarity(m1, m1) == 1.0);
  CHECK(similarity(m1, m3) == 0.0);
  CHECK_THROWS_AS(similarity(single_tensor_mask({0, 0, 0, 0}), m1), UsageError);
}

TEST_CASE("random masks overlap at the density (hypergeometric mean)") {
  ParamStore s;
  s.add("enc.0.ffn_1.weight", {100000});
  auto a = random_mask(s, 0.3, 1);
  auto b = random_mask(s, 0.3, 2);
  CHECK(std::fabs(similarity(a, b) - 0.7) < 0.01);
}

TEST_CASE("merge_zero_shot takes encoder bits from X->pivot and decoder bits from pivot->Y") {
  auto s = layer_store(2);
  auto a = magnitude_prune(s, 0.5, PruneScope::kPerTensor, {"aa", "en"});
  auto s2 = layer_store(3);
  auto b = magnitude_prune(s2, 0.5, PruneScope::kPerTensor, {"en", "bb"});
  auto m = merge_zero_shot(a, b);
  CHECK(m.pair == LangPair{"aa", "bb"});
  CHECK(m.provenance == Provenance::kMerged);
  for (const auto& [name, bits] : m.tensors) {
    if (is_encoder_param(name)) CHECK(bits == a.tensors.at(name));
    if (is_decoder_param(name)) CHECK(bits == b.tensors.at(name));
  }
  // Same density per tensor when both sources share it.
  auto back = magnitude_prune(s2, 0.5, PruneScope::kPerTensor, {"en", "aa"});
  auto self = merge_zero_shot(a, back);
  for (const auto& [name, bits] : self.tensors) {
    CHECK(bits.count() == retained_count(0.5, bits.size()));
  }
  CHECK_THROWS_AS(merge_zero_shot(a, a), UsageError);
}

TEST_CASE("mask serialization round trip, CRC rejection, skip policy") {
  auto s = layer_store(4);
  auto m = magnitude_prune(s, 0.7, PruneScope::kPerTensor, {"en", "aa"});
  m.fingerprint = s.fingerprint();
  auto bytes = serialize_mask(m);
  auto back = deserialize_mask(bytes);
  CHECK(back == m);
  CHECK(serialize_mask(back) == bytes);

  auto bad = bytes;
  bad[bad.size() - 5] ^= 0x01;  // last payload byte, before the CRC
  CHECK_THROWS_AS(deserialize_mask(bad), FormatError);
  auto loose = deserialize_mask(bad, ChecksumPolicy::kSkip);
  std::size_t diff = 0;
  for (const auto& [name, bits] : m.tensors) {
    const auto& o = loose.tensors.at(name);
    for (std::size_t i = 0; i < bits.size(); ++i) diff += bits.test(i) != o.test(i);
  }
  CHECK(diff == 1);

  auto truncated = std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 12);
  CHECK_THROWS_AS(deserialize_mask(truncated, ChecksumPolicy::kSkip), FormatError);
  CHECK_THROWS_AS(serialize_mask(ParameterMask{}), FormatError);
}

TEST_CASE("mask set save/load through a directory") {
  auto dir = testing::scratch_dir("maskset");
  auto s = layer_store(6);
  MaskSet set(s.fingerprint());
  for (const auto& p : {LangPair{"en", "aa"}, LangPair{"aa", "en"}}) {
    auto m = magnitude_prune(s, 0.5, PruneScope::kPerTensor, p);
    m.fingerprint = s.fingerprint();
    set.add(m);
  }
  save_mask_set(dir, set);
  CHECK(std::filesystem::exists(dir / "en-aa.mask"));
  auto back = load_mask_set(dir);
  CHECK(back.size() == 2);
  CHECK(back.at({"en", "aa"}) == set.at({"en", "aa"}));
  CHECK_THROWS_AS(back.at({"en", "zz"}), LookupError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("apply_mask zeroes masked weights and leaves shared tensors") {
  auto s = layer_store(7);
  auto m = magnitude_prune(s, 0.5, PruneScope::kPerTensor);
  auto v = apply_mask(s, m);
  for (const auto& e : v.entries()) {
    const auto& src = s.at(e.name);
    const auto* bits = m.find(e.name);
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (bits && !bits->test(i)) {
        CHECK(e.values[i] == 0.0f);
      } else {
        CHECK(e.values[i] == src.values[i]);
      }
    }
  }
  auto ones = all_ones_mask(s);
  CHECK(apply_mask(s, ones).bit_equal(s));
  ParameterMask wrong = m;
  wrong.tensors.erase("enc.0.ffn_1.weight");
  CHECK_THROWS_AS(apply_mask(s, wrong), StructuralError);
}

TEST_CASE("naming scheme") {
  auto n = parse_param_name("dec.1.cross_k.weight");
  REQUIRE(n);
  CHECK(n->stack == "dec");
  CHECK(n->layer == 1);
  CHECK(n->component == "cross_k");
  CHECK(is_maskable("dec.1.cross_k.weight"));
  CHECK_FALSE(is_maskable("dec.1.cross_k.bias"));
  CHECK_FALSE(is_maskable("embed.pos"));
  CHECK(component_class("dec.1.cross_k.weight") == "k");
  CHECK(component_class("enc.0.ffn_2.weight") == "ffn_2");
  CHECK_FALSE(parse_param_name("enc.x.attn_q.weight"));
  CHECK(param_name("enc", 0, "attn_q", "weight") == "enc.0.attn_q.weight");
}
