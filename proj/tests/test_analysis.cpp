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

#include "lass/analysis.hpp"
#include "lass/errors.hpp"
#include "test_util.hpp"

using namespace lass;

namespace {

std::vector<double> avg_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (i + j) / 2.0 + 1.0;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

ParamStore two_layer_store() {
  ParamStore s;
  for (const char* stack : {"enc", "dec"}) {
    for (int l = 0; l < 2; ++l) {
      const std::string p = std::string(stack) + "." + std::to_string(l) + ".";
      const char* attn = std::string(stack) == "enc" ? "attn_" : "self_";
      for (const char* x : {"q", "k", "v", "o"}) s.add(p + attn + x + ".weight", {4, 4});
      s.add(p + "ffn_1.weight", {4, 8});
      s.add(p + "ffn_2.weight", {8, 4});
    }
  }
  std::mt19937_64 rng(1);
  for (auto& e : s.entries()) {
    for (auto& v : e.values) v = static_cast<float>(rng() % 1000) / 7.0f;
  }
  return s;
}

MaskSet centric_masks(const std::vector<std::string>& langs, double alpha) {
  auto s = two_layer_store();
  MaskSet set(s.fingerprint());
  std::uint64_t seed = 1;
  for (const auto& l : langs) {
    for (const LangPair& p : {LangPair{"en", l}, LangPair{l, "en"}}) {
      auto m = random_mask(s, alpha, seed++, p);
      m.fingerprint = s.fingerprint();
      set.add(m);
    }
  }
  return set;
}

}  // namespace

TEST_CASE("spearman matches a rank-then-Pearson oracle, ties averaged") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> a(15), b(15);
    for (auto& x : a) x = static_cast<double>(rng() % 6);
    for (auto& x : b) x = static_cast<double>(rng() % 8);
    CHECK(spearman(a, b) == doctest::Approx(pearson(avg_ranks(a), avg_ranks(b))).epsilon(1e-12));
  }
  std::vector<double> x = {1, 2, 3, 4}, y = {10, 20, 30, 40}, z = {4, 3, 2, 1};
  CHECK(spearman(x, y) == doctest::Approx(1.0));
  CHECK(spearman(x, z) == doctest::Approx(-1.0));
}

TEST_CASE("similarity matrices: unit diagonal and reciprocity") {
  auto set = centric_masks({"a", "b", "c"}, 0.6);
  for (Grouping g : {Grouping::kFromPivot, Grouping::kToPivot}) {
    auto m = similarity_matrix(set, "en", g);
    REQUIRE(m.rows.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(m.values[i][i] == 1.0);
      for (std::size_t j = 0; j < 3; ++j) {
        const auto ni = static_cast<double>(set.at(m.rows[i]).ones());
        const auto nj = static_cast<double>(set.at(m.rows[j]).ones());
        const auto inter = intersection_count(set.at(m.rows[i]), set.at(m.rows[j]));
        CHECK(std::llround(m.values[i][j] * ni) == static_cast<long long>(inter));
        CHECK(std::llround(m.values[j][i] * nj) == static_cast<long long>(inter));
        CHECK(m.values[i][j] * ni == doctest::Approx(m.values[j][i] * nj).epsilon(1e-12));
      }
    }
  }
  auto cross = similarity_matrix(set, "en", Grouping::kCross);
  CHECK(cross.rows.front().src == "en");
  CHECK(cross.cols.front().tgt == "en");
  CHECK(cross.to_csv().find("en-a") != std::string::npos);
  MaskSet empty;
  CHECK_THROWS_AS(similarity_matrix(empty, "en", Grouping::kFromPivot), UsageError);
}

TEST_CASE("layer/component profile") {
  auto s = two_layer_store();
  auto base = magnitude_prune(s, 0.5, PruneScope::kPerTensor);
  base.fingerprint = s.fingerprint();

  MaskSet same(s.fingerprint());
  for (const char* l : {"a", "b"}) {
    auto m = base;
    m.pair = {"en", l};
    same.add(m);
  }
  auto prof = layer_component_profile(same);
  CHECK(prof.size() == 2 * 2 * 6);  // stacks x layers x components
  for (const auto& r : prof) CHECK(r.similarity == 1.0);

  MaskSet comp(s.fingerprint());
  auto a = base;
  a.pair = {"en", "a"};
  auto b = base;
  b.pair = {"en", "b"};
  for (auto& [n, bits] : b.tensors) bits = ~bits;
  comp.add(a);
  comp.add(b);
  for (const auto& r : layer_component_profile(comp)) CHECK(r.similarity == 0.0);
  CHECK(profile_csv(prof).rfind("stack,layer,component,similarity\n", 0) == 0);
}

TEST_CASE("relatedness correlation on a corpus built for it") {
  auto corpus = generate_corpus(testing::tiny_spec());
  auto set = centric_masks({"aa", "ab", "zz"}, 0.5);
  auto r = relatedness_correlation(set, corpus);
  // 3 languages: 6 off-diagonal entries in each of the two groupings.
  CHECK(r.similarity.size() == 12);
  CHECK(r.relatedness.size() == 12);
  CHECK(std::count(r.relatedness.begin(), r.relatedness.end(), 0.0) == 8);
}

TEST_CASE("sweep report helpers") {
  CHECK(sweep_argmax({{0.3, 10.0}, {0.5, 12.0}, {0.7, 12.0}}) == 0.5);
  CHECK(sweep_argmax({{0.0, 1.0}}) == 0.0);
  std::vector<SweepRow> rows;
  for (double a : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    for (const char* t : {"low", "medium", "rich"}) rows.push_back({a, t, 1.0, 2.0});
  }
  auto csv = sweep_csv(rows);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 16);
  CHECK(csv.rfind("alpha,tier,bleu,accuracy\n", 0) == 0);
}
