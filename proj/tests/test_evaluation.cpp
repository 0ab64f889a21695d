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
#include <map>
#include <numeric>
#include <random>

#include "lass/evaluation.hpp"
#include "lass/io.hpp"
#include "test_util.hpp"

using namespace lass;

namespace {

using Sent = std::vector<TokenId>;

// Straightforward corpus BLEU-4 written from the textbook definition.
double oracle_bleu(const std::vector<Sent>& hyp, const std::vector<Sent>& ref) {
  double match[4] = {0, 0, 0, 0}, total[4] = {0, 0, 0, 0}, ref_total[4] = {0, 0, 0, 0};
  double c = 0, r = 0;
  for (std::size_t s = 0; s < hyp.size(); ++s) {
    c += hyp[s].size();
    r += ref[s].size();
    for (int n = 1; n <= 4; ++n) {
      std::map<Sent, int> h, g;
      for (std::size_t i = 0; i + n <= hyp[s].size(); ++i) ++h[Sent(hyp[s].begin() + i, hyp[s].begin() + i + n)];
      for (std::size_t i = 0; i + n <= ref[s].size(); ++i) ++g[Sent(ref[s].begin() + i, ref[s].begin() + i + n)];
      for (const auto& [k, v] : h) {
        total[n - 1] += v;
        auto it = g.find(k);
        if (it != g.end()) match[n - 1] += std::min(v, it->second);
      }
      for (const auto& [k, v] : g) ref_total[n - 1] += v;
    }
  }
  double logp = 0;
  int orders = 0;
  for (int n = 0; n < 4; ++n) {
    if (total[n] == 0 && ref_total[n] == 0) continue;
    const double m = match[n] > 0 ? match[n] : 1e-9;
    logp += std::log(total[n] > 0 ? m / total[n] : 1e-9);
    ++orders;
  }
  if (orders == 0 || c == 0) return 0.0;
  const double bp = c < r ? std::exp(1 - r / c) : 1.0;
  return 100.0 * bp * std::exp(logp / orders);
}

}  // namespace

TEST_CASE("BLEU hand examples") {
  std::vector<Sent> h = {{1, 2, 3, 4, 5, 6}, {7, 8, 9, 10}};
  CHECK(corpus_bleu(h, h) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(corpus_bleu({{4, 5, 6, 7, 8}}, {{10, 11, 12, 13, 14}}) < 1e-6);
  const double bp = corpus_bleu({{10, 11, 12, 13}}, {{10, 11, 12, 13, 14}});
  CHECK(std::fabs(bp - 100.0 * std::exp(1.0 - 5.0 / 4.0)) < 1e-9);
  CHECK(std::fabs(bp - 77.88) < 0.01);
  CHECK_THROWS_AS(corpus_bleu({{1}}, {{1}, {2}}), UsageError);
  CHECK_THROWS_AS(corpus_bleu({}, {}), DataError);
}

TEST_CASE("BLEU agrees with the textbook oracle and ignores sentence order") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    std::vector<Sent> h, r;
    const int n = 1 + rng() % 12;
    for (int s = 0; s < n; ++s) {
      Sent a(1 + rng() % 9), b(1 + rng() % 9);
      for (auto& x : a) x = 3 + rng() % 6;
      for (auto& x : b) x = 3 + rng() % 6;
      h.push_back(a);
      r.push_back(b);
    }
    CHECK(corpus_bleu(h, r) == doctest::Approx(oracle_bleu(h, r)).epsilon(1e-9));
    const double base = corpus_bleu(h, r);
    std::vector<std::size_t> idx(h.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (int k = 0; k < 2; ++k) {
      std::shuffle(idx.begin(), idx.end(), rng);
      std::vector<Sent> hh, rr;
      for (auto i : idx) {
        hh.push_back(h[i]);
        rr.push_back(r[i]);
      }
      CHECK(std::fabs(corpus_bleu(hh, rr) - base) < 1e-9);
    }
  }
}

TEST_CASE("win ratio") {
  std::map<LangPair, double> sys, base;
  for (int i = 0; i < 10; ++i) {
    LangPair p{"en", "l" + std::to_string(i)};
    base[p] = 10.0;
    sys[p] = i < 9 ? 11.0 : 10.0;
  }
  CHECK(win_ratio(sys, base) == 90.0);
  CHECK(win_ratio(base, base) == 0.0);
  for (auto& [p, v] : sys) v = 20.0;
  CHECK(win_ratio(sys, base) == 100.0);
  sys.erase(sys.begin());
  CHECK_THROWS_AS(win_ratio(sys, base), StructuralError);
  CHECK_THROWS_AS(win_ratio({}, {}), UsageError);
}

TEST_CASE("translation accuracy") {
  auto c = generate_corpus(testing::tiny_spec());
  const auto& z = c.registry.at("zz").alphabet;
  const auto& e = c.registry.at("en").alphabet;
  std::vector<Sent> on(10, Sent{z[0], z[1]});
  CHECK(translation_accuracy(on, "zz", c.registry) == 100.0);
  std::vector<Sent> off(10, Sent{e[0], e[1]});
  CHECK(translation_accuracy(off, "zz", c.registry) == 0.0);
  std::vector<Sent> mixed = on;
  for (int i = 0; i < 3; ++i) mixed[i] = off[i];
  CHECK(translation_accuracy(mixed, "zz", c.registry) == doctest::Approx(70.0));
}

TEST_CASE("EvalReport CSV round trip and tier aggregation") {
  EvalReport r;
  r.rows = {{{"en", "a"}, "test", 30.0, 90.0, 200},
            {{"en", "b"}, "test", 20.0, 80.0, 200},
            {{"en", "c"}, "test", 10.0, 70.0, 200},
            {{"en", "a"}, "valid", 1.0, 2.0, 5}};
  auto back = EvalReport::from_csv(r.to_csv());
  REQUIRE(back.rows.size() == 4);
  CHECK(back.rows[1].pair == LangPair{"en", "b"});
  CHECK(back.rows[1].bleu == 20.0);
  CHECK(r.to_csv().rfind("pair,split,bleu,accuracy,n\n", 0) == 0);
  CHECK(r.mean_bleu("test") == doctest::Approx(20.0));
  std::map<LangPair, int> sizes = {{{"en", "a"}, 20000}, {{"en", "b"}, 15000}, {{"en", "c"}, 100}};
  auto tiers = aggregate_tiers(r, "test", sizes, {});
  REQUIRE(tiers.size() == 2);
  CHECK(tiers[0].tier == Tier::kLow);
  CHECK(tiers[0].bleu == 10.0);
  CHECK(tiers[1].tier == Tier::kRich);
  CHECK(tiers[1].bleu == doctest::Approx(25.0));
  CHECK(tiers[1].pairs == 2);
}

TEST_CASE("mask swap with the pair's own masks equals masked evaluation") {
  auto corpus = generate_corpus(testing::tiny_spec());
  auto cfg = testing::tiny_model(corpus.min_vocab());
  auto model = build_model<float>(cfg);
  MaskSet masks(model.params.fingerprint());
  for (const auto& p : corpus.train_pairs()) {
    auto m = random_mask(model.params, 0.5, fnv1a64(p.str()), p);
    m.fingerprint = model.params.fingerprint();
    masks.add(m);
  }
  const LangPair zs{"aa", "zz"};
  auto merged = merge_zero_shot(masks.at({"aa", "en"}), masks.at({"en", "zz"}));
  DecodeOptions opts{.beam_size = 2};
  auto direct = evaluate_pair(cfg, model.params, &merged, corpus, zs, "test", opts, 5);
  auto swapped = mask_swap_eval(cfg, model.params, masks, corpus, zs, {"aa", "en"}, {"en", "zz"}, opts, 5);
  CHECK(direct.row.bleu == swapped.bleu);
  CHECK(direct.row.accuracy == swapped.accuracy);
  CHECK(direct.row.n == 5);
  CHECK(direct.hypotheses.size() == 5);
}
