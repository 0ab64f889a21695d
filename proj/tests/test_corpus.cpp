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

#include <cmath>
#include <set>

#include "lass/corpus.hpp"
#include "lass/io.hpp"
#include "test_util.hpp"

using namespace lass;

TEST_CASE("temperature_probs closed forms") {
  const std::vector<std::int64_t> sizes = {100, 900};
  auto t1 = temperature_probs(sizes, 1.0);
  CHECK(t1[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(t1[1] == doctest::Approx(0.9).epsilon(1e-12));
  auto inf = temperature_probs(sizes, std::numeric_limits<double>::infinity());
  CHECK(inf[0] == 0.5);
  CHECK(inf[1] == 0.5);
  auto t5 = temperature_probs(sizes, 5.0);
  const double a = std::pow(0.1, 0.2), b = std::pow(0.9, 0.2);
  CHECK(std::fabs(t5[0] - a / (a + b)) < 1e-12);
  CHECK(std::fabs(t5[1] - b / (a + b)) < 1e-12);
  CHECK(std::fabs(t5[0] - 0.392) < 1e-3);
  CHECK_THROWS_AS(temperature_probs(sizes, 0.5), PreconditionError);
  CHECK_THROWS_AS(temperature_probs(std::vector<std::int64_t>{0, 5}, 2.0), DataError);
}

TEST_CASE("PairSampler histogram matches the probabilities") {
  std::vector<LangPair> pairs = {{"en", "a"}, {"en", "b"}, {"en", "c"}};
  std::vector<std::int64_t> sizes = {20000, 5000, 1000};
  PairSampler s(pairs, sizes, 5.0, 42);
  std::map<LangPair, int> hist;
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++hist[s.next()];
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(std::fabs(hist[pairs[i]] / double(n) - s.probs()[i]) < 0.01);
  }
  PairSampler one({{"en", "a"}}, std::vector<std::int64_t>{7}, 5.0, 1);
  for (int i = 0; i < 100; ++i) CHECK(one.next() == LangPair{"en", "a"});
}

TEST_CASE("generated corpus: counts, relatedness, alphabets") {
  auto spec = testing::tiny_spec();
  spec.train_sizes[{"en", "aa"}] = 1000;
  spec.train_sizes[{"en", "ab"}] = 100;
  auto c = generate_corpus(spec);
  CHECK(c.at({"en", "aa"}).train.size() == 1000);
  CHECK(c.at({"en", "ab"}).train.size() == 100);
  CHECK(c.at({"zz", "en"}).train.size() == 60);
  CHECK(c.at({"en", "aa"}).valid.size() == 20);
  CHECK(c.at({"aa", "zz"}).zero_shot);
  CHECK(c.at({"aa", "zz"}).train.empty());
  CHECK(c.at({"aa", "zz"}).test.size() == 10);

  const auto& r = c.relatedness;
  for (const auto& l : r.langs) CHECK(r.at(l, l) == 1.0);
  CHECK(r.at("aa", "ab") == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(r.at("aa", "zz") == 0.0);
  CHECK(r.at("en", "aa") == 0.0);

  const auto& za = c.registry.at("zz").alphabet;
  const auto& aa = c.registry.at("aa").alphabet;
  std::vector<TokenId> common;
  std::set_intersection(za.begin(), za.end(), aa.begin(), aa.end(), std::back_inserter(common));
  CHECK(common.empty());

  // Cipher is a bijection onto the alphabet.
  for (const auto& l : c.registry.languages()) {
    std::set<TokenId> img(l.cipher.begin(), l.cipher.end());
    CHECK(img.size() == l.cipher.size());
    CHECK(img.size() == l.alphabet.size());
  }
  // Source and target of a training example are the same pivot sentence.
  const auto& ex = c.at({"aa", "zz"}).test.front();
  REQUIRE(ex.src.size() == ex.tgt.size());
  const auto& A = c.registry.at("aa");
  const auto& Z = c.registry.at("zz");
  for (std::size_t i = 0; i < ex.src.size(); ++i) {
    auto w = std::find(A.cipher.begin(), A.cipher.end(), ex.src[i]) - A.cipher.begin();
    CHECK(Z.cipher[w] == ex.tgt[i]);
  }
}

TEST_CASE("generation is deterministic and splits are disjoint") {
  auto spec = testing::tiny_spec(11);
  auto a = generate_corpus(spec);
  auto b = generate_corpus(spec);
  CHECK(a.vocab.tokens() == b.vocab.tokens());
  for (const auto& [p, d] : a.pairs) {
    CHECK(d.train == b.pairs.at(p).train);
    CHECK(d.test == b.pairs.at(p).test);
  }
  const auto& d = a.at({"en", "aa"});
  std::set<std::vector<TokenId>> seen;
  for (const auto* split : {&d.train, &d.valid, &d.test}) {
    for (const auto& ex : *split) CHECK(seen.insert(ex.src).second);
  }
}

TEST_CASE("corpus spec errors") {
  auto spec = testing::tiny_spec();
  spec.min_len = 0;
  CHECK_THROWS_AS(generate_corpus(spec), ConfigError);
  spec = testing::tiny_spec();
  spec.train_sizes[{"en", "qq"}] = 5;
  CHECK_THROWS_AS(generate_corpus(spec), ConfigError);
}

TEST_CASE("BatchStream partitions, determinism, alphabets") {
  auto spec = testing::tiny_spec();
  spec.train_sizes[{"en", "zz"}] = 20;
  auto c = generate_corpus(spec);
  BatchStream s(c, {"en", "zz"}, 8, 3);
  auto ep = s.epoch();
  REQUIRE(ep.size() == 3);
  CHECK(ep[0].size == 8);
  CHECK(ep[1].size == 8);
  CHECK(ep[2].size == 4);

  BatchStream s1(c, {"aa", "en"}, 16, 5), s2(c, {"aa", "en"}, 16, 5);
  for (int i = 0; i < 30; ++i) {
    auto x = s1.next(), y = s2.next();
    CHECK(x.src == y.src);
    CHECK(x.tgt_out == y.tgt_out);
  }

  const auto& A = c.registry.at("aa").alphabet;
  const auto& E = c.registry.at("en").alphabet;
  auto allowed = [&](TokenId t) {
    return t < kNumSpecials || c.registry.is_language_token(t) ||
           std::binary_search(A.begin(), A.end(), t) || std::binary_search(E.begin(), E.end(), t);
  };
  BatchStream s3(c, {"aa", "en"}, 16, 6);
  for (int i = 0; i < 40; ++i) {
    auto b = s3.next();
    for (TokenId t : b.src) CHECK(allowed(t));
    for (TokenId t : b.tgt_out) CHECK(allowed(t));
  }
}

TEST_CASE("detect_language") {
  auto c = generate_corpus(testing::tiny_spec());
  const auto& a = c.registry.at("aa");
  const auto& z = c.registry.at("zz");
  std::vector<TokenId> pure(z.alphabet.begin(), z.alphabet.begin() + 5);
  CHECK(detect_language(pure, c.registry) == "zz");
  std::vector<TokenId> mix = {z.alphabet[0], z.alphabet[1], c.registry.at("en").alphabet[0],
                              c.registry.at("en").alphabet[1]};
  CHECK(detect_language(mix, c.registry) == "unknown");
  // Mostly wrong-language output with a few target tokens is off-target.
  std::vector<TokenId> off = {z.alphabet[0], z.alphabet[1], z.alphabet[2], a.alphabet[0]};
  CHECK(detect_language(off, c.registry) != "aa");
  CHECK(detect_language(std::vector<TokenId>{}, c.registry) == "unknown");
}

TEST_CASE("bitext parsing and round trip") {
  auto c = generate_corpus(testing::tiny_spec());
  const auto& tok = c.vocab.tokens();
  std::string text = tok[10] + " " + tok[11] + "\t" + tok[12] + "\n" + tok[13] + "\t" + tok[14] +
                     "\n" + tok[15] + "\t" + tok[16] + " " + tok[17] + "\n";
  CHECK(parse_bitext(text, c.vocab).size() == 3);
  CHECK_THROWS_AS(parse_bitext("abc\n", c.vocab), DataError);
  try {
    parse_bitext("abc", c.vocab);
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }

  auto dir = testing::scratch_dir("bitext");
  const auto& split = c.at({"en", "aa"}).train;
  write_bitext(dir / "x.tsv", split, c.vocab);
  CHECK(load_bitext(dir / "x.tsv", c.vocab) == split);

  save_corpus(dir / "data", c);
  auto back = load_corpus(dir / "data");
  CHECK(back.vocab.tokens() == c.vocab.tokens());
  CHECK(back.pivot == c.pivot);
  for (const auto& [p, d] : c.pairs) {
    CHECK(back.at(p).train == d.train);
    CHECK(back.at(p).test == d.test);
    CHECK(back.at(p).zero_shot == d.zero_shot);
  }
  CHECK(back.relatedness.values == c.relatedness.values);
  std::filesystem::remove_all(dir);
}

TEST_CASE("resource tiers") {
  TierThresholds th;
  CHECK(tier_of(1000, th) == Tier::kLow);
  CHECK(tier_of(5000, th) == Tier::kMedium);
  CHECK(tier_of(20000, th) == Tier::kRich);
  CHECK(to_string(Tier::kRich) == "rich");
}
