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
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lass/model.hpp"
#include "lass/types.hpp"

namespace lass {

class Vocabulary {
 public:
  Vocabulary();  // specials only

  TokenId add(const std::string& token);
  TokenId id(std::string_view token) const;  // kUnk when absent
  std::optional<TokenId> find(std::string_view token) const;
  const std::string& token(TokenId id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// One synthetic language: a word-level substitution cipher over the pivot
// vocabulary. cipher[w] is the surface token for pivot word w.
struct LanguageSpec {
  std::string lang_id;
  std::string family;  // empty for the pivot and for isolates
  TokenId token = kUnk;  // language-identifying token
  std::vector<TokenId> cipher;
  std::vector<TokenId> alphabet;  // sorted distinct surface tokens
  std::uint64_t relatedness_seed = 0;
};

class LanguageRegistry {
 public:
  void add(LanguageSpec lang, int vocab_size);
  void finalize(int vocab_size);

  const LanguageSpec& at(std::string_view lang_id) const;
  bool contains(std::string_view lang_id) const;
  const std::vector<LanguageSpec>& languages() const { return langs_; }
  TokenId token_of(std::string_view lang_id) const { return at(lang_id).token; }
  // Languages (indices into languages()) whose alphabet holds `id`.
  std::span<const int> owners(TokenId id) const;
  bool is_language_token(TokenId id) const;

 private:
  std::vector<LanguageSpec> langs_;
  std::vector<std::vector<int>> owners_;
  std::vector<char> lang_token_;
};

// Square matrix over languages (registry order) of the fraction of pivot
// words two ciphers map to the same surface token.
struct RelatednessMatrix {
  std::vector<std::string> langs;
  std::vector<std::vector<double>> values;

  double at(std::string_view a, std::string_view b) const;
};

RelatednessMatrix measure_relatedness(const LanguageRegistry& registry,
                                      int pivot_words);

struct LanguageFamily {
  std::string name;
  std::vector<std::string> languages;
  double relatedness = 0.0;  // pairwise shared-mapping fraction inside the family
};

struct CorpusSpec {
  std::string pivot = "en";
  std::vector<LanguageFamily> families;
  int pivot_words = 100;
  int min_len = 3;
  int max_len = 10;
  double zipf = 1.0;
  // Training directions and their train-split sizes.
  std::map<LangPair, int> train_sizes;
  int valid_size = 200;
  int test_size = 200;
  // Directions with a test split only.
  std::vector<LangPair> zero_shot;
  int zero_shot_test_size = 100;
  std::uint64_t seed = 1;

  // English-centric topology: pivot<->lang in both directions with the given
  // per-language sizes, plus every non-pivot X->Y as a zero-shot direction.
  static CorpusSpec english_centric(std::vector<LanguageFamily> families,
                                    const std::map<std::string, int>& sizes,
                                    bool with_zero_shot, std::uint64_t seed);
};

struct PairData {
  LangPair pair;
  std::vector<SentencePair> train;
  std::vector<SentencePair> valid;
  std::vector<SentencePair> test;
  bool zero_shot = false;
};

struct CorpusSet {
  std::string pivot;
  int pivot_words = 0;
  Vocabulary vocab;
  LanguageRegistry registry;
  std::map<LangPair, PairData> pairs;
  RelatednessMatrix relatedness;

  const PairData& at(const LangPair& pair) const;
  std::vector<LangPair> train_pairs() const;  // non-zero-shot, sorted
  std::vector<LangPair> zero_shot_pairs() const;
  std::map<LangPair, int> sizes() const;  // train counts of training pairs
  // Specials + language tokens + every surface token.
  int min_vocab() const { return vocab.size(); }
  std::vector<TokenId> source_prefix(const LangPair& pair,
                                     std::span<const TokenId> sentence) const;
};

CorpusSet generate_corpus(const CorpusSpec& spec);

// p_i proportional to (D_i / sum_j D_j)^(1/T). T may be +infinity (uniform).
std::vector<double> temperature_probs(std::span<const std::int64_t> sizes,
                                      double temperature);

// Seeded sampler over directions by temperature_probs.
class PairSampler {
 public:
  PairSampler(std::vector<LangPair> pairs, std::span<const std::int64_t> sizes,
              double temperature, std::uint64_t seed);
  const LangPair& next();
  const std::vector<double>& probs() const { return probs_; }
  const std::vector<LangPair>& pairs() const { return pairs_; }

 private:
  std::vector<LangPair> pairs_;
  std::vector<double> probs_;
  std::mt19937_64 rng_;
  std::discrete_distribution<std::size_t> dist_;
};

// Endless stream of single-direction batches over one pair's train split.
// Each epoch visits the examples in a seeded permutation; the final batch of
// an epoch may be short. Batches are padded to their longest sequence.
class BatchStream {
 public:
  BatchStream(const CorpusSet& corpus, const LangPair& pair, int batch_size,
              std::uint64_t seed);

  Batch next();
  // The batches of one full epoch from the current epoch boundary.
  std::vector<Batch> epoch();
  std::int64_t epoch_index() const { return epoch_; }

 private:
  void reshuffle();

  const PairData* data_;
  TokenId src_token_;
  TokenId tgt_token_;
  int batch_size_;
  std::uint64_t seed_;
  std::int64_t epoch_ = -1;
  std::size_t pos_ = 0;
  std::int64_t next_id_ = 0;
  std::vector<std::uint32_t> order_;
};

// Batches covering a split in order (evaluation use).
std::vector<Batch> split_batches(const CorpusSet& corpus, const LangPair& pair,
                                 std::span<const SentencePair> split,
                                 int batch_size);

// Language owning a strict majority of the non-special tokens, with a count
// above every other language; "unknown" otherwise or when empty.
std::string detect_language(std::span<const TokenId> tokens,
                            const LanguageRegistry& registry);

// TSV bitext: "source tokens<TAB>target tokens" per line, tokens separated by
// spaces. Unknown tokens map to kUnk.
std::vector<SentencePair> load_bitext(const std::filesystem::path& path,
                                      const Vocabulary& vocab);
std::vector<SentencePair> parse_bitext(std::string_view text,
                                       const Vocabulary& vocab);
void write_bitext(const std::filesystem::path& path,
                  std::span<const SentencePair> split, const Vocabulary& vocab);

std::string bitext_file_name(const LangPair& pair, std::string_view split);

// data/ directory: bitext files, registry.json, corpus.json.
void save_corpus(const std::filesystem::path& dir, const CorpusSet& corpus);
CorpusSet load_corpus(const std::filesystem::path& dir);

enum class Tier { kLow, kMedium, kRich };
std::string_view to_string(Tier t);

struct TierThresholds {
  std::int64_t medium_min = 2000;
  std::int64_t rich_min = 10000;
};
Tier tier_of(std::int64_t train_size, const TierThresholds& th);

}  // namespace lass
