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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lass/corpus.hpp"
#include "lass/mask.hpp"
#include "lass/model.hpp"

namespace lass {

struct DecodeOptions {
  int beam_size = 1;             // 1 = greedy
  double length_penalty = 0.6;   // hypothesis score = logprob / length^penalty
  int batch_size = 64;           // sentences decoded together
};

// Weights as the forward pass sees them for one sub-network: a copy of the
// parameters with masked-out maskable weights set to zero, built once.
class MaskedView {
 public:
  MaskedView(const ParamStore& params, const ParameterMask* mask);
  const ParamStore& params() const { return mask_ ? view_ : *base_; }

 private:
  const ParamStore* base_;
  bool mask_ = false;
  ParamStore view_;
};

// Translations (target tokens without the language token or kEos) for
// sources that already carry their language-token prefix.
std::vector<std::vector<TokenId>> translate_batch(
    const ModelConfig& cfg, const ParamStore& params,
    const std::vector<std::vector<TokenId>>& sources, TokenId tgt_lang_token,
    const DecodeOptions& opts);

// Single sentence against the masked view params ⊙ mask.
std::vector<TokenId> translate(const ModelConfig& cfg, const ParamStore& params,
                               const ParameterMask* mask,
                               std::span<const TokenId> source,
                               TokenId tgt_lang_token, int beam_size);

// Corpus BLEU-4 with brevity penalty, in [0, 100]. A zero n-gram match count
// is floored at 1e-9. An order with no n-grams on either side (every sentence
// shorter than n) is left out of the geometric mean.
double corpus_bleu(const std::vector<std::vector<TokenId>>& hypotheses,
                   const std::vector<std::vector<TokenId>>& references);

// 100 * share of pairs where system > baseline (ties are not wins).
double win_ratio(const std::map<LangPair, double>& system,
                 const std::map<LangPair, double>& baseline);

// 100 * share of hypotheses detected as `target_lang`.
double translation_accuracy(const std::vector<std::vector<TokenId>>& hypotheses,
                            const std::string& target_lang,
                            const LanguageRegistry& registry);

struct EvalRow {
  LangPair pair;
  std::string split;
  double bleu = 0.0;
  double accuracy = 0.0;
  int n = 0;
};

struct TierRow {
  Tier tier = Tier::kLow;
  double bleu = 0.0;
  double accuracy = 0.0;
  int pairs = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;

  std::string to_csv() const;
  static EvalReport from_csv(std::string_view text);
  std::map<LangPair, double> bleu_by_pair(std::string_view split) const;
  double mean_bleu(std::string_view split) const;
  double mean_accuracy(std::string_view split) const;
};

// Means over the rows of `split` grouped by the resource tier of each pair's
// training size. Tiers without pairs are omitted.
std::vector<TierRow> aggregate_tiers(const EvalReport& report, std::string_view split,
                                     const std::map<LangPair, int>& sizes,
                                     const TierThresholds& thresholds);

struct PairEval {
  EvalRow row;
  std::vector<std::vector<TokenId>> hypotheses;
};

// Decodes `split` of `pair` (at most max_sentences, 0 = all) under the masked
// view and scores it.
PairEval evaluate_pair(const ModelConfig& cfg, const ParamStore& params,
                       const ParameterMask* mask, const CorpusSet& corpus,
                       const LangPair& pair, const std::string& split,
                       const DecodeOptions& opts, int max_sentences = 0);

// Encoder bits from `encoder_donor`'s mask, decoder bits from
// `decoder_donor`'s, evaluated on the test split of `pair`.
EvalRow mask_swap_eval(const ModelConfig& cfg, const ParamStore& params,
                       const MaskSet& masks, const CorpusSet& corpus,
                       const LangPair& pair, const LangPair& encoder_donor,
                       const LangPair& decoder_donor, const DecodeOptions& opts,
                       int max_sentences = 0);

}  // namespace lass
