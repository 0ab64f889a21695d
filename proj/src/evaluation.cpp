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
#include "lass/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "lass/errors.hpp"

namespace lass {

namespace {

struct Hyp {
  std::vector<TokenId> prefix;  // starts with the target-language token
  double logprob = 0.0;
};

double normalized(double logprob, std::size_t generated, double penalty) {
  return logprob / std::pow(static_cast<double>(std::max<std::size_t>(generated, 1)),
                            penalty);
}

std::vector<TokenId> strip(const std::vector<TokenId>& prefix) {
  std::vector<TokenId> out(prefix.begin() + 1, prefix.end());
  if (!out.empty() && out.back() == kEos) out.pop_back();
  return out;
}

std::vector<std::vector<TokenId>> greedy(const ModelConfig& cfg, const ParamStore& params,
                                         const EncoderMemory<float>& memory,
                                         TokenId tgt_lang_token) {
  const int n = memory.batch;
  const auto V = static_cast<std::size_t>(cfg.vocab_size);
  std::vector<std::vector<TokenId>> prefix(static_cast<std::size_t>(n), {tgt_lang_token});
  std::vector<int> alive(static_cast<std::size_t>(n));
  std::iota(alive.begin(), alive.end(), 0);
  while (!alive.empty() && static_cast<int>(prefix[static_cast<std::size_t>(alive[0])].size()) <=
                               cfg.max_seq_len) {
    std::vector<std::vector<TokenId>> batch;
    for (int r : alive) batch.push_back(prefix[static_cast<std::size_t>(r)]);
    auto lp = decode_next_logprobs(cfg, params, memory.select(alive), batch);
    std::vector<int> next_alive;
    for (std::size_t i = 0; i < alive.size(); ++i) {
      const double* row = lp.data() + i * V;
      TokenId best = kUnk;
      for (std::size_t t = 1; t < V; ++t) {
        if (row[t] > row[static_cast<std::size_t>(best)]) best = static_cast<TokenId>(t);
      }
      auto& p = prefix[static_cast<std::size_t>(alive[i])];
      p.push_back(best);
      if (best != kEos) next_alive.push_back(alive[i]);
    }
    alive = std::move(next_alive);
  }
  std::vector<std::vector<TokenId>> out;
  for (const auto& p : prefix) out.push_back(strip(p));
  return out;
}

std::vector<std::vector<TokenId>> beam(const ModelConfig& cfg, const ParamStore& params,
                                       const EncoderMemory<float>& memory,
                                       TokenId tgt_lang_token, const DecodeOptions& opts) {
  const int n = memory.batch;
  const auto V = static_cast<std::size_t>(cfg.vocab_size);
  const auto k = static_cast<std::size_t>(opts.beam_size);
  std::vector<std::vector<Hyp>> beams(static_cast<std::size_t>(n),
                                      std::vector<Hyp>{Hyp{{tgt_lang_token}, 0.0}});
  std::vector<std::vector<Hyp>> finished(static_cast<std::size_t>(n));
  std::size_t len = 1;
  for (; len <= static_cast<std::size_t>(cfg.max_seq_len); ++len) {
    std::vector<int> rows;
    std::vector<std::vector<TokenId>> prefixes;
    std::vector<std::pair<int, int>> owner;  // (sentence, beam index)
    for (int s = 0; s < n; ++s) {
      if (finished[static_cast<std::size_t>(s)].size() >= k) continue;
      const auto& b = beams[static_cast<std::size_t>(s)];
      for (std::size_t j = 0; j < b.size(); ++j) {
        rows.push_back(s);
        prefixes.push_back(b[j].prefix);
        owner.emplace_back(s, static_cast<int>(j));
      }
    }
    if (rows.empty()) break;
    auto lp = decode_next_logprobs(cfg, params, memory.select(rows), prefixes);

    struct Cand {
      double score;
      int beam;
      TokenId token;
    };
    std::size_t i = 0;
    while (i < owner.size()) {
      const int s = owner[i].first;
      std::vector<Cand> cands;
      std::size_t j = i;
      for (; j < owner.size() && owner[j].first == s; ++j) {
        const auto& h = beams[static_cast<std::size_t>(s)][static_cast<std::size_t>(owner[j].second)];
        const double* row = lp.data() + j * V;
        // Top 2k tokens of this hypothesis suffice for the top 2k overall.
        std::vector<TokenId> ids(V - 1);
        std::iota(ids.begin(), ids.end(), TokenId{1});
        const std::size_t m = std::min(2 * k, ids.size());
        std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(m), ids.end(),
                          [&](TokenId a, TokenId b) {
                            return row[a] > row[b] || (row[a] == row[b] && a < b);
                          });
        for (std::size_t c = 0; c < m; ++c) {
          cands.push_back({h.logprob + row[ids[c]], owner[j].second, ids[c]});
        }
      }
      std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        return a.score > b.score;
      });
      auto& fin = finished[static_cast<std::size_t>(s)];
      const auto& old = beams[static_cast<std::size_t>(s)];
      std::vector<Hyp> next;
      for (const auto& c : cands) {
        if (next.size() >= k) break;
        Hyp h{old[static_cast<std::size_t>(c.beam)].prefix, c.score};
        h.prefix.push_back(c.token);
        if (c.token == kEos) {
          if (fin.size() < k) fin.push_back(std::move(h));
        } else {
          next.push_back(std::move(h));
        }
      }
      beams[static_cast<std::size_t>(s)] = std::move(next);
      i = j;
    }
  }
  std::vector<std::vector<TokenId>> out;
  for (int s = 0; s < n; ++s) {
    auto& fin = finished[static_cast<std::size_t>(s)];
    if (fin.empty()) fin = beams[static_cast<std::size_t>(s)];
    const Hyp* best = nullptr;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const auto& h : fin) {
      const double sc = normalized(h.logprob, h.prefix.size() - 1, opts.length_penalty);
      if (!best || sc > best_score) {
        best = &h;
        best_score = sc;
      }
    }
    out.push_back(best ? strip(best->prefix) : std::vector<TokenId>{});
  }
  return out;
}

}  // namespace

MaskedView::MaskedView(const ParamStore& params, const ParameterMask* mask)
    : base_(&params), mask_(mask != nullptr) {
  if (mask) view_ = apply_mask(params, *mask);
}

std::vector<std::vector<TokenId>> translate_batch(
    const ModelConfig& cfg, const ParamStore& params,
    const std::vector<std::vector<TokenId>>& sources, TokenId tgt_lang_token,
    const DecodeOptions& opts) {
  if (opts.beam_size < 1) throw ConfigError("eval.beam_size must be >= 1");
  std::vector<std::vector<TokenId>> out;
  out.reserve(sources.size());
  const auto step = static_cast<std::size_t>(std::max(1, opts.batch_size));
  for (std::size_t i = 0; i < sources.size(); i += step) {
    std::vector<std::vector<TokenId>> chunk(
        sources.begin() + static_cast<std::ptrdiff_t>(i),
        sources.begin() + static_cast<std::ptrdiff_t>(std::min(sources.size(), i + step)));
    auto memory = encode(cfg, params, chunk);
    auto hyps = opts.beam_size == 1 ? greedy(cfg, params, memory, tgt_lang_token)
                                    : beam(cfg, params, memory, tgt_lang_token, opts);
    for (auto& h : hyps) out.push_back(std::move(h));
  }
  return out;
}

std::vector<TokenId> translate(const ModelConfig& cfg, const ParamStore& params,
                               const ParameterMask* mask,
                               std::span<const TokenId> source,
                               TokenId tgt_lang_token, int beam_size) {
  MaskedView view(params, mask);
  DecodeOptions opts;
  opts.beam_size = beam_size;
  return translate_batch(cfg, view.params(),
                         {std::vector<TokenId>(source.begin(), source.end())},
                         tgt_lang_token, opts)
      .front();
}

double corpus_bleu(const std::vector<std::vector<TokenId>>& hypotheses,
                   const std::vector<std::vector<TokenId>>& references) {
  if (hypotheses.size() != references.size()) {
    throw UsageError("corpus_bleu: " + std::to_string(hypotheses.size()) +
                     " hypotheses vs " + std::to_string(references.size()) +
                     " references");
  }
  if (hypotheses.empty()) throw DataError("corpus_bleu: BLEU is undefined on an empty corpus");
  constexpr int kOrder = 4;
  std::array<double, kOrder> match{}, total{}, ref_total{};
  double hyp_len = 0.0, ref_len = 0.0;
  std::map<std::vector<TokenId>, int> counts;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto& h = hypotheses[s];
    const auto& r = references[s];
    hyp_len += static_cast<double>(h.size());
    ref_len += static_cast<double>(r.size());
    for (int n = 1; n <= kOrder; ++n) {
      const auto un = static_cast<std::size_t>(n);
      counts.clear();
      if (r.size() >= un) {
        ref_total[un - 1] += static_cast<double>(r.size() - un + 1);
        for (std::size_t i = 0; i + un <= r.size(); ++i) {
          ++counts[std::vector<TokenId>(r.begin() + static_cast<std::ptrdiff_t>(i),
                                        r.begin() + static_cast<std::ptrdiff_t>(i + un))];
        }
      }
      if (h.size() < un) continue;
      total[un - 1] += static_cast<double>(h.size() - un + 1);
      for (std::size_t i = 0; i + un <= h.size(); ++i) {
        auto it = counts.find(std::vector<TokenId>(
            h.begin() + static_cast<std::ptrdiff_t>(i),
            h.begin() + static_cast<std::ptrdiff_t>(i + un)));
        if (it != counts.end() && it->second > 0) {
          --it->second;
          match[un - 1] += 1.0;
        }
      }
    }
  }
  if (hyp_len == 0.0) return 0.0;
  double log_sum = 0.0;
  int orders = 0;
  for (int n = 0; n < kOrder; ++n) {
    if (total[static_cast<std::size_t>(n)] == 0.0 && ref_total[static_cast<std::size_t>(n)] == 0.0) {
      continue;
    }
    ++orders;
    const double m = match[static_cast<std::size_t>(n)];
    const double t = std::max(total[static_cast<std::size_t>(n)], 1.0);
    log_sum += std::log((m > 0.0 ? m : 1e-9) / t);
  }
  const double bp = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
  return std::clamp(100.0 * bp * std::exp(log_sum / std::max(orders, 1)), 0.0, 100.0);
}

double win_ratio(const std::map<LangPair, double>& system,
                 const std::map<LangPair, double>& baseline) {
  if (system.size() != baseline.size() ||
      !std::equal(system.begin(), system.end(), baseline.begin(),
                  [](const auto& a, const auto& b) { return a.first == b.first; })) {
    throw StructuralError("win_ratio: system and baseline cover different pairs");
  }
  if (system.empty()) throw UsageError("win_ratio: no pairs to compare");
  int wins = 0;
  for (const auto& [pair, score] : system) wins += score > baseline.at(pair);
  return 100.0 * wins / static_cast<double>(system.size());
}

double translation_accuracy(const std::vector<std::vector<TokenId>>& hypotheses,
                            const std::string& target_lang,
                            const LanguageRegistry& registry) {
  registry.at(target_lang);
  if (hypotheses.empty()) return 0.0;
  int hits = 0;
  for (const auto& h : hypotheses) hits += detect_language(h, registry) == target_lang;
  return 100.0 * hits / static_cast<double>(hypotheses.size());
}

std::string EvalReport::to_csv() const {
  std::string out = "pair,split,bleu,accuracy,n\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%d\n", r.bleu, r.accuracy, r.n);
    out += r.pair.str() + "," + r.split + buf;
  }
  return out;
}

EvalReport EvalReport::from_csv(std::string_view text) {
  EvalReport rep;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    if (++line_no == 1 || line.empty()) continue;
    std::istringstream ls(line);
    std::string pair, split, bleu, acc, n;
    if (!std::getline(ls, pair, ',') || !std::getline(ls, split, ',') ||
        !std::getline(ls, bleu, ',') || !std::getline(ls, acc, ',') ||
        !std::getline(ls, n, ',')) {
      throw DataError("eval report line " + std::to_string(line_no) + " is malformed");
    }
    rep.rows.push_back({LangPair::parse(pair), split, std::stod(bleu), std::stod(acc),
                        std::stoi(n)});
  }
  return rep;
}

std::map<LangPair, double> EvalReport::bleu_by_pair(std::string_view split) const {
  std::map<LangPair, double> out;
  for (const auto& r : rows) {
    if (r.split == split) out[r.pair] = r.bleu;
  }
  return out;
}

double EvalReport::mean_bleu(std::string_view split) const {
  double s = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.split == split) {
      s += r.bleu;
      ++n;
    }
  }
  return n ? s / n : 0.0;
}

double EvalReport::mean_accuracy(std::string_view split) const {
  double s = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.split == split) {
      s += r.accuracy;
      ++n;
    }
  }
  return n ? s / n : 0.0;
}

std::vector<TierRow> aggregate_tiers(const EvalReport& report, std::string_view split,
                                     const std::map<LangPair, int>& sizes,
                                     const TierThresholds& thresholds) {
  std::map<Tier, TierRow> acc;
  for (const auto& r : report.rows) {
    if (r.split != split) continue;
    auto it = sizes.find(r.pair);
    if (it == sizes.end()) continue;
    const Tier t = tier_of(it->second, thresholds);
    auto& row = acc[t];
    row.tier = t;
    row.bleu += r.bleu;
    row.accuracy += r.accuracy;
    ++row.pairs;
  }
  std::vector<TierRow> out;
  for (auto& [t, row] : acc) {
    row.bleu /= row.pairs;
    row.accuracy /= row.pairs;
    out.push_back(row);
  }
  return out;
}

PairEval evaluate_pair(const ModelConfig& cfg, const ParamStore& params,
                       const ParameterMask* mask, const CorpusSet& corpus,
                       const LangPair& pair, const std::string& split,
                       const DecodeOptions& opts, int max_sentences) {
  const auto& data = corpus.at(pair);
  const std::vector<SentencePair>* examples = nullptr;
  if (split == "test") {
    examples = &data.test;
  } else if (split == "valid") {
    examples = &data.valid;
  } else if (split == "train") {
    examples = &data.train;
  } else {
    throw UsageError("unknown split '" + split + "'");
  }
  std::size_t n = examples->size();
  if (max_sentences > 0) n = std::min(n, static_cast<std::size_t>(max_sentences));
  if (n == 0) throw DataError("split " + split + " of " + pair.str() + " is empty");

  std::vector<std::vector<TokenId>> sources, refs;
  for (std::size_t i = 0; i < n; ++i) {
    sources.push_back(corpus.source_prefix(pair, (*examples)[i].src));
    refs.push_back((*examples)[i].tgt);
  }
  MaskedView view(params, mask);
  PairEval out;
  out.hypotheses = translate_batch(cfg, view.params(), sources,
                                   corpus.registry.token_of(pair.tgt), opts);
  out.row.pair = pair;
  out.row.split = split;
  out.row.n = static_cast<int>(n);
  out.row.bleu = corpus_bleu(out.hypotheses, refs);
  out.row.accuracy = translation_accuracy(out.hypotheses, pair.tgt, corpus.registry);
  return out;
}

EvalRow mask_swap_eval(const ModelConfig& cfg, const ParamStore& params,
                       const MaskSet& masks, const CorpusSet& corpus,
                       const LangPair& pair, const LangPair& encoder_donor,
                       const LangPair& decoder_donor, const DecodeOptions& opts,
                       int max_sentences) {
  const auto mask =
      combine_encoder_decoder(masks.at(encoder_donor), masks.at(decoder_donor), pair);
  return evaluate_pair(cfg, params, &mask, corpus, pair, "test", opts, max_sentences).row;
}

}  // namespace lass
