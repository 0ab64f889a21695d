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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lass/param_store.hpp"
#include "lass/types.hpp"

namespace lass {

// Reserved token ids. Language tokens follow the specials; the decoder's
// begin-of-sequence token is the target-language token.
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kEos = 2;
inline constexpr int kNumSpecials = 3;

struct ModelConfig {
  int num_layers = 2;  // per stack
  int d_model = 64;
  int num_heads = 4;
  int d_ff = 128;
  int vocab_size = 512;
  int max_seq_len = 16;
  double dropout = 0.1;
  double label_smoothing = 0.1;
  std::uint64_t seed = 1;

  // Throws ConfigError naming the offending field. `min_vocab` is the number
  // of ids the data needs (specials + language tokens + surface tokens).
  void validate(int min_vocab = kNumSpecials) const;

  // "key=value" lines in a fixed key order.
  std::string to_kv() const;
  static ModelConfig from_kv(const std::map<std::string, std::string>& kv);
};

// Closed-form parameter count for the canonical naming scheme.
std::size_t expected_param_count(const ModelConfig& cfg);

// One source/target example without specials.
struct SentencePair {
  std::vector<TokenId> src;
  std::vector<TokenId> tgt;

  bool operator==(const SentencePair&) const = default;
};

// A padded single-direction batch. Sources carry the [source-language,
// target-language] token prefix; decoder inputs are the target shifted right
// behind the target-language token, decoder outputs end with kEos.
struct Batch {
  LangPair pair;
  std::int64_t id = 0;
  int size = 0;
  int src_len = 0;
  int tgt_len = 0;
  std::vector<TokenId> src;  // [size, src_len]
  std::vector<int> src_lengths;
  std::vector<TokenId> tgt_in;  // [size, tgt_len]
  std::vector<TokenId> tgt_out;
  std::vector<int> tgt_lengths;

  static Batch build(const LangPair& pair, TokenId src_lang_token,
                     TokenId tgt_lang_token,
                     std::span<const SentencePair> examples,
                     std::int64_t id = 0);
};

// Source sequence as the encoder sees it.
std::vector<TokenId> prefixed_source(TokenId src_lang_token,
                                     TokenId tgt_lang_token,
                                     std::span<const TokenId> sentence);

template <typename T>
struct BasicTransformer {
  ModelConfig config;
  BasicParamStore<T> params;
};

using TransformerModel = BasicTransformer<float>;

// Deterministic given cfg.seed: Xavier-uniform projection matrices, small
// uniform embeddings, zero biases, unit layer-norm gains.
template <typename T>
BasicTransformer<T> build_model(const ModelConfig& cfg);

// Checks that `params` follows the naming scheme and shapes implied by cfg.
template <typename T>
void check_model_params(const ModelConfig& cfg, const BasicParamStore<T>& params);

struct ForwardOptions {
  bool train = false;      // enables dropout
  bool backward = false;   // accumulate gradients into the store
  std::mt19937_64* rng = nullptr;
  bool keep_logits = false;
};

template <typename T>
struct LossOutput {
  double loss = 0.0;
  int target_tokens = 0;
  std::vector<T> logits;  // [size * tgt_len, vocab] when requested
};

// Label-smoothed cross-entropy over non-padding target tokens. `params` must
// follow the layout of cfg; it may be a masked copy of the model weights.
template <typename T>
LossOutput<T> forward_loss(const ModelConfig& cfg, BasicParamStore<T>& params,
                           const Batch& batch, const ForwardOptions& opts = {});

// Encoder states for a set of sources (each already prefixed).
template <typename T>
struct EncoderMemory {
  int batch = 0;
  int len = 0;
  int d_model = 0;
  std::vector<T> states;  // [batch, len, d_model]
  std::vector<int> lengths;

  // Memory rows in the given order (rows may repeat).
  EncoderMemory select(std::span<const int> rows) const;
};

template <typename T>
EncoderMemory<T> encode(const ModelConfig& cfg, const BasicParamStore<T>& params,
                        const std::vector<std::vector<TokenId>>& sources);

// Log-probabilities of the next token after each prefix, [n, vocab]. All
// prefixes share one length and prefix b attends to memory row b.
template <typename T>
std::vector<double> decode_next_logprobs(
    const ModelConfig& cfg, const BasicParamStore<T>& params,
    const EncoderMemory<T>& memory,
    const std::vector<std::vector<TokenId>>& prefixes);

// Next-token distribution for a single prefix (which starts with the target
// language token).
template <typename T>
std::vector<double> decode_step(const ModelConfig& cfg,
                                const BasicParamStore<T>& params,
                                const EncoderMemory<T>& memory,
                                std::span<const TokenId> prefix);

}  // namespace lass
