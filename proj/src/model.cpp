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
#include "lass/model.hpp"

#include <cmath>
#include <sstream>

#include "lass/errors.hpp"
#include "lass/graph.hpp"
#include "lass/naming.hpp"

namespace lass {

namespace {

int parse_int(const std::map<std::string, std::string>& kv, const char* key,
              int fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    int v = std::stoi(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("model.") + key + " expects an integer, got '" +
                      it->second + "'");
  }
}

double parse_double(const std::map<std::string, std::string>& kv, const char* key,
                    double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("model.") + key + " expects a real, got '" +
                      it->second + "'");
  }
}

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
};

std::vector<TensorSpec> tensor_specs(const ModelConfig& cfg) {
  const auto d = static_cast<std::size_t>(cfg.d_model);
  const auto ff = static_cast<std::size_t>(cfg.d_ff);
  std::vector<TensorSpec> specs;
  specs.push_back({"embed.tok", {static_cast<std::size_t>(cfg.vocab_size), d}});
  specs.push_back({"embed.pos", {static_cast<std::size_t>(cfg.max_seq_len), d}});
  auto projection = [&](const std::string& stack, int l, const std::string& c) {
    specs.push_back({param_name(stack, l, c, "weight"), {d, d}});
    specs.push_back({param_name(stack, l, c, "bias"), {d}});
  };
  auto ffn = [&](const std::string& stack, int l) {
    specs.push_back({param_name(stack, l, "ffn_1", "weight"), {d, ff}});
    specs.push_back({param_name(stack, l, "ffn_1", "bias"), {ff}});
    specs.push_back({param_name(stack, l, "ffn_2", "weight"), {ff, d}});
    specs.push_back({param_name(stack, l, "ffn_2", "bias"), {d}});
  };
  auto norm = [&](const std::string& stack, int l, int idx) {
    const std::string c = "ln_" + std::to_string(idx);
    specs.push_back({param_name(stack, l, c, "gain"), {d}});
    specs.push_back({param_name(stack, l, c, "bias"), {d}});
  };
  for (int l = 0; l < cfg.num_layers; ++l) {
    for (const char* p : {"attn_q", "attn_k", "attn_v", "attn_o"}) projection("enc", l, p);
    ffn("enc", l);
    norm("enc", l, 1);
    norm("enc", l, 2);
  }
  for (int l = 0; l < cfg.num_layers; ++l) {
    for (const char* p : {"self_q", "self_k", "self_v", "self_o", "cross_q",
                          "cross_k", "cross_v", "cross_o"}) {
      projection("dec", l, p);
    }
    ffn("dec", l);
    for (int i = 1; i <= 3; ++i) norm("dec", l, i);
  }
  return specs;
}

// Graph construction shared by training (mutable store, gradients on) and
// inference (const store, no tape).
template <typename T, typename Store>
class Net {
 public:
  using Var = typename Graph<T>::Var;

  Net(Graph<T>& g, Store& store, const ModelConfig& cfg, bool train,
      std::mt19937_64* rng)
      : g_(g), store_(store), cfg_(cfg), train_(train), rng_(rng) {}

  Var p(const std::string& name) { return g_.parameter(store_.at(name)); }

  Var drop(Var x) {
    if (!train_ || cfg_.dropout <= 0.0) return x;
    if (!rng_) throw UsageError("training forward pass needs a dropout RNG");
    return g_.dropout(x, static_cast<T>(cfg_.dropout), *rng_);
  }

  Var project(Var x, const std::string& stack, int l, const std::string& c) {
    return g_.linear(x, p(param_name(stack, l, c, "weight")),
                     p(param_name(stack, l, c, "bias")));
  }

  Var norm(Var x, const std::string& stack, int l, int idx) {
    const std::string c = "ln_" + std::to_string(idx);
    return g_.layer_norm(x, p(param_name(stack, l, c, "gain")),
                         p(param_name(stack, l, c, "bias")));
  }

  Var embed(std::span<const TokenId> ids, int batch, int len) {
    if (len > cfg_.max_seq_len) {
      throw CapacityError("sequence length " + std::to_string(len) +
                          " exceeds max_seq_len " +
                          std::to_string(cfg_.max_seq_len));
    }
    std::vector<TokenId> pos(static_cast<std::size_t>(batch) * len);
    for (std::size_t r = 0; r < pos.size(); ++r) {
      pos[r] = static_cast<TokenId>(r % static_cast<std::size_t>(len));
    }
    Var tok = g_.embed(p("embed.tok"), ids,
                       static_cast<T>(std::sqrt(static_cast<double>(cfg_.d_model))));
    Var where = g_.embed(p("embed.pos"), pos, T(1));
    return drop(g_.add(tok, where));
  }

  Var ffn(Var x, const std::string& stack, int l) {
    Var h = g_.gelu(project(x, stack, l, "ffn_1"));
    return project(h, stack, l, "ffn_2");
  }

  Var encoder(std::span<const TokenId> src, int batch, int len,
              std::span<const int> lengths) {
    Var x = embed(src, batch, len);
    AttentionShape shape{batch, len, len, cfg_.num_heads, lengths, false};
    for (int l = 0; l < cfg_.num_layers; ++l) {
      Var a = g_.attention(project(x, "enc", l, "attn_q"),
                           project(x, "enc", l, "attn_k"),
                           project(x, "enc", l, "attn_v"), shape);
      a = project(a, "enc", l, "attn_o");
      x = norm(g_.add(x, drop(a)), "enc", l, 1);
      x = norm(g_.add(x, drop(ffn(x, "enc", l))), "enc", l, 2);
    }
    return x;
  }

  Var decoder(std::span<const TokenId> tgt_in, int batch, int len,
              std::span<const int> tgt_lengths, Var memory, int mem_len,
              std::span<const int> mem_lengths) {
    Var y = embed(tgt_in, batch, len);
    AttentionShape self_shape{batch, len, len, cfg_.num_heads, tgt_lengths, true};
    AttentionShape cross_shape{batch, len, mem_len, cfg_.num_heads, mem_lengths,
                               false};
    for (int l = 0; l < cfg_.num_layers; ++l) {
      Var a = g_.attention(project(y, "dec", l, "self_q"),
                           project(y, "dec", l, "self_k"),
                           project(y, "dec", l, "self_v"), self_shape);
      a = project(a, "dec", l, "self_o");
      y = norm(g_.add(y, drop(a)), "dec", l, 1);
      Var c = g_.attention(project(y, "dec", l, "cross_q"),
                           project(memory, "dec", l, "cross_k"),
                           project(memory, "dec", l, "cross_v"), cross_shape);
      c = project(c, "dec", l, "cross_o");
      y = norm(g_.add(y, drop(c)), "dec", l, 2);
      y = norm(g_.add(y, drop(ffn(y, "dec", l))), "dec", l, 3);
    }
    return g_.tied_logits(y, p("embed.tok"));
  }

 private:
  Graph<T>& g_;
  Store& store_;
  const ModelConfig& cfg_;
  bool train_;
  std::mt19937_64* rng_;
};

}  // namespace

void ModelConfig::validate(int min_vocab) const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("model." + field + ": " + why);
  };
  if (num_layers < 1) fail("num_layers", "must be >= 1");
  if (d_model < 1) fail("d_model", "must be >= 1");
  if (num_heads < 1) fail("num_heads", "must be >= 1");
  if (d_model % num_heads != 0) {
    fail("d_model", std::to_string(d_model) + " is not divisible by num_heads=" +
                        std::to_string(num_heads));
  }
  if (d_ff < 1) fail("d_ff", "must be >= 1");
  if (vocab_size < std::max(min_vocab, kNumSpecials + 1)) {
    fail("vocab_size", std::to_string(vocab_size) + " is below the " +
                           std::to_string(std::max(min_vocab, kNumSpecials + 1)) +
                           " ids the data needs");
  }
  if (max_seq_len < 3) fail("max_seq_len", "must be >= 3");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout", "must lie in [0,1)");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    fail("label_smoothing", "must lie in [0,1)");
  }
}

std::string ModelConfig::to_kv() const {
  std::ostringstream os;
  os.precision(17);
  os << "num_layers=" << num_layers << "\n"
     << "d_model=" << d_model << "\n"
     << "num_heads=" << num_heads << "\n"
     << "d_ff=" << d_ff << "\n"
     << "vocab_size=" << vocab_size << "\n"
     << "max_seq_len=" << max_seq_len << "\n"
     << "dropout=" << dropout << "\n"
     << "label_smoothing=" << label_smoothing << "\n"
     << "seed=" << seed << "\n";
  return os.str();
}

ModelConfig ModelConfig::from_kv(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  c.num_layers = parse_int(kv, "num_layers", c.num_layers);
  c.d_model = parse_int(kv, "d_model", c.d_model);
  c.num_heads = parse_int(kv, "num_heads", c.num_heads);
  c.d_ff = parse_int(kv, "d_ff", c.d_ff);
  c.vocab_size = parse_int(kv, "vocab_size", c.vocab_size);
  c.max_seq_len = parse_int(kv, "max_seq_len", c.max_seq_len);
  c.dropout = parse_double(kv, "dropout", c.dropout);
  c.label_smoothing = parse_double(kv, "label_smoothing", c.label_smoothing);
  if (auto it = kv.find("seed"); it != kv.end()) {
    try {
      c.seed = std::stoull(it->second);
    } catch (const std::exception&) {
      throw ConfigError("model.seed expects an unsigned integer");
    }
  }
  return c;
}

std::size_t expected_param_count(const ModelConfig& cfg) {
  const std::size_t d = cfg.d_model;
  const std::size_t ff = cfg.d_ff;
  const std::size_t proj = d * d + d;
  const std::size_t ffn = d * ff + ff + ff * d + d;
  const std::size_t ln = 2 * d;
  const std::size_t enc_layer = 4 * proj + ffn + 2 * ln;
  const std::size_t dec_layer = 8 * proj + ffn + 3 * ln;
  return static_cast<std::size_t>(cfg.vocab_size) * d +
         static_cast<std::size_t>(cfg.max_seq_len) * d +
         static_cast<std::size_t>(cfg.num_layers) * (enc_layer + dec_layer);
}

std::vector<TokenId> prefixed_source(TokenId src_lang_token, TokenId tgt_lang_token,
                                     std::span<const TokenId> sentence) {
  std::vector<TokenId> out;
  out.reserve(sentence.size() + 2);
  out.push_back(src_lang_token);
  out.push_back(tgt_lang_token);
  out.insert(out.end(), sentence.begin(), sentence.end());
  return out;
}

Batch Batch::build(const LangPair& pair, TokenId src_lang_token,
                   TokenId tgt_lang_token, std::span<const SentencePair> examples,
                   std::int64_t id) {
  Batch b;
  b.pair = pair;
  b.id = id;
  b.size = static_cast<int>(examples.size());
  for (const auto& ex : examples) {
    b.src_len = std::max(b.src_len, static_cast<int>(ex.src.size()) + 2);
    b.tgt_len = std::max(b.tgt_len, static_cast<int>(ex.tgt.size()) + 1);
  }
  b.src.assign(static_cast<std::size_t>(b.size) * b.src_len, kPad);
  b.tgt_in.assign(static_cast<std::size_t>(b.size) * b.tgt_len, kPad);
  b.tgt_out.assign(static_cast<std::size_t>(b.size) * b.tgt_len, kPad);
  for (int i = 0; i < b.size; ++i) {
    const auto& ex = examples[static_cast<std::size_t>(i)];
    TokenId* s = b.src.data() + static_cast<std::ptrdiff_t>(i) * b.src_len;
    s[0] = src_lang_token;
    s[1] = tgt_lang_token;
    std::copy(ex.src.begin(), ex.src.end(), s + 2);
    b.src_lengths.push_back(static_cast<int>(ex.src.size()) + 2);
    TokenId* ti = b.tgt_in.data() + static_cast<std::ptrdiff_t>(i) * b.tgt_len;
    TokenId* to = b.tgt_out.data() + static_cast<std::ptrdiff_t>(i) * b.tgt_len;
    ti[0] = tgt_lang_token;
    std::copy(ex.tgt.begin(), ex.tgt.end(), ti + 1);
    std::copy(ex.tgt.begin(), ex.tgt.end(), to);
    to[ex.tgt.size()] = kEos;
    b.tgt_lengths.push_back(static_cast<int>(ex.tgt.size()) + 1);
  }
  return b;
}

template <typename T>
BasicTransformer<T> build_model(const ModelConfig& cfg) {
  cfg.validate();
  BasicTransformer<T> model;
  model.config = cfg;
  auto specs = tensor_specs(cfg);
  for (const auto& s : specs) model.params.add(s.name, s.shape);

  // Initialise in double from one seeded stream over the sorted entries so a
  // float and a double model built from the same config agree up to rounding.
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double d = cfg.d_model;
  for (auto& e : model.params.entries()) {
    auto parsed = parse_param_name(e.name);
    double limit = 0.0;
    if (e.name == "embed.tok") {
      limit = std::sqrt(3.0) * 0.5 / std::sqrt(d);
    } else if (e.name == "embed.pos") {
      limit = std::sqrt(3.0) * 0.2;
    } else if (parsed && parsed->kind == "weight") {
      limit = std::sqrt(6.0 / static_cast<double>(e.shape[0] + e.shape[1]));
    } else if (parsed && parsed->kind == "gain") {
      std::fill(e.values.begin(), e.values.end(), T(1));
      continue;
    } else {
      continue;  // biases stay zero
    }
    for (auto& v : e.values) v = static_cast<T>(limit * unit(rng));
  }
  return model;
}

template <typename T>
void check_model_params(const ModelConfig& cfg, const BasicParamStore<T>& params) {
  auto specs = tensor_specs(cfg);
  if (specs.size() != params.num_entries()) {
    throw StructuralError("parameter store has " +
                          std::to_string(params.num_entries()) +
                          " tensors, configuration implies " +
                          std::to_string(specs.size()));
  }
  for (const auto& s : specs) {
    if (!params.contains(s.name)) {
      throw StructuralError("missing parameter " + s.name);
    }
    const auto& e = params.at(s.name);
    if (e.shape != s.shape) {
      throw StructuralError("parameter " + s.name + " has shape " +
                            shape_string(e.shape) + ", expected " +
                            shape_string(s.shape));
    }
  }
}

template <typename T>
LossOutput<T> forward_loss(const ModelConfig& cfg, BasicParamStore<T>& params,
                           const Batch& batch, const ForwardOptions& opts) {
  for (std::size_t i = 0; i < batch.src.size(); ++i) {
    if (batch.src[i] < 0 || batch.src[i] >= cfg.vocab_size) {
      throw DataError("source token id " + std::to_string(batch.src[i]) +
                      " out of range in sequence " +
                      std::to_string(i / static_cast<std::size_t>(batch.src_len)) +
                      " of batch " + std::to_string(batch.id));
    }
  }
  for (std::size_t i = 0; i < batch.tgt_in.size(); ++i) {
    if (batch.tgt_in[i] < 0 || batch.tgt_in[i] >= cfg.vocab_size ||
        batch.tgt_out[i] < 0 || batch.tgt_out[i] >= cfg.vocab_size) {
      throw DataError("target token id out of range in sequence " +
                      std::to_string(i / static_cast<std::size_t>(batch.tgt_len)) +
                      " of batch " + std::to_string(batch.id));
    }
  }
  LossOutput<T> out;
  if (batch.size == 0) return out;
  Graph<T> g(opts.backward);
  Net<T, BasicParamStore<T>> net(g, params, cfg, opts.train, opts.rng);
  auto mem = net.encoder(batch.src, batch.size, batch.src_len, batch.src_lengths);
  auto logits = net.decoder(batch.tgt_in, batch.size, batch.tgt_len,
                            batch.tgt_lengths, mem, batch.src_len,
                            batch.src_lengths);
  auto loss = g.cross_entropy(logits, batch.tgt_out,
                              static_cast<T>(cfg.label_smoothing), kPad);
  out.loss = static_cast<double>(g.scalar(loss));
  for (auto t : batch.tgt_out) out.target_tokens += t != kPad;
  if (!std::isfinite(out.loss)) {
    throw NumericalError("non-finite loss on batch " + std::to_string(batch.id) +
                         " (" + batch.pair.str() + ")");
  }
  if (opts.keep_logits) {
    const T* v = g.value(logits);
    out.logits.assign(v, v + static_cast<std::size_t>(g.rows(logits)) * g.cols(logits));
  }
  if (opts.backward) g.backward(loss);
  return out;
}

template <typename T>
EncoderMemory<T> EncoderMemory<T>::select(std::span<const int> rows) const {
  EncoderMemory<T> out;
  out.batch = static_cast<int>(rows.size());
  out.len = len;
  out.d_model = d_model;
  const std::size_t stride = static_cast<std::size_t>(len) * d_model;
  out.states.reserve(rows.size() * stride);
  for (int r : rows) {
    auto first = states.begin() + static_cast<std::ptrdiff_t>(r * stride);
    out.states.insert(out.states.end(), first,
                      first + static_cast<std::ptrdiff_t>(stride));
    out.lengths.push_back(lengths[static_cast<std::size_t>(r)]);
  }
  return out;
}

template <typename T>
EncoderMemory<T> encode(const ModelConfig& cfg, const BasicParamStore<T>& params,
                        const std::vector<std::vector<TokenId>>& sources) {
  EncoderMemory<T> mem;
  mem.batch = static_cast<int>(sources.size());
  mem.d_model = cfg.d_model;
  for (const auto& s : sources) {
    if (s.empty()) throw UsageError("cannot encode an empty source");
    mem.len = std::max(mem.len, static_cast<int>(s.size()));
  }
  std::vector<TokenId> ids(static_cast<std::size_t>(mem.batch) * mem.len, kPad);
  for (int b = 0; b < mem.batch; ++b) {
    const auto& s = sources[static_cast<std::size_t>(b)];
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] < 0 || s[i] >= cfg.vocab_size) {
        throw DataError("source token id " + std::to_string(s[i]) +
                        " out of range in sequence " + std::to_string(b));
      }
      ids[static_cast<std::size_t>(b) * mem.len + i] = s[i];
    }
    mem.lengths.push_back(static_cast<int>(s.size()));
  }
  Graph<T> g(false);
  Net<T, const BasicParamStore<T>> net(g, params, cfg, false, nullptr);
  auto x = net.encoder(ids, mem.batch, mem.len, mem.lengths);
  const T* v = g.value(x);
  mem.states.assign(v, v + static_cast<std::size_t>(mem.batch) * mem.len * mem.d_model);
  return mem;
}

template <typename T>
std::vector<double> decode_next_logprobs(
    const ModelConfig& cfg, const BasicParamStore<T>& params,
    const EncoderMemory<T>& memory,
    const std::vector<std::vector<TokenId>>& prefixes) {
  const int n = static_cast<int>(prefixes.size());
  if (n != memory.batch) {
    throw UsageError("decode: prefix count does not match encoder memory rows");
  }
  if (n == 0) return {};
  const int len = static_cast<int>(prefixes[0].size());
  if (len == 0) throw UsageError("decode: prefix must not be empty");
  if (len > cfg.max_seq_len) {
    throw CapacityError("prefix length " + std::to_string(len) +
                        " exceeds max_seq_len " + std::to_string(cfg.max_seq_len));
  }
  std::vector<TokenId> ids;
  ids.reserve(static_cast<std::size_t>(n) * len);
  for (const auto& p : prefixes) {
    if (static_cast<int>(p.size()) != len) {
      throw UsageError("decode: prefixes must share one length");
    }
    ids.insert(ids.end(), p.begin(), p.end());
  }
  std::vector<int> lengths(static_cast<std::size_t>(n), len);
  Graph<T> g(false);
  Net<T, const BasicParamStore<T>> net(g, params, cfg, false, nullptr);
  auto mem = g.input(memory.batch * memory.len, memory.d_model, memory.states);
  auto logits = net.decoder(ids, n, len, lengths, mem, memory.len, memory.lengths);
  const int vocab = g.cols(logits);
  const T* z = g.value(logits);
  std::vector<double> out(static_cast<std::size_t>(n) * vocab);
  for (int b = 0; b < n; ++b) {
    const T* row = z + (static_cast<std::ptrdiff_t>(b) * len + (len - 1)) * vocab;
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < vocab; ++c) mx = std::max(mx, static_cast<double>(row[c]));
    double sum = 0.0;
    for (int c = 0; c < vocab; ++c) sum += std::exp(static_cast<double>(row[c]) - mx);
    const double lse = mx + std::log(sum);
    for (int c = 0; c < vocab; ++c) {
      out[static_cast<std::size_t>(b) * vocab + c] = static_cast<double>(row[c]) - lse;
    }
  }
  return out;
}

template <typename T>
std::vector<double> decode_step(const ModelConfig& cfg,
                                const BasicParamStore<T>& params,
                                const EncoderMemory<T>& memory,
                                std::span<const TokenId> prefix) {
  if (memory.batch != 1) {
    throw UsageError("decode_step expects the memory of a single source");
  }
  auto lp = decode_next_logprobs(cfg, params, memory,
                                 {std::vector<TokenId>(prefix.begin(), prefix.end())});
  for (auto& v : lp) v = std::exp(v);
  return lp;
}

#define LASS_INSTANTIATE(T)                                                       \
  template BasicTransformer<T> build_model<T>(const ModelConfig&);                \
  template void check_model_params(const ModelConfig&, const BasicParamStore<T>&); \
  template LossOutput<T> forward_loss(const ModelConfig&, BasicParamStore<T>&,    \
                                      const Batch&, const ForwardOptions&);       \
  template struct EncoderMemory<T>;                                               \
  template EncoderMemory<T> encode(const ModelConfig&, const BasicParamStore<T>&, \
                                   const std::vector<std::vector<TokenId>>&);     \
  template std::vector<double> decode_next_logprobs(                              \
      const ModelConfig&, const BasicParamStore<T>&, const EncoderMemory<T>&,     \
      const std::vector<std::vector<TokenId>>&);                                  \
  template std::vector<double> decode_step(const ModelConfig&,                    \
                                           const BasicParamStore<T>&,             \
                                           const EncoderMemory<T>&,               \
                                           std::span<const TokenId>);

LASS_INSTANTIATE(float)
LASS_INSTANTIATE(double)

#undef LASS_INSTANTIATE

}  // namespace lass
