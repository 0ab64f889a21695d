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
#include "lass/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "lass/errors.hpp"
#include "lass/io.hpp"

namespace lass {

namespace {

using json = nlohmann::json;

std::string word_token(std::string_view prefix, int w) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", w);
  return std::string(prefix) + buf;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  return fnv1a64(tag, seed ^ 0x9e3779b97f4a7c15ULL);
}

void validate_spec(const CorpusSpec& spec) {
  auto fail = [](const std::string& why) {
    throw ConfigError("corpus generation: " + why);
  };
  if (spec.pivot.empty()) fail("pivot language id is empty");
  if (spec.pivot_words < 1) fail("pivot_words must be >= 1");
  if (spec.min_len < 1 || spec.max_len < spec.min_len) {
    fail("sentence length range [" + std::to_string(spec.min_len) + "," +
         std::to_string(spec.max_len) + "] is empty");
  }
  if (!(spec.zipf >= 0.0)) fail("zipf exponent must be >= 0");
  if (spec.valid_size < 1 || spec.test_size < 1) {
    fail("valid_size and test_size must be >= 1");
  }
  std::set<std::string> seen{spec.pivot};
  for (const auto& f : spec.families) {
    if (!(f.relatedness >= 0.0 && f.relatedness <= 1.0)) {
      fail("family " + f.name + " relatedness " + std::to_string(f.relatedness) +
           " outside [0,1]");
    }
    if (f.relatedness > 0.0 && f.languages.size() < 2) {
      fail("family " + f.name + " requests shared mappings with fewer than two languages");
    }
    for (const auto& l : f.languages) {
      if (l.empty() || l.find_first_of("- \t.") != std::string::npos) {
        fail("invalid language id '" + l + "'");
      }
      if (!seen.insert(l).second) fail("language " + l + " listed twice");
    }
  }
  auto known = [&](const std::string& l) { return seen.count(l) != 0; };
  for (const auto& [pair, n] : spec.train_sizes) {
    if (!known(pair.src) || !known(pair.tgt) || pair.src == pair.tgt) {
      fail("training direction " + pair.str() + " uses an unknown language");
    }
    if (n < 1) fail("train size for " + pair.str() + " must be >= 1");
  }
  for (const auto& pair : spec.zero_shot) {
    if (!known(pair.src) || !known(pair.tgt) || pair.src == pair.tgt) {
      fail("zero-shot direction " + pair.str() + " uses an unknown language");
    }
    if (spec.train_sizes.count(pair)) {
      fail("direction " + pair.str() + " is both trained and zero-shot");
    }
  }
}

// Unique pivot sentences for one direction, deterministic in (seed, pair).
std::vector<std::vector<int>> sample_sentences(const CorpusSpec& spec,
                                               const LangPair& pair,
                                               std::size_t count) {
  std::mt19937_64 rng(derive_seed(spec.seed, "pair:" + pair.str()));
  std::vector<double> weights(static_cast<std::size_t>(spec.pivot_words));
  for (int w = 0; w < spec.pivot_words; ++w) {
    weights[static_cast<std::size_t>(w)] = 1.0 / std::pow(w + 1.0, spec.zipf);
  }
  std::discrete_distribution<int> word(weights.begin(), weights.end());
  std::uniform_int_distribution<int> length(spec.min_len, spec.max_len);
  std::unordered_set<std::string> seen;
  std::vector<std::vector<int>> out;
  out.reserve(count);
  const std::size_t max_attempts = 50 * count + 1000;
  std::size_t attempts = 0;
  std::string key;
  while (out.size() < count) {
    if (++attempts > max_attempts) {
      throw ConfigError("corpus generation: cannot draw " + std::to_string(count) +
                        " distinct sentences for " + pair.str() +
                        "; enlarge pivot_words or the length range");
    }
    std::vector<int> s(static_cast<std::size_t>(length(rng)));
    for (auto& w : s) w = word(rng);
    key.assign(reinterpret_cast<const char*>(s.data()), s.size() * sizeof(int));
    if (seen.insert(key).second) out.push_back(std::move(s));
  }
  return out;
}

std::vector<TokenId> encipher(const LanguageSpec& lang, const std::vector<int>& s) {
  std::vector<TokenId> out;
  out.reserve(s.size());
  for (int w : s) out.push_back(lang.cipher[static_cast<std::size_t>(w)]);
  return out;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\r') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

Vocabulary::Vocabulary() {
  add("<pad>");
  add("<unk>");
  add("</s>");
}

TokenId Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  auto id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const {
  return find(token).value_or(kUnk);
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || id >= size()) {
    throw LookupError("token id " + std::to_string(id) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

void LanguageRegistry::add(LanguageSpec lang, int vocab_size) {
  if (contains(lang.lang_id)) {
    throw ConfigError("language " + lang.lang_id + " registered twice");
  }
  std::sort(lang.alphabet.begin(), lang.alphabet.end());
  lang.alphabet.erase(std::unique(lang.alphabet.begin(), lang.alphabet.end()),
                      lang.alphabet.end());
  langs_.push_back(std::move(lang));
  finalize(vocab_size);
}

void LanguageRegistry::finalize(int vocab_size) {
  owners_.assign(static_cast<std::size_t>(vocab_size), {});
  lang_token_.assign(static_cast<std::size_t>(vocab_size), 0);
  for (std::size_t i = 0; i < langs_.size(); ++i) {
    for (TokenId t : langs_[i].alphabet) {
      if (t >= 0 && t < vocab_size) {
        owners_[static_cast<std::size_t>(t)].push_back(static_cast<int>(i));
      }
    }
    if (langs_[i].token >= 0 && langs_[i].token < vocab_size) {
      lang_token_[static_cast<std::size_t>(langs_[i].token)] = 1;
    }
  }
}

bool LanguageRegistry::contains(std::string_view lang_id) const {
  return std::any_of(langs_.begin(), langs_.end(),
                     [&](const LanguageSpec& l) { return l.lang_id == lang_id; });
}

const LanguageSpec& LanguageRegistry::at(std::string_view lang_id) const {
  for (const auto& l : langs_) {
    if (l.lang_id == lang_id) return l;
  }
  throw LookupError("unknown language " + std::string(lang_id));
}

std::span<const int> LanguageRegistry::owners(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= owners_.size()) return {};
  return owners_[static_cast<std::size_t>(id)];
}

bool LanguageRegistry::is_language_token(TokenId id) const {
  return id >= 0 && static_cast<std::size_t>(id) < lang_token_.size() &&
         lang_token_[static_cast<std::size_t>(id)];
}

double RelatednessMatrix::at(std::string_view a, std::string_view b) const {
  auto idx = [&](std::string_view l) {
    auto it = std::find(langs.begin(), langs.end(), l);
    if (it == langs.end()) throw LookupError("unknown language " + std::string(l));
    return static_cast<std::size_t>(it - langs.begin());
  };
  return values[idx(a)][idx(b)];
}

RelatednessMatrix measure_relatedness(const LanguageRegistry& registry,
                                      int pivot_words) {
  RelatednessMatrix m;
  const auto& langs = registry.languages();
  for (const auto& l : langs) m.langs.push_back(l.lang_id);
  m.values.assign(langs.size(), std::vector<double>(langs.size(), 0.0));
  for (std::size_t i = 0; i < langs.size(); ++i) {
    for (std::size_t j = 0; j < langs.size(); ++j) {
      int shared = 0;
      for (int w = 0; w < pivot_words; ++w) {
        shared += langs[i].cipher[static_cast<std::size_t>(w)] ==
                  langs[j].cipher[static_cast<std::size_t>(w)];
      }
      m.values[i][j] = static_cast<double>(shared) / pivot_words;
    }
  }
  return m;
}

CorpusSpec CorpusSpec::english_centric(std::vector<LanguageFamily> families,
                                       const std::map<std::string, int>& sizes,
                                       bool with_zero_shot, std::uint64_t seed) {
  CorpusSpec spec;
  spec.families = std::move(families);
  spec.seed = seed;
  std::vector<std::string> langs;
  for (const auto& f : spec.families) {
    for (const auto& l : f.languages) langs.push_back(l);
  }
  for (const auto& l : langs) {
    auto it = sizes.find(l);
    if (it == sizes.end()) throw ConfigError("no train size given for language " + l);
    spec.train_sizes[{spec.pivot, l}] = it->second;
    spec.train_sizes[{l, spec.pivot}] = it->second;
  }
  if (with_zero_shot) {
    for (const auto& a : langs) {
      for (const auto& b : langs) {
        if (a != b) spec.zero_shot.push_back({a, b});
      }
    }
  }
  return spec;
}

const PairData& CorpusSet::at(const LangPair& pair) const {
  auto it = pairs.find(pair);
  if (it == pairs.end()) throw LookupError("unknown language pair " + pair.str());
  return it->second;
}

std::vector<LangPair> CorpusSet::train_pairs() const {
  std::vector<LangPair> out;
  for (const auto& [p, d] : pairs) {
    if (!d.zero_shot) out.push_back(p);
  }
  return out;
}

std::vector<LangPair> CorpusSet::zero_shot_pairs() const {
  std::vector<LangPair> out;
  for (const auto& [p, d] : pairs) {
    if (d.zero_shot) out.push_back(p);
  }
  return out;
}

std::map<LangPair, int> CorpusSet::sizes() const {
  std::map<LangPair, int> out;
  for (const auto& [p, d] : pairs) {
    if (!d.zero_shot) out[p] = static_cast<int>(d.train.size());
  }
  return out;
}

std::vector<TokenId> CorpusSet::source_prefix(const LangPair& pair,
                                              std::span<const TokenId> sentence) const {
  return prefixed_source(registry.token_of(pair.src), registry.token_of(pair.tgt),
                         sentence);
}

CorpusSet generate_corpus(const CorpusSpec& spec) {
  validate_spec(spec);
  CorpusSet c;
  c.pivot = spec.pivot;
  c.pivot_words = spec.pivot_words;

  std::vector<LanguageSpec> langs;
  {
    LanguageSpec pivot;
    pivot.lang_id = spec.pivot;
    langs.push_back(std::move(pivot));
  }
  for (const auto& f : spec.families) {
    for (const auto& l : f.languages) {
      LanguageSpec s;
      s.lang_id = l;
      s.family = f.name;
      langs.push_back(std::move(s));
    }
  }
  for (auto& l : langs) l.token = c.vocab.add("<" + l.lang_id + ">");

  const auto W = static_cast<std::size_t>(spec.pivot_words);
  auto& pivot = langs[0];
  for (int w = 0; w < spec.pivot_words; ++w) {
    pivot.cipher.push_back(c.vocab.add(word_token(spec.pivot, w)));
  }
  std::size_t li = 1;
  for (const auto& f : spec.families) {
    const std::uint64_t fseed = derive_seed(spec.seed, "family:" + f.name);
    std::mt19937_64 rng(fseed);
    std::vector<int> words(W);
    std::iota(words.begin(), words.end(), 0);
    std::shuffle(words.begin(), words.end(), rng);
    const auto shared_count = static_cast<std::size_t>(
        std::llround(f.relatedness * static_cast<double>(W)));
    std::vector<char> shared(W, 0);
    for (std::size_t i = 0; i < shared_count; ++i) {
      shared[static_cast<std::size_t>(words[i])] = 1;
    }
    for (std::size_t k = 0; k < f.languages.size(); ++k, ++li) {
      auto& lang = langs[li];
      lang.relatedness_seed = fseed;
      for (int w = 0; w < spec.pivot_words; ++w) {
        const std::string tok = shared[static_cast<std::size_t>(w)]
                                    ? word_token(f.name + "_", w)
                                    : word_token(lang.lang_id, w);
        lang.cipher.push_back(c.vocab.add(tok));
      }
    }
  }
  for (auto& l : langs) {
    l.alphabet = l.cipher;
    c.registry.add(std::move(l), 0);
  }
  c.registry.finalize(c.vocab.size());
  c.relatedness = measure_relatedness(c.registry, spec.pivot_words);

  auto fill = [&](const LangPair& pair, std::size_t ntrain, std::size_t nvalid,
                  std::size_t ntest, bool zero_shot) {
    const auto& src = c.registry.at(pair.src);
    const auto& tgt = c.registry.at(pair.tgt);
    auto sentences = sample_sentences(spec, pair, ntrain + nvalid + ntest);
    PairData d;
    d.pair = pair;
    d.zero_shot = zero_shot;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      SentencePair ex{encipher(src, sentences[i]), encipher(tgt, sentences[i])};
      if (i < ntrain) {
        d.train.push_back(std::move(ex));
      } else if (i < ntrain + nvalid) {
        d.valid.push_back(std::move(ex));
      } else {
        d.test.push_back(std::move(ex));
      }
    }
    c.pairs.emplace(pair, std::move(d));
  };
  for (const auto& [pair, n] : spec.train_sizes) {
    fill(pair, static_cast<std::size_t>(n), static_cast<std::size_t>(spec.valid_size),
         static_cast<std::size_t>(spec.test_size), false);
  }
  for (const auto& pair : spec.zero_shot) {
    fill(pair, 0, 0, static_cast<std::size_t>(spec.zero_shot_test_size), true);
  }
  return c;
}

std::vector<double> temperature_probs(std::span<const std::int64_t> sizes,
                                      double temperature) {
  if (sizes.empty()) throw DataError("temperature_probs needs at least one size");
  if (!(temperature >= 1.0)) {
    throw PreconditionError("temperature must be >= 1, got " +
                            std::to_string(temperature));
  }
  double total = 0.0;
  for (auto s : sizes) {
    if (s <= 0) throw DataError("temperature_probs: corpus size must be > 0");
    total += static_cast<double>(s);
  }
  std::vector<double> p(sizes.size());
  if (std::isinf(temperature)) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(sizes.size()));
    return p;
  }
  double z = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    p[i] = std::pow(static_cast<double>(sizes[i]) / total, 1.0 / temperature);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

PairSampler::PairSampler(std::vector<LangPair> pairs,
                         std::span<const std::int64_t> sizes, double temperature,
                         std::uint64_t seed)
    : pairs_(std::move(pairs)),
      probs_(temperature_probs(sizes, temperature)),
      rng_(seed),
      dist_(probs_.begin(), probs_.end()) {
  if (pairs_.size() != probs_.size()) {
    throw UsageError("PairSampler: pair and size lists differ in length");
  }
}

const LangPair& PairSampler::next() { return pairs_[dist_(rng_)]; }

BatchStream::BatchStream(const CorpusSet& corpus, const LangPair& pair,
                         int batch_size, std::uint64_t seed)
    : data_(&corpus.at(pair)),
      src_token_(corpus.registry.token_of(pair.src)),
      tgt_token_(corpus.registry.token_of(pair.tgt)),
      batch_size_(batch_size),
      seed_(seed) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (data_->train.empty()) {
    throw LookupError("pair " + pair.str() + " has no training examples");
  }
  reshuffle();
}

void BatchStream::reshuffle() {
  ++epoch_;
  pos_ = 0;
  order_.resize(data_->train.size());
  std::iota(order_.begin(), order_.end(), 0u);
  std::mt19937_64 rng(seed_ ^ (0x51ed270b27ULL * static_cast<std::uint64_t>(epoch_ + 1)));
  std::shuffle(order_.begin(), order_.end(), rng);
}

Batch BatchStream::next() {
  if (pos_ >= order_.size()) reshuffle();
  const std::size_t end = std::min(order_.size(), pos_ + static_cast<std::size_t>(batch_size_));
  std::vector<SentencePair> ex;
  ex.reserve(end - pos_);
  for (std::size_t i = pos_; i < end; ++i) ex.push_back(data_->train[order_[i]]);
  pos_ = end;
  return Batch::build(data_->pair, src_token_, tgt_token_, ex, next_id_++);
}

std::vector<Batch> BatchStream::epoch() {
  if (pos_ >= order_.size()) reshuffle();
  std::vector<Batch> out;
  const auto e = epoch_;
  while (epoch_ == e && pos_ < order_.size()) out.push_back(next());
  return out;
}

std::vector<Batch> split_batches(const CorpusSet& corpus, const LangPair& pair,
                                 std::span<const SentencePair> split,
                                 int batch_size) {
  std::vector<Batch> out;
  const TokenId s = corpus.registry.token_of(pair.src);
  const TokenId t = corpus.registry.token_of(pair.tgt);
  for (std::size_t i = 0; i < split.size(); i += static_cast<std::size_t>(batch_size)) {
    auto n = std::min(static_cast<std::size_t>(batch_size), split.size() - i);
    out.push_back(Batch::build(pair, s, t, split.subspan(i, n),
                               static_cast<std::int64_t>(out.size())));
  }
  return out;
}

std::string detect_language(std::span<const TokenId> tokens,
                            const LanguageRegistry& registry) {
  const auto& langs = registry.languages();
  std::vector<int> votes(langs.size(), 0);
  int n = 0;
  for (TokenId t : tokens) {
    if (t < kNumSpecials || registry.is_language_token(t)) continue;
    ++n;
    for (int owner : registry.owners(t)) ++votes[static_cast<std::size_t>(owner)];
  }
  if (n == 0) return "unknown";
  int best = -1;
  int best_votes = 0;
  bool unique = false;
  for (std::size_t i = 0; i < votes.size(); ++i) {
    if (votes[i] > best_votes) {
      best = static_cast<int>(i);
      best_votes = votes[i];
      unique = true;
    } else if (votes[i] == best_votes && best_votes > 0) {
      unique = false;
    }
  }
  if (best < 0 || !unique || 2 * best_votes <= n) return "unknown";
  return langs[static_cast<std::size_t>(best)].lang_id;
}

std::vector<SentencePair> parse_bitext(std::string_view text, const Vocabulary& vocab) {
  std::vector<SentencePair> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    std::string_view line =
        text.substr(start, nl == std::string_view::npos ? text.size() - start : nl - start);
    start = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw DataError("bitext parse error at line " + std::to_string(line_no) +
                      ": missing tab separator");
    }
    SentencePair p;
    for (const auto& tok : split_ws(line.substr(0, tab))) p.src.push_back(vocab.id(tok));
    for (const auto& tok : split_ws(line.substr(tab + 1))) p.tgt.push_back(vocab.id(tok));
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<SentencePair> load_bitext(const std::filesystem::path& path,
                                      const Vocabulary& vocab) {
  try {
    return parse_bitext(read_file_text(path), vocab);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_bitext(const std::filesystem::path& path,
                  std::span<const SentencePair> split, const Vocabulary& vocab) {
  std::string out;
  auto append = [&](const std::vector<TokenId>& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += ' ';
      out += vocab.token(s[i]);
    }
  };
  for (const auto& ex : split) {
    append(ex.src);
    out += '\t';
    append(ex.tgt);
    out += '\n';
  }
  write_file_text(path, out);
}

std::string bitext_file_name(const LangPair& pair, std::string_view split) {
  return pair.str() + "." + std::string(split) + ".tsv";
}

void save_corpus(const std::filesystem::path& dir, const CorpusSet& corpus) {
  json reg;
  reg["pivot"] = corpus.pivot;
  reg["pivot_words"] = corpus.pivot_words;
  reg["vocab"] = corpus.vocab.tokens();
  reg["languages"] = json::array();
  for (const auto& l : corpus.registry.languages()) {
    json j;
    j["lang_id"] = l.lang_id;
    j["family"] = l.family;
    j["token_id"] = l.token;
    j["token"] = corpus.vocab.token(l.token);
    std::vector<std::string> alphabet, cipher;
    for (auto t : l.alphabet) alphabet.push_back(corpus.vocab.token(t));
    for (auto t : l.cipher) cipher.push_back(corpus.vocab.token(t));
    j["alphabet"] = alphabet;
    j["cipher"] = cipher;
    j["relatedness_seed"] = l.relatedness_seed;
    reg["languages"].push_back(j);
  }
  write_file_text(dir / "registry.json", reg.dump(1));

  json man;
  man["pairs"] = json::array();
  for (const auto& [p, d] : corpus.pairs) {
    man["pairs"].push_back({{"pair", p.str()},
                            {"zero_shot", d.zero_shot},
                            {"train", d.train.size()},
                            {"valid", d.valid.size()},
                            {"test", d.test.size()}});
    if (!d.zero_shot) {
      write_bitext(dir / bitext_file_name(p, "train"), d.train, corpus.vocab);
      write_bitext(dir / bitext_file_name(p, "valid"), d.valid, corpus.vocab);
    }
    write_bitext(dir / bitext_file_name(p, "test"), d.test, corpus.vocab);
  }
  man["relatedness"] = {{"langs", corpus.relatedness.langs},
                        {"values", corpus.relatedness.values}};
  write_file_text(dir / "corpus.json", man.dump(1));
}

CorpusSet load_corpus(const std::filesystem::path& dir) {
  CorpusSet c;
  json reg, man;
  try {
    reg = json::parse(read_file_text(dir / "registry.json"));
    man = json::parse(read_file_text(dir / "corpus.json"));
  } catch (const json::exception& e) {
    throw DataError("corpus manifest in " + dir.string() + ": " + e.what());
  }
  try {
    c.pivot = reg.at("pivot").get<std::string>();
    c.pivot_words = reg.at("pivot_words").get<int>();
    const auto tokens = reg.at("vocab").get<std::vector<std::string>>();
    for (std::size_t i = kNumSpecials; i < tokens.size(); ++i) c.vocab.add(tokens[i]);
    if (c.vocab.tokens() != tokens) {
      throw DataError("registry vocabulary is not in canonical order");
    }
    for (const auto& j : reg.at("languages")) {
      LanguageSpec l;
      l.lang_id = j.at("lang_id").get<std::string>();
      l.family = j.at("family").get<std::string>();
      l.token = j.at("token_id").get<TokenId>();
      for (const auto& t : j.at("alphabet")) l.alphabet.push_back(c.vocab.id(t.get<std::string>()));
      for (const auto& t : j.at("cipher")) l.cipher.push_back(c.vocab.id(t.get<std::string>()));
      l.relatedness_seed = j.at("relatedness_seed").get<std::uint64_t>();
      c.registry.add(std::move(l), 0);
    }
    c.registry.finalize(c.vocab.size());
    c.relatedness.langs = man.at("relatedness").at("langs").get<std::vector<std::string>>();
    c.relatedness.values =
        man.at("relatedness").at("values").get<std::vector<std::vector<double>>>();
    for (const auto& j : man.at("pairs")) {
      PairData d;
      d.pair = LangPair::parse(j.at("pair").get<std::string>());
      d.zero_shot = j.at("zero_shot").get<bool>();
      if (!d.zero_shot) {
        d.train = load_bitext(dir / bitext_file_name(d.pair, "train"), c.vocab);
        d.valid = load_bitext(dir / bitext_file_name(d.pair, "valid"), c.vocab);
      }
      d.test = load_bitext(dir / bitext_file_name(d.pair, "test"), c.vocab);
      if (d.train.size() != j.at("train").get<std::size_t>() ||
          d.test.size() != j.at("test").get<std::size_t>()) {
        throw DataError("split sizes of " + d.pair.str() + " disagree with corpus.json");
      }
      c.pairs.emplace(d.pair, std::move(d));
    }
  } catch (const json::exception& e) {
    throw DataError("corpus manifest in " + dir.string() + ": " + e.what());
  }
  return c;
}

std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::kLow: return "low";
    case Tier::kMedium: return "medium";
    case Tier::kRich: return "rich";
  }
  return "?";
}

Tier tier_of(std::int64_t train_size, const TierThresholds& th) {
  if (train_size >= th.rich_min) return Tier::kRich;
  if (train_size >= th.medium_min) return Tier::kMedium;
  return Tier::kLow;
}

}  // namespace lass
