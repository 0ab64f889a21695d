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
#include "lass/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <set>

#include "lass/errors.hpp"
#include "lass/io.hpp"

namespace lass {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

const ConfigKey* find_key(std::string_view section, std::string_view key) {
  for (const auto& k : config_schema()) {
    if (k.section == section && k.key == key) return &k;
  }
  return nullptr;
}

std::string normalize(const ConfigKey& k, std::string_view raw) {
  const std::string v(trim(raw));
  auto bad = [&](std::string_view expected) {
    return ConfigError(k.section + "." + k.key + ": expected " + std::string(expected) +
                       ", got '" + v + "'");
  };
  switch (k.type) {
    case ValueType::kInt: {
      std::int64_t x = 0;
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
      if (v.empty() || ec != std::errc() || p != v.data() + v.size()) throw bad("an integer");
      return std::to_string(x);
    }
    case ValueType::kReal: {
      double x = 0.0;
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
      if (v.empty() || ec != std::errc() || p != v.data() + v.size()) throw bad("a real number");
      char buf[64];
      auto r = std::to_chars(buf, buf + sizeof buf, x);
      return std::string(buf, r.ptr);
    }
    case ValueType::kBool: {
      std::string l = v;
      for (auto& c : l) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (l == "true" || l == "1" || l == "yes" || l == "on") return "true";
      if (l == "false" || l == "0" || l == "no" || l == "off") return "false";
      throw bad("a boolean");
    }
    case ValueType::kString:
      return v;
  }
  return v;
}

std::map<std::string, std::string> parse_map(const std::string& field, std::string_view s) {
  std::map<std::string, std::string> out;
  for (const auto& item : split_list(s, ',')) {
    auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw ConfigError(field + ": entry '" + item + "' is not name:value");
    }
    out[std::string(trim(std::string_view(item).substr(0, colon)))] =
        std::string(trim(std::string_view(item).substr(colon + 1)));
  }
  return out;
}

std::int64_t to_int(const std::string& field, const std::string& v) {
  std::int64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(field + ": expected an integer, got '" + v + "'");
  }
  return x;
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"data", "pivot", ValueType::kString, "en"},
      {"data", "families", ValueType::kString, "north:na,nb,nc,nd;south:sa,sb,sc"},
      {"data", "relatedness", ValueType::kReal, "0.6"},
      {"data", "sizes", ValueType::kString,
       "na:20000,nb:5000,nc:1000,nd:1000,sa:20000,sb:5000,sc:1000"},
      {"data", "holdout", ValueType::kString, "nd"},
      {"data", "pivot_words", ValueType::kInt, "400"},
      {"data", "min_len", ValueType::kInt, "3"},
      {"data", "max_len", ValueType::kInt, "10"},
      {"data", "zipf", ValueType::kReal, "1"},
      {"data", "valid_size", ValueType::kInt, "200"},
      {"data", "test_size", ValueType::kInt, "200"},
      {"data", "zero_shot", ValueType::kBool, "true"},
      {"data", "zero_shot_test_size", ValueType::kInt, "100"},
      {"data", "seed", ValueType::kInt, "1"},

      {"model", "num_layers", ValueType::kInt, "2"},
      {"model", "d_model", ValueType::kInt, "64"},
      {"model", "num_heads", ValueType::kInt, "4"},
      {"model", "d_ff", ValueType::kInt, "128"},
      {"model", "vocab_size", ValueType::kInt, "0"},
      {"model", "max_seq_len", ValueType::kInt, "16"},
      {"model", "dropout", ValueType::kReal, "0.1"},
      {"model", "label_smoothing", ValueType::kReal, "0.1"},
      {"model", "seed", ValueType::kInt, "1"},

      {"train", "base_lr", ValueType::kReal, "0.001"},
      {"train", "warmup_steps", ValueType::kInt, "400"},
      {"train", "base_steps", ValueType::kInt, "3000"},
      {"train", "lass_steps", ValueType::kInt, "3000"},
      {"train", "batch_size", ValueType::kInt, "32"},
      {"train", "temperature", ValueType::kReal, "5"},
      {"train", "finetune_steps", ValueType::kString, "0:100,2000:200,10000:400,20000:800"},
      {"train", "eval_every", ValueType::kInt, "250"},
      {"train", "patience", ValueType::kInt, "5"},
      {"train", "arms", ValueType::kString, "lass,baseline,random"},
      {"train", "extend_pair", ValueType::kString, "en-nd"},
      {"train", "extend_steps", ValueType::kInt, "600"},
      {"train", "extend_eval_every", ValueType::kInt, "100"},
      {"train", "seed", ValueType::kInt, "1"},

      {"mask", "alpha", ValueType::kReal, "0.7"},
      {"mask", "scope", ValueType::kString, "per_tensor"},
      {"mask", "random_seed", ValueType::kInt, "7"},
      {"mask", "extend_donor", ValueType::kString, ""},

      {"eval", "beam_size", ValueType::kInt, "4"},
      {"eval", "length_penalty", ValueType::kReal, "0.6"},
      {"eval", "batch_size", ValueType::kInt, "64"},
      {"eval", "max_sentences", ValueType::kInt, "0"},
      {"eval", "splits", ValueType::kString, "test"},
      {"eval", "baseline", ValueType::kString, "baseline"},
      {"eval", "tier_medium_min", ValueType::kInt, "2000"},
      {"eval", "tier_rich_min", ValueType::kInt, "10000"},
      {"eval", "swap_pairs", ValueType::kString, ""},
      {"eval", "swap_sentences", ValueType::kInt, "50"},
      {"eval", "extend_sentences", ValueType::kInt, "50"},

      {"sweep", "alphas", ValueType::kString, "0.3,0.5,0.7"},
      {"sweep", "lass_steps", ValueType::kInt, "0"},
  };
  return schema;
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(sep, start);
    if (end == std::string_view::npos) end = s.size();
    auto item = trim(s.substr(start, end - start));
    if (!item.empty()) out.emplace_back(item);
    start = end + 1;
  }
  return out;
}

ExperimentConfig::ExperimentConfig() {
  for (const auto& k : config_schema()) values_[k.section][k.key] = k.default_value;
}

void ExperimentConfig::set(std::string_view section, std::string_view key,
                           std::string value) {
  const ConfigKey* k = find_key(section, key);
  if (!k) {
    throw ConfigError("unknown key '" + std::string(key) + "' in section [" +
                      std::string(section) + "]");
  }
  values_[k->section][k->key] = normalize(*k, value);
}

const std::string& ExperimentConfig::get(std::string_view section,
                                         std::string_view key) const {
  auto s = values_.find(section);
  if (s != values_.end()) {
    auto it = s->second.find(std::string(key));
    if (it != s->second.end()) return it->second;
  }
  throw LookupError("unknown config key " + std::string(section) + "." + std::string(key));
}

std::int64_t ExperimentConfig::get_int(std::string_view section, std::string_view key) const {
  return std::stoll(get(section, key));
}

double ExperimentConfig::get_real(std::string_view section, std::string_view key) const {
  const auto& v = get(section, key);
  double x = 0.0;
  std::from_chars(v.data(), v.data() + v.size(), x);
  return x;
}

bool ExperimentConfig::get_bool(std::string_view section, std::string_view key) const {
  return get(section, key) == "true";
}

std::string ExperimentConfig::resolved_text() const {
  std::string out;
  std::string section;
  for (const auto& k : config_schema()) {
    if (k.section != section) {
      if (!section.empty()) out += "\n";
      section = k.section;
      out += "[" + section + "]\n";
    }
    out += k.key + " = " + get(k.section, k.key) + "\n";
  }
  return out;
}

std::uint64_t ExperimentConfig::hash(const std::vector<std::string>& sections) const {
  std::string text;
  for (const auto& k : config_schema()) {
    if (!sections.empty() &&
        std::find(sections.begin(), sections.end(), k.section) == sections.end()) {
      continue;
    }
    text += k.section + "." + k.key + "=" + get(k.section, k.key) + "\n";
  }
  return fnv1a64(text);
}

std::vector<std::string> ExperimentConfig::holdout_languages() const {
  return split_list(get("data", "holdout"), ',');
}

CorpusSpec ExperimentConfig::corpus_spec() const {
  CorpusSpec spec;
  spec.pivot = get("data", "pivot");
  spec.pivot_words = static_cast<int>(get_int("data", "pivot_words"));
  spec.min_len = static_cast<int>(get_int("data", "min_len"));
  spec.max_len = static_cast<int>(get_int("data", "max_len"));
  spec.zipf = get_real("data", "zipf");
  spec.valid_size = static_cast<int>(get_int("data", "valid_size"));
  spec.test_size = static_cast<int>(get_int("data", "test_size"));
  spec.zero_shot_test_size = static_cast<int>(get_int("data", "zero_shot_test_size"));
  spec.seed = static_cast<std::uint64_t>(get_int("data", "seed"));
  const double rel = get_real("data", "relatedness");

  std::vector<std::string> langs;
  for (const auto& fam : split_list(get("data", "families"), ';')) {
    auto colon = fam.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("data.families: entry '" + fam + "' is not name:lang,lang,...");
    }
    LanguageFamily f;
    f.name = std::string(trim(std::string_view(fam).substr(0, colon)));
    f.languages = split_list(std::string_view(fam).substr(colon + 1), ',');
    f.relatedness = f.languages.size() > 1 ? rel : 0.0;
    if (f.name.empty() || f.languages.empty()) {
      throw ConfigError("data.families: family '" + fam + "' is empty");
    }
    for (const auto& l : f.languages) langs.push_back(l);
    spec.families.push_back(std::move(f));
  }
  if (langs.empty()) throw ConfigError("data.families lists no languages");

  const auto sizes = parse_map("data.sizes", get("data", "sizes"));
  for (const auto& [lang, v] : sizes) {
    if (std::find(langs.begin(), langs.end(), lang) == langs.end()) {
      throw ConfigError("data.sizes: language '" + lang + "' is not in data.families");
    }
  }
  const auto holdout = holdout_languages();
  for (const auto& h : holdout) {
    if (std::find(langs.begin(), langs.end(), h) == langs.end()) {
      throw ConfigError("data.holdout: language '" + h + "' is not in data.families");
    }
  }
  for (const auto& l : langs) {
    auto it = sizes.find(l);
    if (it == sizes.end()) throw ConfigError("data.sizes: no size for language '" + l + "'");
    const auto n = to_int("data.sizes", it->second);
    if (n < 1) throw ConfigError("data.sizes: size of '" + l + "' must be >= 1");
    spec.train_sizes[{spec.pivot, l}] = static_cast<int>(n);
    spec.train_sizes[{l, spec.pivot}] = static_cast<int>(n);
  }
  if (get_bool("data", "zero_shot")) {
    auto held = [&](const std::string& l) {
      return std::find(holdout.begin(), holdout.end(), l) != holdout.end();
    };
    for (const auto& a : langs) {
      for (const auto& b : langs) {
        if (a != b && !held(a) && !held(b)) spec.zero_shot.push_back({a, b});
      }
    }
  }
  return spec;
}

ModelConfig ExperimentConfig::model_config(int corpus_vocab) const {
  ModelConfig m;
  m.num_layers = static_cast<int>(get_int("model", "num_layers"));
  m.d_model = static_cast<int>(get_int("model", "d_model"));
  m.num_heads = static_cast<int>(get_int("model", "num_heads"));
  m.d_ff = static_cast<int>(get_int("model", "d_ff"));
  const auto v = get_int("model", "vocab_size");
  m.vocab_size = v == 0 ? corpus_vocab : static_cast<int>(v);
  m.max_seq_len = static_cast<int>(get_int("model", "max_seq_len"));
  m.dropout = get_real("model", "dropout");
  m.label_smoothing = get_real("model", "label_smoothing");
  m.seed = static_cast<std::uint64_t>(get_int("model", "seed"));
  m.validate(corpus_vocab);
  const auto max_len = get_int("data", "max_len");
  if (m.max_seq_len < max_len + 2) {
    throw ConfigError("model.max_seq_len must be >= data.max_len + 2 (" +
                      std::to_string(max_len + 2) + ")");
  }
  return m;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t;
  t.sched.base_lr = get_real("train", "base_lr");
  t.sched.warmup_steps = get_int("train", "warmup_steps");
  t.max_steps = get_int("train", "base_steps");
  t.batch_size = static_cast<int>(get_int("train", "batch_size"));
  t.temperature = get_real("train", "temperature");
  t.alpha = get_real("mask", "alpha");
  t.scope = parse_prune_scope(get("mask", "scope"));
  t.finetune_steps.clear();
  for (const auto& [k, v] : parse_map("train.finetune_steps", get("train", "finetune_steps"))) {
    t.finetune_steps.push_back({to_int("train.finetune_steps", k),
                                to_int("train.finetune_steps", v)});
  }
  std::sort(t.finetune_steps.begin(), t.finetune_steps.end(),
            [](const auto& a, const auto& b) { return a.min_size < b.min_size; });
  t.eval_every = get_int("train", "eval_every");
  t.patience = static_cast<int>(get_int("train", "patience"));
  t.seed = static_cast<std::uint64_t>(get_int("train", "seed"));
  const auto spec = corpus_spec();
  const auto holdout = holdout_languages();
  for (const auto& [pair, n] : spec.train_sizes) {
    const bool held = std::find(holdout.begin(), holdout.end(), pair.src) != holdout.end() ||
                      std::find(holdout.begin(), holdout.end(), pair.tgt) != holdout.end();
    if (!held) t.pairs.push_back(pair);
  }
  if (t.pairs.empty()) throw ConfigError("every language is held out; nothing to train");
  if (get_int("train", "lass_steps") < 0) throw ConfigError("train.lass_steps must be >= 0");
  if (get_int("train", "extend_steps") < 0) throw ConfigError("train.extend_steps must be >= 0");
  t.validate();
  return t;
}

DecodeOptions ExperimentConfig::decode_options() const {
  DecodeOptions d;
  d.beam_size = static_cast<int>(get_int("eval", "beam_size"));
  d.length_penalty = get_real("eval", "length_penalty");
  d.batch_size = static_cast<int>(get_int("eval", "batch_size"));
  if (d.beam_size < 1) throw ConfigError("eval.beam_size must be >= 1");
  if (d.batch_size < 1) throw ConfigError("eval.batch_size must be >= 1");
  if (d.length_penalty < 0.0) throw ConfigError("eval.length_penalty must be >= 0");
  return d;
}

TierThresholds ExperimentConfig::tier_thresholds() const {
  TierThresholds t;
  t.medium_min = get_int("eval", "tier_medium_min");
  t.rich_min = get_int("eval", "tier_rich_min");
  if (t.medium_min < 1 || t.rich_min <= t.medium_min) {
    throw ConfigError("eval tiers need 1 <= tier_medium_min < tier_rich_min");
  }
  return t;
}

std::vector<double> ExperimentConfig::sweep_alphas() const {
  std::vector<double> out;
  for (const auto& s : split_list(get("sweep", "alphas"), ',')) {
    double a = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), a);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw ConfigError("sweep.alphas: '" + s + "' is not a real number");
    }
    if (!(a >= 0.0 && a < 1.0)) throw ConfigError("sweep.alphas: " + s + " outside [0,1)");
    if (!out.empty() && a <= out.back()) {
      throw ConfigError("sweep.alphas must be strictly increasing");
    }
    out.push_back(a);
  }
  if (out.empty()) throw ConfigError("sweep.alphas is empty");
  return out;
}

std::vector<std::string> ExperimentConfig::arms() const {
  auto out = split_list(get("train", "arms"), ',');
  for (const auto& a : out) {
    if (a != "lass" && a != "baseline" && a != "random") {
      throw ConfigError("train.arms: unknown arm '" + a + "' (lass, baseline, random)");
    }
  }
  if (std::find(out.begin(), out.end(), "lass") == out.end()) {
    throw ConfigError("train.arms must include lass");
  }
  return out;
}

void ExperimentConfig::validate() const {
  const auto spec = corpus_spec();
  (void)spec;
  const auto t = train_config();
  (void)t;
  (void)decode_options();
  (void)tier_thresholds();
  (void)sweep_alphas();
  (void)arms();
  // The corpus vocabulary is unknown before gen-data; any admissible size
  // exercises the remaining model checks.
  const auto v = get_int("model", "vocab_size");
  if (v < 0) throw ConfigError("model.vocab_size must be >= 0 (0 = corpus size)");
  (void)model_config(v == 0 ? 1024 : static_cast<int>(v));
  if (get_int("eval", "max_sentences") < 0) throw ConfigError("eval.max_sentences must be >= 0");
  for (const auto& s : split_list(get("eval", "splits"), ',')) {
    if (s != "test" && s != "valid") throw ConfigError("eval.splits: unknown split '" + s + "'");
  }
  auto check_pair = [](const char* key, const std::string& text) {
    try {
      LangPair::parse(text);
    } catch (const DataError& e) {
      throw ConfigError(std::string(key) + ": " + e.what());
    }
  };
  const auto ext = get("train", "extend_pair");
  if (!ext.empty()) check_pair("train.extend_pair", ext);
  const auto donor = get("mask", "extend_donor");
  if (!donor.empty()) check_pair("mask.extend_donor", donor);
  for (const auto& p : split_list(get("eval", "swap_pairs"), ',')) check_pair("eval.swap_pairs", p);
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::string section;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    auto line = text.substr(start, nl == std::string_view::npos ? text.size() - start : nl - start);
    start = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    // Comments run from '#' or ';' at line start or after whitespace.
    for (std::size_t i = 0; i < line.size(); ++i) {
      if ((line[i] == '#' || line[i] == ';') && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const std::set<std::string> known = {"data", "model", "train",
                                                  "mask", "eval", "sweep"};
      if (!known.count(section)) {
        throw ConfigError("config line " + std::to_string(line_no) + ": unknown section [" +
                          section + "]");
      }
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    if (section.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": key outside a section");
    }
    try {
      cfg.set(section, trim(line.substr(0, eq)), std::string(trim(line.substr(eq + 1))));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("config file " + path.string() + " does not exist");
  }
  return parse_config(read_file_text(path));
}

void apply_env_overrides(
    ExperimentConfig& cfg,
    const std::function<std::optional<std::string>(const std::string&)>& getenv) {
  for (const auto& k : config_schema()) {
    const std::string var = "LASS_" + upper(k.section) + "_" + upper(k.key);
    if (auto v = getenv(var)) {
      try {
        cfg.set(k.section, k.key, *v);
      } catch (const ConfigError& e) {
        throw ConfigError("environment " + var + ": " + e.what());
      }
    }
  }
  cfg.validate();
}

void apply_env_overrides(ExperimentConfig& cfg) {
  apply_env_overrides(cfg, [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  });
}

}  // namespace lass
