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
#include "lass/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "lass/analysis.hpp"
#include "lass/checkpoint.hpp"
#include "lass/io.hpp"

namespace lass {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::map<std::string, std::vector<std::string>>& dependencies() {
  static const std::map<std::string, std::vector<std::string>> deps = {
      {"gen-data", {}},
      {"train-base", {"gen-data"}},
      {"make-masks", {"train-base"}},
      {"lass-train", {"make-masks"}},
      {"evaluate", {"lass-train"}},
      {"zero-shot", {"make-masks", "lass-train"}},
      {"extend", {"lass-train"}},
      {"analyze", {"make-masks"}},
      {"sweep", {"train-base"}},
  };
  return deps;
}

// Commands whose artifacts are derived from `command`'s, transitively.
std::set<std::string> dependents(const std::string& command) {
  std::set<std::string> out;
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& [cmd, deps] : dependencies()) {
      if (out.count(cmd)) continue;
      for (const auto& d : deps) {
        if (d == command || out.count(d)) {
          out.insert(cmd);
          grew = true;
          break;
        }
      }
    }
  }
  return out;
}

class RunLock {
 public:
  explicit RunLock(const fs::path& run_dir) : path_(run_dir / ".lock") {
    fs::create_directories(run_dir);
    FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) {
      throw UsageError("run directory " + run_dir.string() +
                       " is locked by another lass process (delete " + path_.string() +
                       " if that process is gone)");
    }
    std::fprintf(f, "%ld\n", static_cast<long>(::getpid()));
    std::fclose(f);
  }
  ~RunLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  fs::path path_;
};

struct Ctx {
  const ExperimentConfig& cfg;
  const RunOptions& opts;
  std::ostream& log;
  fs::path run;
  fs::path data, ckpt, masks, reports, stamps;
  std::string hash_hex;  // of the running command's sections

  Ctx(const ExperimentConfig& c, const RunOptions& o)
      : cfg(c),
        opts(o),
        log(o.log ? *o.log : std::cerr),
        run(o.run_dir),
        data(run / "data"),
        ckpt(run / "ckpt"),
        masks(run / "masks"),
        reports(run / "reports"),
        stamps(run / ".stamps") {}
};

std::optional<std::string> read_stamp(const Ctx& ctx, const std::string& command) {
  const auto p = ctx.stamps / command;
  if (!fs::exists(p)) return std::nullopt;
  auto text = read_file_text(p);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

std::string section_hash(const ExperimentConfig& cfg, const std::string& command) {
  return hex64(cfg.hash(command_sections(command)));
}

void remove_matching(const fs::path& dir, const std::string& prefix, const std::string& ext) {
  if (!fs::exists(dir)) return;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind(prefix, 0) == 0 && e.path().extension() == ext) {
      fs::remove(e.path());
    }
  }
}

void save_phase_checkpoint(const Ctx& ctx, const std::string& phase, std::int64_t step,
                           const ModelConfig& mcfg, const ParamStore& params) {
  fs::create_directories(ctx.ckpt);
  remove_matching(ctx.ckpt, phase + ".", ".ckpt");
  save_checkpoint(ctx.ckpt / (phase + "." + std::to_string(step) + ".ckpt"), mcfg, params,
                  {{"phase", phase}, {"step", std::to_string(step)},
                   {"config_hash", ctx.hash_hex}});
}

struct LoadedCheckpoint {
  Checkpoint ck;
  fs::path path;
  std::int64_t step = 0;
};

LoadedCheckpoint require_checkpoint(const Ctx& ctx, const std::string& phase,
                                    const std::string& producer) {
  auto p = latest_checkpoint(ctx.ckpt, phase);
  if (!p) {
    throw PrerequisiteError("no " + phase + " checkpoint in " + ctx.ckpt.string() +
                            "; run `lass " + producer + "` first");
  }
  LoadedCheckpoint out{load_checkpoint(*p), *p, 0};
  auto it = out.ck.meta.find("step");
  if (it != out.ck.meta.end()) out.step = std::stoll(it->second);
  return out;
}

MaskSet require_masks(const fs::path& dir, const std::string& producer) {
  bool any = false;
  if (fs::exists(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) any |= e.path().extension() == ".mask";
  }
  if (!any) {
    throw PrerequisiteError("no masks in " + dir.string() + "; run `lass " + producer +
                            "` first");
  }
  return load_mask_set(dir);
}

std::string fmt(double v, int prec = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

json tiers_json(const EvalReport& rep, const std::string& split,
                const std::map<LangPair, int>& sizes, const TierThresholds& th) {
  json t = json::object();
  for (const char* name : {"low", "medium", "rich"}) t[name] = nullptr;
  for (const auto& row : aggregate_tiers(rep, split, sizes, th)) {
    t[std::string(to_string(row.tier))] = {
        {"bleu", row.bleu}, {"accuracy", row.accuracy}, {"pairs", row.pairs}};
  }
  return t;
}

EvalReport evaluate_arm(const Ctx& ctx, const ModelConfig& mcfg, const ParamStore& params,
                        const MaskSet* masks, const CorpusSet& corpus,
                        const std::vector<LangPair>& pairs,
                        const std::vector<std::string>& splits) {
  EvalReport rep;
  const auto dec = ctx.cfg.decode_options();
  const int max_sentences = static_cast<int>(ctx.cfg.get_int("eval", "max_sentences"));
  for (const auto& split : splits) {
    for (const auto& p : pairs) {
      const ParameterMask* m = masks ? &masks->at(p) : nullptr;
      rep.rows.push_back(
          evaluate_pair(mcfg, params, m, corpus, p, split, dec, max_sentences).row);
    }
  }
  return rep;
}

// ---------------------------------------------------------------- commands

void cmd_gen_data(Ctx& ctx) {
  const auto spec = ctx.cfg.corpus_spec();
  const auto corpus = generate_corpus(spec);
  remove_matching(ctx.data, "", ".tsv");
  save_corpus(ctx.data, corpus);
  std::size_t train = 0;
  for (const auto& [p, d] : corpus.pairs) train += d.train.size();
  ctx.log << "gen-data: " << corpus.registry.languages().size() << " languages, "
          << corpus.train_pairs().size() << " training directions (" << train
          << " examples), " << corpus.zero_shot_pairs().size()
          << " zero-shot directions, vocabulary " << corpus.vocab.size() << "\n";
}

void cmd_train_base(Ctx& ctx) {
  const auto corpus = load_corpus(ctx.data);
  const auto mcfg = ctx.cfg.model_config(corpus.min_vocab());
  auto model = build_model<float>(mcfg);
  const auto tc = ctx.cfg.train_config();
  const auto pairs = tc.train_pairs(corpus);
  const double initial = mean_validation_loss(mcfg, model.params, corpus, pairs, nullptr, 64);
  TrainHooks hooks;
  hooks.on_abort = [&](const ParamStore& p, std::int64_t step) {
    save_phase_checkpoint(ctx, "base-abort", step, mcfg, p);
  };
  auto res = train_joint(mcfg, model.params, corpus, tc, 0, "base", hooks);
  const double final_loss = mean_validation_loss(mcfg, res.params, corpus, pairs, nullptr, 64);
  save_phase_checkpoint(ctx, "base", res.steps, mcfg, res.params);
  write_file_text(ctx.reports / "base_metrics.csv", metrics_csv(res.history));
  ctx.log << "train-base: " << res.steps << " steps" << (res.early_stopped ? " (patience)" : "")
          << ", mean validation loss " << fmt(initial, 4) << " -> " << fmt(final_loss, 4)
          << " (ln V = " << fmt(std::log(mcfg.vocab_size), 4) << ")\n";
}

void cmd_make_masks(Ctx& ctx) {
  const auto corpus = load_corpus(ctx.data);
  const auto base = require_checkpoint(ctx, "base", "train-base");
  const auto tc = ctx.cfg.train_config();
  const auto pairs = tc.train_pairs(corpus);
  const auto set = find_masks(base.ck.config, base.ck.params, pairs, corpus, tc, base.step);
  remove_matching(ctx.masks, "", ".mask");
  save_mask_set(ctx.masks, set);
  const auto rnd = random_mask_set(base.ck.params, pairs, tc.alpha,
                                   static_cast<std::uint64_t>(ctx.cfg.get_int("mask", "random_seed")));
  remove_matching(ctx.masks / "random", "", ".mask");
  save_mask_set(ctx.masks / "random", rnd);
  ctx.log << "make-masks: " << set.size() << " pruned masks at alpha " << fmt(tc.alpha)
          << " (" << to_string(tc.scope) << "), " << rnd.size() << " random control masks\n";
}

void cmd_lass_train(Ctx& ctx) {
  const auto corpus = load_corpus(ctx.data);
  const auto base = require_checkpoint(ctx, "base", "train-base");
  const auto masks = require_masks(ctx.masks, "make-masks");
  auto tc = ctx.cfg.train_config();
  tc.max_steps = ctx.cfg.get_int("train", "lass_steps");
  // Every arm gets the same step budget; validation is still logged.
  tc.patience = 0;
  const auto& mcfg = base.ck.config;
  for (const auto& arm : ctx.cfg.arms()) {
    TrainHooks hooks;
    hooks.on_abort = [&](const ParamStore& p, std::int64_t step) {
      save_phase_checkpoint(ctx, arm + "-abort", step, mcfg, p);
    };
    TrainResult res;
    if (arm == "lass") {
      res = lass_train(mcfg, base.ck.params, masks, corpus, tc, base.step, hooks);
    } else if (arm == "baseline") {
      res = train_joint(mcfg, base.ck.params, corpus, tc, base.step, "continue", hooks);
    } else {
      const auto rnd = require_masks(ctx.masks / "random", "make-masks");
      res = lass_train(mcfg, base.ck.params, rnd, corpus, tc, base.step, hooks);
    }
    save_phase_checkpoint(ctx, arm, base.step + res.steps, mcfg, res.params);
    write_file_text(ctx.reports / (arm + "_metrics.csv"), metrics_csv(res.history));
    ctx.log << "lass-train: arm " << arm << " ran " << res.steps << " steps"
            << (res.early_stopped ? " (patience)" : "") << "\n";
  }
}

void cmd_evaluate(Ctx& ctx) {
  const auto corpus = load_corpus(ctx.data);
  const auto masks = require_masks(ctx.masks, "make-masks");
  const auto tc = ctx.cfg.train_config();
  const auto pairs = tc.train_pairs(corpus);
  const auto th = ctx.cfg.tier_thresholds();
  const auto splits = split_list(ctx.cfg.get("eval", "splits"), ',');
  std::map<LangPair, int> sizes;
  for (const auto& p : pairs) sizes[p] = static_cast<int>(corpus.at(p).train.size());

  json out;
  out["arms"] = json::object();
  std::map<std::string, EvalReport> reports;
  for (const auto& arm : ctx.cfg.arms()) {
    if (!latest_checkpoint(ctx.ckpt, arm)) {
      ctx.log << "evaluate: no " << arm << " checkpoint, skipping that arm\n";
      continue;
    }
    const auto ck = require_checkpoint(ctx, arm, "lass-train");
    std::optional<MaskSet> rnd;
    const MaskSet* m = nullptr;
    if (arm == "lass") {
      m = &masks;
    } else if (arm == "random") {
      rnd = require_masks(ctx.masks / "random", "make-masks");
      m = &*rnd;
    }
    auto rep = evaluate_arm(ctx, ck.ck.config, ck.ck.params, m, corpus, pairs, splits);
    write_file_text(ctx.reports / (arm == "lass" ? "eval.csv" : "eval_" + arm + ".csv"),
                    rep.to_csv());
    json a;
    for (const auto& split : splits) {
      a[split] = {{"mean_bleu", rep.mean_bleu(split)},
                  {"mean_accuracy", rep.mean_accuracy(split)},
                  {"tiers", tiers_json(rep, split, sizes, th)}};
    }
    a["checkpoint"] = ck.path.filename().string();
    out["arms"][arm] = a;
    ctx.log << "evaluate: " << arm << " mean " << splits.front() << " BLEU "
            << fmt(rep.mean_bleu(splits.front())) << ", accuracy "
            << fmt(rep.mean_accuracy(splits.front())) << "\n";
    reports.emplace(arm, std::move(rep));
  }

  const auto baseline = ctx.cfg.get("eval", "baseline");
  if (!baseline.empty() && reports.count(baseline)) {
    const auto bpath = *latest_checkpoint(ctx.ckpt, baseline);
    json wr;
    wr["baseline"] = baseline;
    wr["baseline_checkpoint"] = bpath.filename().string();
    wr["baseline_hash"] = hex64(fnv1a64(std::string_view(
        reinterpret_cast<const char*>(read_file_bytes(bpath).data()),
        fs::file_size(bpath))));
    const auto& base_rep = reports.at(baseline);
    for (const auto& [arm, rep] : reports) {
      if (arm == baseline) continue;
      for (const auto& split : splits) {
        const auto sys = rep.bleu_by_pair(split);
        const auto bas = base_rep.bleu_by_pair(split);
        json w;
        w["all"] = win_ratio(sys, bas);
        for (Tier t : {Tier::kLow, Tier::kMedium, Tier::kRich}) {
          std::map<LangPair, double> s, b;
          for (const auto& [p, v] : sys) {
            if (tier_of(sizes.at(p), th) == t) {
              s[p] = v;
              b[p] = bas.at(p);
            }
          }
          w[std::string(to_string(t))] = s.empty() ? json(nullptr) : json(win_ratio(s, b));
        }
        wr["arms"][arm][split] = w;
      }
    }
    out["win_ratio"] = wr;
  } else {
    ctx.log << "evaluate: baseline '" << baseline << "' not available, no win ratio\n";
  }
  write_file_text(ctx.reports / "eval.json", out.dump(2) + "\n");
}

void cmd_zero_shot(Ctx& ctx) {
  const auto corpus = load_corpus(ctx.data);
  const auto masks = require_masks(ctx.masks, "make-masks");
  const auto lass = require_checkpoint(ctx, "lass", "lass-train");
  const auto zs = corpus.zero_shot_pairs();
  if (zs.empty()) {
    throw ConfigError("the corpus has no held-out directions; set data.zero_shot = true "
                      "and rerun gen-data");
  }
  const auto dec = ctx.cfg.decode_options();
  const int max_sentences = static_cast<int>(ctx.cfg.get_int("eval", "max_sentences"));
  const auto& pivot = corpus.pivot;

  MaskSet merged(masks.fingerprint());
  for (const auto& p : zs) {
    merged.add(merge_zero_shot(masks.at({p.src, pivot}), masks.at({pivot, p.tgt})));
  }
  remove_matching(ctx.masks / "zero_shot", "", ".mask");
  save_mask_set(ctx.masks / "zero_shot", merged);

  json out;
  EvalReport lass_rep;
  for (const auto& p : zs) {
    lass_rep.rows.push_back(evaluate_pair(lass.ck.config, lass.ck.params, &merged.at(p),
                                          corpus, p, "test", dec, max_sentences)
                                .row);
  }
  write_file_text(ctx.reports / "zero_shot_lass.csv", lass_rep.to_csv());
  out["lass"] = {{"mean_bleu", lass_rep.mean_bleu("test")},
                 {"mean_accuracy", lass_rep.mean_accuracy("test")}};
  ctx.log << "zero-shot: LaSS merged masks mean BLEU " << fmt(lass_rep.mean_bleu("test"))
          << ", accuracy " << fmt(lass_rep.mean_accuracy("test")) << "\n";

  const auto baseline = ctx.cfg.get("eval", "baseline");
  if (!baseline.empty() && latest_checkpoint(ctx.ckpt, baseline)) {
    const auto b = require_checkpoint(ctx, baseline, "lass-train");
    EvalReport brep;
    for (const auto& p : zs) {
      brep.rows.push_back(
          evaluate_pair(b.ck.config, b.ck.params, nullptr, corpus, p, "test", dec, max_sentences)
              .row);
    }
    write_file_text(ctx.reports / "zero_shot_baseline.csv", brep.to_csv());
    out["baseline"] = {{"name", baseline},
                       {"mean_bleu", brep.mean_bleu("test")},
                       {"mean_accuracy", brep.mean_accuracy("test")}};
    ctx.log << "zero-shot: baseline mean BLEU " << fmt(brep.mean_bleu("test")) << ", accuracy "
            << fmt(brep.mean_accuracy("test")) << "\n";
  }

  // Mask-swap grid: replace the encoder half or the decoder half of each
  // merged mask by another language's.
  std::vector<LangPair> swap_pairs;
  for (const auto& s : split_list(ctx.cfg.get("eval", "swap_pairs"), ',')) {
    swap_pairs.push_back(LangPair::parse(s));
  }
  if (swap_pairs.empty()) swap_pairs = zs;
  std::vector<std::string> langs;
  for (const auto& p : masks.pairs()) {
    if (p.src == pivot) langs.push_back(p.tgt);
  }
  const int swap_n = static_cast<int>(ctx.cfg.get_int("eval", "swap_sentences"));
  std::string csv = "pair,encoder_donor,decoder_donor,swapped,bleu,accuracy,n\n";
  std::vector<double> worst_enc, worst_dec, own_bleu;
  json per_pair = json::array();
  for (const auto& p : swap_pairs) {
    if (!corpus.pairs.count(p)) throw ConfigError("eval.swap_pairs: unknown direction " + p.str());
    auto run_one = [&](const LangPair& enc, const LangPair& decd, const char* kind) {
      const auto row = mask_swap_eval(lass.ck.config, lass.ck.params, masks, corpus, p, enc,
                                      decd, dec, swap_n);
      csv += p.str() + "," + enc.str() + "," + decd.str() + "," + kind + "," +
             fmt(row.bleu, 4) + "," + fmt(row.accuracy, 4) + "," + std::to_string(row.n) + "\n";
      return row.bleu;
    };
    const LangPair own_enc{p.src, pivot}, own_dec{pivot, p.tgt};
    const double own = run_one(own_enc, own_dec, "none");
    double we = 1e9, wd = 1e9;
    for (const auto& z : langs) {
      if (z != p.src && masks.contains({z, pivot})) {
        we = std::min(we, run_one({z, pivot}, own_dec, "encoder"));
      }
      if (z != p.tgt && masks.contains({pivot, z})) {
        wd = std::min(wd, run_one(own_enc, {pivot, z}, "decoder"));
      }
    }
    own_bleu.push_back(own);
    worst_enc.push_back(we);
    worst_dec.push_back(wd);
    per_pair.push_back({{"pair", p.str()}, {"own_bleu", own},
                        {"worst_encoder_swap_bleu", we}, {"worst_decoder_swap_bleu", wd}});
  }
  write_file_text(ctx.reports / "mask_swap.csv", csv);
  out["mask_swap"] = {{"pairs", per_pair},
                      {"mean_own_bleu", mean_of(own_bleu)},
                      {"mean_worst_encoder_swap_bleu", mean_of(worst_enc)},
                      {"mean_worst_decoder_swap_bleu", mean_of(worst_dec)}};
  ctx.log << "zero-shot: swap grid over " << swap_pairs.size()
          << " directions, mean worst BLEU encoder-swap " << fmt(mean_of(worst_enc))
          << ", decoder-swap " << fmt(mean_of(worst_dec)) << "\n";
  write_file_text(ctx.reports / "zero_shot.json", out.dump(2) + "\n");
}

void cmd_extend(Ctx& ctx) {
  const auto corpus = load_corpus(ctx.data);
  const auto masks = require_masks(ctx.masks, "make-masks");
  const auto lass = require_checkpoint(ctx, "lass", "lass-train");
  const auto pair_text = ctx.cfg.get("train", "extend_pair");
  if (pair_text.empty()) throw ConfigError("train.extend_pair is empty; name the new direction");
  const auto pair = LangPair::parse(pair_text);
  auto tc = ctx.cfg.train_config();
  ExtendOptions eo;
  eo.steps = ctx.cfg.get_int("train", "extend_steps");
  eo.eval_every = ctx.cfg.get_int("train", "extend_eval_every");
  eo.eval_sentences = static_cast<int>(ctx.cfg.get_int("eval", "extend_sentences"));
  const auto donor = ctx.cfg.get("mask", "extend_donor");
  if (!donor.empty()) eo.donor = LangPair::parse(donor);

  std::string csv = "step,arm,new_pair_bleu,existing_mean_bleu\n";
  json out;
  for (const bool masked : {true, false}) {
    eo.masked = masked;
    const std::string arm = masked ? "lass" : "unmasked";
    auto res = extend_new_pair(lass.ck.config, lass.ck.params, masks, corpus, pair, tc,
                               lass.step, eo);
    for (const auto& pt : res.trajectory) {
      csv += std::to_string(pt.step) + "," + arm + "," + fmt(pt.new_pair_bleu, 4) + "," +
             fmt(pt.existing_mean_bleu, 4) + "\n";
    }
    const auto& first = res.trajectory.front();
    const auto& last = res.trajectory.back();
    out[arm] = {{"new_pair_bleu", last.new_pair_bleu},
                {"existing_drop", first.existing_mean_bleu - last.existing_mean_bleu}};
    if (masked) {
      save_phase_checkpoint(ctx, "extend", lass.step + eo.steps, lass.ck.config, res.params);
      remove_matching(ctx.masks / "extend", "", ".mask");
      save_mask(ctx.masks / "extend" / mask_file_name(pair), res.mask);
    }
    ctx.log << "extend: " << arm << " arm, " << pair.str() << " BLEU "
            << fmt(last.new_pair_bleu) << ", existing pairs mean BLEU "
            << fmt(first.existing_mean_bleu) << " -> " << fmt(last.existing_mean_bleu) << "\n";
  }
  out["pair"] = pair.str();
  write_file_text(ctx.reports / "extend.csv", csv);
  write_file_text(ctx.reports / "extend.json", out.dump(2) + "\n");
}

void cmd_analyze(Ctx& ctx) {
  const auto corpus = load_corpus(ctx.data);
  const auto masks = require_masks(ctx.masks, "make-masks");
  const std::pair<Grouping, const char*> groups[] = {
      {Grouping::kFromPivot, "similarity_from_pivot.csv"},
      {Grouping::kToPivot, "similarity_to_pivot.csv"},
      {Grouping::kCross, "similarity_cross.csv"}};
  for (const auto& [g, file] : groups) {
    write_file_text(ctx.reports / file,
                    similarity_matrix(masks, corpus.pivot, g).to_csv());
  }
  const auto profile = layer_component_profile(masks);
  write_file_text(ctx.reports / "profile.csv", profile_csv(profile));

  std::string rel = "lang";
  for (const auto& l : corpus.relatedness.langs) rel += "," + l;
  rel += "\n";
  for (std::size_t i = 0; i < corpus.relatedness.langs.size(); ++i) {
    rel += corpus.relatedness.langs[i];
    for (double v : corpus.relatedness.values[i]) rel += "," + fmt(v, 4);
    rel += "\n";
  }
  write_file_text(ctx.reports / "relatedness.csv", rel);

  const auto corr = relatedness_correlation(masks, corpus);
  json out = {{"spearman", corr.spearman},
              {"n", corr.similarity.size()},
              {"profile_rows", profile.size()}};
  write_file_text(ctx.reports / "analysis.json", out.dump(2) + "\n");
  ctx.log << "analyze: Spearman(similarity, relatedness) = " << fmt(corr.spearman, 4)
          << " over " << corr.similarity.size() << " mask pairs, " << profile.size()
          << " profile rows\n";
}

void cmd_sweep(Ctx& ctx) {
  const auto corpus = load_corpus(ctx.data);
  const auto base = require_checkpoint(ctx, "base", "train-base");
  auto tc = ctx.cfg.train_config();
  const auto sweep_steps = ctx.cfg.get_int("sweep", "lass_steps");
  tc.max_steps = sweep_steps > 0 ? sweep_steps : ctx.cfg.get_int("train", "lass_steps");
  tc.patience = 0;
  const auto alphas = ctx.cfg.sweep_alphas();
  const auto pairs = tc.train_pairs(corpus);
  const auto th = ctx.cfg.tier_thresholds();
  std::map<LangPair, int> sizes;
  for (const auto& p : pairs) sizes[p] = static_cast<int>(corpus.at(p).train.size());

  const auto sets =
      find_masks_multi(base.ck.config, base.ck.params, pairs, corpus, tc, base.step, alphas);
  std::vector<SweepRow> rows;
  std::map<double, double> score;
  std::string detail = "alpha,pair,bleu,accuracy\n";
  json out;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double a = alphas[i];
    const auto dir = ctx.masks / "sweep" / ("alpha_" + fmt(a));
    remove_matching(dir, "", ".mask");
    save_mask_set(dir, sets[i]);
    const auto res = lass_train(base.ck.config, base.ck.params, sets[i], corpus, tc, base.step);
    const auto rep = evaluate_arm(ctx, base.ck.config, res.params, &sets[i], corpus, pairs,
                                  {"test"});
    for (const auto& r : rep.rows) {
      detail += fmt(a) + "," + r.pair.str() + "," + fmt(r.bleu, 4) + "," + fmt(r.accuracy, 4) +
                "\n";
    }
    for (const auto& t : aggregate_tiers(rep, "test", sizes, th)) {
      rows.push_back({a, std::string(to_string(t.tier)), t.bleu, t.accuracy});
    }
    score[a] = rep.mean_bleu("test");
    out["alphas"][fmt(a)] = score[a];
    write_file_text(ctx.reports / "sweep.csv", sweep_csv(rows));
    write_file_text(ctx.reports / "sweep_pairs.csv", detail);
    ctx.log << "sweep: alpha " << fmt(a) << " mean test BLEU " << fmt(score[a]) << "\n";
  }
  out["argmax_alpha"] = sweep_argmax(score);
  write_file_text(ctx.reports / "sweep.json", out.dump(2) + "\n");
  ctx.log << "sweep: best alpha " << fmt(sweep_argmax(score)) << "\n";
}

}  // namespace

const std::vector<std::string>& pipeline_commands() {
  static const std::vector<std::string> cmds = {"gen-data",  "train-base", "make-masks",
                                                "lass-train", "evaluate",  "zero-shot",
                                                "extend",     "analyze",   "sweep"};
  return cmds;
}

std::vector<std::string> command_sections(const std::string& command) {
  if (command == "gen-data") return {"data"};
  if (command == "train-base") return {"data", "model", "train"};
  if (command == "make-masks" || command == "lass-train" || command == "analyze") {
    return {"data", "model", "train", "mask"};
  }
  if (command == "evaluate" || command == "zero-shot" || command == "extend") {
    return {"data", "model", "train", "mask", "eval"};
  }
  if (command == "sweep") return {"data", "model", "train", "mask", "eval", "sweep"};
  throw UsageError("unknown command '" + command + "'");
}

std::optional<fs::path> latest_checkpoint(const fs::path& dir, const std::string& phase) {
  if (!fs::exists(dir)) return std::nullopt;
  std::optional<fs::path> best;
  std::int64_t best_step = -1;
  const std::string prefix = phase + ".";
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind(prefix, 0) != 0 || e.path().extension() != ".ckpt") continue;
    const auto mid = name.substr(prefix.size(), name.size() - prefix.size() - 5);
    if (mid.empty() || !std::all_of(mid.begin(), mid.end(), ::isdigit)) continue;
    const auto step = std::stoll(mid);
    if (step > best_step) {
      best_step = step;
      best = e.path();
    }
  }
  return best;
}

ExperimentConfig resolve_config(const RunOptions& opts) {
  ExperimentConfig cfg = opts.config_path ? load_config(*opts.config_path) : ExperimentConfig();
  if (opts.use_env) apply_env_overrides(cfg);
  if (opts.seed) {
    const auto s = std::to_string(*opts.seed);
    cfg.set("data", "seed", s);
    cfg.set("model", "seed", s);
    cfg.set("train", "seed", s);
  }
  cfg.validate();
  return cfg;
}

void execute_command(const std::string& command, const ExperimentConfig& cfg,
                     const RunOptions& opts) {
  const auto& deps = dependencies();
  auto it = deps.find(command);
  if (it == deps.end()) {
    std::string known;
    for (const auto& c : pipeline_commands()) known += (known.empty() ? "" : ", ") + c;
    throw UsageError("unknown command '" + command + "' (commands: " + known + ")");
  }
  if (opts.run_dir.empty()) throw UsageError("--run-dir is required");
  RunLock lock(opts.run_dir);
  Ctx ctx(cfg, opts);
  ctx.hash_hex = section_hash(cfg, command);

  for (const auto& dep : it->second) {
    const auto stamp = read_stamp(ctx, dep);
    if (!stamp) {
      throw PrerequisiteError("`" + command + "` needs the output of `" + dep +
                              "`; run `lass " + dep + " --run-dir " + opts.run_dir.string() +
                              "` first");
    }
    const auto want = section_hash(cfg, dep);
    if (*stamp != want && !opts.force) {
      throw ConfigError("the artifacts of `" + dep + "` in " + opts.run_dir.string() +
                        " were made with a different configuration (hash " + *stamp +
                        ", current " + want + "); rerun `" + dep +
                        "` with --force or use a fresh run directory");
    }
  }
  if (const auto own = read_stamp(ctx, command)) {
    if (*own == ctx.hash_hex && !opts.force) {
      ctx.log << command << ": already complete for config hash " << *own
              << "; nothing to do (use --force to rerun)\n";
      return;
    }
    if (*own != ctx.hash_hex && !opts.force) {
      throw ConfigError("`" + command + "` already ran in " + opts.run_dir.string() +
                        " with config hash " + *own + " but the current hash is " +
                        ctx.hash_hex + "; pass --force to overwrite");
    }
  }

  fs::create_directories(ctx.reports);
  write_file_text(ctx.run / "config.resolved", cfg.resolved_text());
  const auto t0 = std::chrono::steady_clock::now();
  if (command == "gen-data") cmd_gen_data(ctx);
  else if (command == "train-base") cmd_train_base(ctx);
  else if (command == "make-masks") cmd_make_masks(ctx);
  else if (command == "lass-train") cmd_lass_train(ctx);
  else if (command == "evaluate") cmd_evaluate(ctx);
  else if (command == "zero-shot") cmd_zero_shot(ctx);
  else if (command == "extend") cmd_extend(ctx);
  else if (command == "analyze") cmd_analyze(ctx);
  else if (command == "sweep") cmd_sweep(ctx);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  for (const auto& d : dependents(command)) {
    std::error_code ec;
    fs::remove(ctx.stamps / d, ec);
  }
  write_file_text(ctx.stamps / command, ctx.hash_hex + "\n");
  ctx.log << command << ": done in " << fmt(secs, 1) << " s\n";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return 2;
    case ErrorKind::kPrerequisite: return 3;
    case ErrorKind::kNumerical: return 4;
    default: return 1;
  }
}

int run_command(const std::string& command, const RunOptions& opts) {
  std::ostream& log = opts.log ? *opts.log : std::cerr;
  try {
    const auto cfg = resolve_config(opts);
    execute_command(command, cfg, opts);
    return 0;
  } catch (const Error& e) {
    log << "lass " << command << ": error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    log << "lass " << command << ": error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lass
