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
#include "lass/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "lass/errors.hpp"
#include "lass/io.hpp"

namespace lass {

namespace {

std::uint64_t stream_seed(std::uint64_t seed, const std::string& tag) {
  return fnv1a64(tag, seed ^ 0x2545f4914f6cdd1dULL);
}

std::vector<std::int64_t> pair_sizes(const CorpusSet& corpus,
                                     const std::vector<LangPair>& pairs) {
  std::vector<std::int64_t> sizes;
  for (const auto& p : pairs) sizes.push_back(static_cast<std::int64_t>(corpus.at(p).train.size()));
  return sizes;
}

// Everything one optimization loop needs; masks optional.
struct LoopSpec {
  std::string phase;
  std::vector<LangPair> pairs;
  const MaskSet* masks = nullptr;
  std::int64_t steps = 0;
  std::int64_t step_offset = 0;
  bool validate = true;  // evaluate + patience
  std::int64_t callback_every = 0;
  std::function<void(const ParamStore&, std::int64_t)> callback;
};

TrainResult run_loop(const ModelConfig& mcfg, const ParamStore& init,
                     const CorpusSet& corpus, const TrainConfig& cfg,
                     const LoopSpec& spec, const TrainHooks& hooks) {
  TrainResult res;
  res.params = init;
  if (spec.pairs.empty()) throw DataError("no training pairs for phase " + spec.phase);
  if (spec.masks) {
    for (const auto& p : spec.pairs) {
      if (!spec.masks->contains(p)) {
        throw ConfigError("no mask for training pair " + p.str() +
                          "; run make-masks for every trained pair");
      }
      spec.masks->at(p).check_congruent(init);
    }
    if (spec.masks->fingerprint() != init.fingerprint()) {
      throw StructuralError("mask set fingerprint does not match the model");
    }
  }
  const auto sizes = pair_sizes(corpus, spec.pairs);
  PairSampler sampler(spec.pairs, sizes, cfg.temperature,
                      stream_seed(cfg.seed, spec.phase + "/pairs"));
  std::map<LangPair, BatchStream> streams;
  for (const auto& p : spec.pairs) {
    streams.emplace(p, BatchStream(corpus, p, cfg.batch_size,
                                   stream_seed(cfg.seed, spec.phase + "/batches/" + p.str())));
  }
  std::mt19937_64 dropout_rng(stream_seed(cfg.seed, spec.phase + "/dropout"));
  AdamState<float> state;
  ParamStore work;
  if (spec.masks) work = init;

  double best = std::numeric_limits<double>::infinity();
  int bad_evals = 0;
  auto evaluate = [&](std::int64_t step) {
    std::map<LangPair, double> per_pair;
    const double mean = mean_validation_loss(mcfg, res.params, corpus, spec.pairs,
                                             spec.masks, std::max(cfg.batch_size, 64),
                                             &per_pair);
    for (const auto& [p, v] : per_pair) {
      res.history.push_back({step, p.str(), "valid", "loss", v});
    }
    res.history.push_back({step, "mean", "valid", "loss", mean});
    if (hooks.on_eval) hooks.on_eval(res.params, step);
    if (mean < best - 1e-9) {
      best = mean;
      bad_evals = 0;
    } else {
      ++bad_evals;
    }
    return cfg.patience > 0 && bad_evals >= cfg.patience;
  };

  for (std::int64_t k = 1; k <= spec.steps; ++k) {
    const LangPair pair = sampler.next();
    const Batch batch = streams.at(pair).next();
    ForwardOptions fo;
    fo.train = true;
    fo.backward = true;
    fo.rng = &dropout_rng;
    const ParameterMask* mask = spec.masks ? &spec.masks->at(pair) : nullptr;
    double loss = 0.0;
    try {
      if (mask) {
        apply_mask_into(res.params, *mask, work);
        work.zero_grad();
        loss = forward_loss(mcfg, work, batch, fo).loss;
        auto dst = res.params.entries();
        auto src = work.entries();
        for (std::size_t i = 0; i < dst.size(); ++i) std::swap(dst[i].grad, src[i].grad);
      } else {
        res.params.zero_grad();
        loss = forward_loss(mcfg, res.params, batch, fo).loss;
      }
    } catch (const NumericalError& e) {
      if (hooks.on_abort) hooks.on_abort(res.params, spec.step_offset + k - 1);
      throw NumericalError(spec.phase + " step " + std::to_string(spec.step_offset + k) +
                           ": " + e.what());
    }
    optimizer_step(res.params, state, lr_at(spec.step_offset + k, cfg.sched), mask);
    res.steps = k;
    res.history.push_back({spec.step_offset + k, pair.str(), "train", "loss", loss});
    if (spec.callback && spec.callback_every > 0 && k % spec.callback_every == 0) {
      spec.callback(res.params, k);
    }
    if (spec.validate && cfg.eval_every > 0 && k % cfg.eval_every == 0 &&
        evaluate(spec.step_offset + k)) {
      res.early_stopped = true;
      break;
    }
  }
  return res;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(sched.base_lr > 0.0)) throw ConfigError("train.base_lr must be > 0");
  if (sched.warmup_steps < 1) throw ConfigError("train.warmup_steps must be >= 1");
  if (max_steps < 0) throw ConfigError("train.max_steps must be >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(temperature >= 1.0)) throw ConfigError("train.temperature must be >= 1");
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw ConfigError("mask.alpha must lie in [0,1), got " + std::to_string(alpha));
  }
  if (finetune_steps.empty() || finetune_steps.front().min_size != 0) {
    throw ConfigError("train.finetune_steps must start with a bucket at size 0");
  }
  for (std::size_t i = 0; i < finetune_steps.size(); ++i) {
    if (finetune_steps[i].steps < 0) throw ConfigError("train.finetune_steps: negative steps");
    if (i && finetune_steps[i].min_size <= finetune_steps[i - 1].min_size) {
      throw ConfigError("train.finetune_steps buckets must be sorted by size");
    }
  }
  if (eval_every < 0) throw ConfigError("train.eval_every must be >= 0");
  if (patience < 0) throw ConfigError("train.patience must be >= 0");
}

std::int64_t TrainConfig::finetune_steps_for(std::int64_t train_size) const {
  std::int64_t steps = 0;
  for (const auto& b : finetune_steps) {
    if (train_size >= b.min_size) steps = b.steps;
  }
  return steps;
}

std::vector<LangPair> TrainConfig::train_pairs(const CorpusSet& corpus) const {
  if (pairs.empty()) return corpus.train_pairs();
  for (const auto& p : pairs) {
    if (!corpus.pairs.count(p) || corpus.at(p).zero_shot) {
      throw ConfigError("training direction " + p.str() + " has no training data");
    }
  }
  return pairs;
}

std::string metrics_csv(const std::vector<MetricRecord>& records) {
  std::string out = "step,pair,split,metric,value\n";
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, ",%.6g\n", r.value);
    out += std::to_string(r.step) + "," + r.pair + "," + r.split + "," + r.metric + buf;
  }
  return out;
}

double mean_validation_loss(const ModelConfig& mcfg, const ParamStore& params,
                            const CorpusSet& corpus, const std::vector<LangPair>& pairs,
                            const MaskSet* masks, int batch_size,
                            std::map<LangPair, double>* per_pair) {
  double sum = 0.0;
  int counted = 0;
  for (const auto& p : pairs) {
    const auto& data = corpus.at(p);
    if (data.valid.empty()) continue;
    ParamStore view = masks ? apply_mask(params, masks->at(p)) : params;
    double loss = 0.0;
    double tokens = 0.0;
    for (const auto& b : split_batches(corpus, p, data.valid, batch_size)) {
      auto out = forward_loss(mcfg, view, b);
      loss += out.loss * out.target_tokens;
      tokens += out.target_tokens;
    }
    const double mean = tokens > 0 ? loss / tokens : 0.0;
    if (per_pair) (*per_pair)[p] = mean;
    sum += mean;
    ++counted;
  }
  return counted ? sum / counted : 0.0;
}

TrainResult train_joint(const ModelConfig& mcfg, const ParamStore& init,
                        const CorpusSet& corpus, const TrainConfig& cfg,
                        std::int64_t step_offset, const std::string& phase,
                        const TrainHooks& hooks) {
  cfg.validate();
  LoopSpec spec;
  spec.phase = phase;
  spec.pairs = cfg.train_pairs(corpus);
  spec.steps = cfg.max_steps;
  spec.step_offset = step_offset;
  return run_loop(mcfg, init, corpus, cfg, spec, hooks);
}

ParamStore finetune_pair(const ModelConfig& mcfg, const ParamStore& theta0,
                         const LangPair& pair, const CorpusSet& corpus,
                         const TrainConfig& cfg, std::int64_t step_offset,
                         std::optional<std::int64_t> steps_override) {
  const auto& data = corpus.at(pair);
  LoopSpec spec;
  spec.phase = "finetune/" + pair.str();
  spec.pairs = {pair};
  spec.steps = steps_override.value_or(
      cfg.finetune_steps_for(static_cast<std::int64_t>(data.train.size())));
  spec.step_offset = step_offset;
  spec.validate = false;
  if (spec.steps == 0) return theta0;
  return run_loop(mcfg, theta0, corpus, cfg, spec, {}).params;
}

std::vector<MaskSet> find_masks_multi(const ModelConfig& mcfg, const ParamStore& theta0,
                                      const std::vector<LangPair>& pairs,
                                      const CorpusSet& corpus, const TrainConfig& cfg,
                                      std::int64_t step_offset,
                                      const std::vector<double>& alphas) {
  cfg.validate();
  std::vector<MaskSet> sets;
  for (double a : alphas) {
    if (!(a >= 0.0 && a < 1.0)) {
      throw ConfigError("pruning rate " + std::to_string(a) + " outside [0,1)");
    }
    sets.emplace_back(theta0.fingerprint());
  }
  for (const auto& p : pairs) {
    const ParamStore tuned = finetune_pair(mcfg, theta0, p, corpus, cfg, step_offset);
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      sets[i].add(magnitude_prune(tuned, alphas[i], cfg.scope, p));
    }
  }
  return sets;
}

MaskSet find_masks(const ModelConfig& mcfg, const ParamStore& theta0,
                   const std::vector<LangPair>& pairs, const CorpusSet& corpus,
                   const TrainConfig& cfg, std::int64_t step_offset) {
  return std::move(find_masks_multi(mcfg, theta0, pairs, corpus, cfg, step_offset,
                                    {cfg.alpha})
                       .front());
}

MaskSet random_mask_set(const ParamStore& theta0, const std::vector<LangPair>& pairs,
                        double alpha, std::uint64_t seed) {
  MaskSet set(theta0.fingerprint());
  for (const auto& p : pairs) {
    set.add(random_mask(theta0, alpha, stream_seed(seed, "random/" + p.str()), p));
  }
  return set;
}

TrainResult lass_train(const ModelConfig& mcfg, const ParamStore& theta0,
                       const MaskSet& masks, const CorpusSet& corpus,
                       const TrainConfig& cfg, std::int64_t step_offset,
                       const TrainHooks& hooks) {
  cfg.validate();
  LoopSpec spec;
  spec.phase = "continue";
  spec.pairs = cfg.train_pairs(corpus);
  spec.masks = &masks;
  spec.steps = cfg.max_steps;
  spec.step_offset = step_offset;
  return run_loop(mcfg, theta0, corpus, cfg, spec, hooks);
}

ExtendResult extend_new_pair(const ModelConfig& mcfg, const ParamStore& theta_star,
                             const MaskSet& masks, const CorpusSet& corpus,
                             const LangPair& new_pair, const TrainConfig& cfg,
                             std::int64_t step_offset, const ExtendOptions& opts) {
  cfg.validate();
  if (masks.contains(new_pair)) {
    throw UsageError("pair " + new_pair.str() + " already has a sub-network");
  }
  if (!corpus.pairs.count(new_pair) || !corpus.registry.contains(new_pair.src) ||
      !corpus.registry.contains(new_pair.tgt)) {
    throw DataError("pair " + new_pair.str() +
                    " is not in the corpus vocabulary; regenerate the data with "
                    "its languages included");
  }
  ExtendResult res;
  if (opts.donor) {
    res.mask = masks.at(*opts.donor);
    res.mask.pair = new_pair;
  } else {
    const ParamStore tuned =
        finetune_pair(mcfg, theta_star, new_pair, corpus, cfg, step_offset);
    res.mask = magnitude_prune(tuned, cfg.alpha, cfg.scope, new_pair);
  }
  MaskSet own(theta_star.fingerprint());
  own.add(res.mask);

  DecodeOptions dec;
  auto score = [&](const ParamStore& params, std::int64_t step) {
    ExtendPoint pt;
    pt.step = step;
    pt.new_pair_bleu = evaluate_pair(mcfg, params, opts.masked ? &res.mask : nullptr,
                                     corpus, new_pair, "test", dec, opts.eval_sentences)
                           .row.bleu;
    double sum = 0.0;
    for (const auto& [p, m] : masks.masks()) {
      sum += evaluate_pair(mcfg, params, &m, corpus, p, "test", dec, opts.eval_sentences)
                 .row.bleu;
    }
    pt.existing_mean_bleu = masks.size() ? sum / static_cast<double>(masks.size()) : 0.0;
    res.trajectory.push_back(pt);
  };

  TrainConfig tc = cfg;
  tc.patience = 0;
  score(theta_star, 0);
  LoopSpec spec;
  spec.phase = "extend/" + new_pair.str();
  spec.pairs = {new_pair};
  spec.masks = opts.masked ? &own : nullptr;
  spec.steps = opts.steps;
  spec.step_offset = step_offset;
  spec.validate = false;
  spec.callback_every = opts.eval_every;
  spec.callback = [&](const ParamStore& params, std::int64_t step) {
    if (step != opts.steps) score(params, step);
  };
  res.params = run_loop(mcfg, theta_star, corpus, tc, spec, {}).params;
  if (opts.steps > 0) score(res.params, opts.steps);
  return res;
}

}  // namespace lass
