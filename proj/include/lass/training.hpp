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
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lass/corpus.hpp"
#include "lass/evaluation.hpp"
#include "lass/mask.hpp"
#include "lass/model.hpp"
#include "lass/optimizer.hpp"

namespace lass {

// Fine-tune steps for a pair with at least `min_size` training examples.
struct FinetuneBucket {
  std::int64_t min_size = 0;
  std::int64_t steps = 0;
};

struct TrainConfig {
  LrSchedule sched{1e-3, 400};
  std::int64_t max_steps = 3000;
  int batch_size = 32;
  double temperature = 5.0;
  double alpha = 0.7;
  PruneScope scope = PruneScope::kPerTensor;
  // Sorted by min_size; the first bucket must start at 0.
  std::vector<FinetuneBucket> finetune_steps{{0, 100}, {2000, 200}, {10000, 400}, {20000, 800}};
  std::int64_t eval_every = 250;
  int patience = 5;
  std::uint64_t seed = 1;
  // Directions trained jointly; empty means every non-zero-shot corpus pair.
  std::vector<LangPair> pairs;

  void validate() const;
  std::vector<LangPair> train_pairs(const CorpusSet& corpus) const;
  std::int64_t finetune_steps_for(std::int64_t train_size) const;
};

struct MetricRecord {
  std::int64_t step = 0;
  std::string pair;
  std::string split;
  std::string metric;
  double value = 0.0;
};

std::string metrics_csv(const std::vector<MetricRecord>& records);

// Hooks shared by every training loop.
struct TrainHooks {
  // Called with the last finite parameters when a step produces a
  // non-finite loss, before the NumericalError propagates.
  std::function<void(const ParamStore&, std::int64_t step)> on_abort;
  // Called after each validation pass.
  std::function<void(const ParamStore&, std::int64_t step)> on_eval;
};

struct TrainResult {
  ParamStore params;
  std::int64_t steps = 0;        // optimizer steps taken in this phase
  bool early_stopped = false;
  std::vector<MetricRecord> history;
};

// Uniform mean of per-pair validation losses (dropout off), each pair under
// its own mask when `masks` is given.
double mean_validation_loss(const ModelConfig& mcfg, const ParamStore& params,
                            const CorpusSet& corpus, const std::vector<LangPair>& pairs,
                            const MaskSet* masks, int batch_size,
                            std::map<LangPair, double>* per_pair = nullptr);

// Joint multilingual training: each step draws a pair by temperature
// sampling and trains one single-pair batch without masks. `step_offset`
// positions the learning-rate schedule when continuing from a checkpoint;
// `phase` names the seed stream.
TrainResult train_joint(const ModelConfig& mcfg, const ParamStore& init,
                        const CorpusSet& corpus, const TrainConfig& cfg,
                        std::int64_t step_offset = 0, const std::string& phase = "base",
                        const TrainHooks& hooks = {});

// Unmasked training on a copy of `theta0` using only `pair`'s batches for
// the bucketed number of steps (or `steps_override` when given).
ParamStore finetune_pair(const ModelConfig& mcfg, const ParamStore& theta0,
                         const LangPair& pair, const CorpusSet& corpus,
                         const TrainConfig& cfg, std::int64_t step_offset,
                         std::optional<std::int64_t> steps_override = std::nullopt);

// Fine-tune then prune for every pair; θ0 is left untouched. One MaskSet per
// entry of `alphas`, all pruned from the same fine-tuned weights.
std::vector<MaskSet> find_masks_multi(const ModelConfig& mcfg, const ParamStore& theta0,
                                      const std::vector<LangPair>& pairs,
                                      const CorpusSet& corpus, const TrainConfig& cfg,
                                      std::int64_t step_offset,
                                      const std::vector<double>& alphas);

MaskSet find_masks(const ModelConfig& mcfg, const ParamStore& theta0,
                   const std::vector<LangPair>& pairs, const CorpusSet& corpus,
                   const TrainConfig& cfg, std::int64_t step_offset);

// Random-control MaskSet: per pair random_mask at cfg.alpha with a seed
// derived from `seed` and the pair.
MaskSet random_mask_set(const ParamStore& theta0, const std::vector<LangPair>& pairs,
                        double alpha, std::uint64_t seed);

// Structure-aware training continued from θ0: each step draws a pair by
// temperature sampling, runs the forward pass on θ ⊙ M_pair, and updates
// only the parameters M_pair keeps (plus the mask-exempt ones). Seed stream
// "continue" matches train_joint(phase="continue"), so all-ones masks
// reproduce continued joint training exactly.
TrainResult lass_train(const ModelConfig& mcfg, const ParamStore& theta0,
                       const MaskSet& masks, const CorpusSet& corpus,
                       const TrainConfig& cfg, std::int64_t step_offset,
                       const TrainHooks& hooks = {});

struct ExtendOptions {
  std::int64_t steps = 400;
  std::int64_t eval_every = 100;
  bool masked = true;                  // false: unmasked fine-tuning arm
  std::optional<LangPair> donor;       // reuse this pair's mask instead of pruning
  int eval_sentences = 50;             // per pair, greedy
};

struct ExtendPoint {
  std::int64_t step = 0;
  double new_pair_bleu = 0.0;
  double existing_mean_bleu = 0.0;
};

struct ExtendResult {
  ParamStore params;
  ParameterMask mask;
  std::vector<ExtendPoint> trajectory;
};

// Gives `new_pair` its own sub-network (fine-tune θ* on the pair and prune,
// or a donor's mask), then trains θ* on that pair only, under that mask
// unless opts.masked is false. Existing pairs are scored under their masks.
ExtendResult extend_new_pair(const ModelConfig& mcfg, const ParamStore& theta_star,
                             const MaskSet& masks, const CorpusSet& corpus,
                             const LangPair& new_pair, const TrainConfig& cfg,
                             std::int64_t step_offset, const ExtendOptions& opts);

}  // namespace lass
