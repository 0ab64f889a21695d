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
#include <vector>

#include "lass/mask.hpp"
#include "lass/param_store.hpp"

namespace lass {

// Inverse-square-root schedule with linear warmup:
//   lr(step) = base_lr * min(step / warmup, sqrt(warmup / step)).
struct LrSchedule {
  double base_lr = 5e-4;
  std::int64_t warmup_steps = 8000;
};

double lr_at(std::int64_t step, const LrSchedule& sched);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;
  std::int64_t step_count = 0;

  static AdamState zeros_like(const BasicParamStore<T>& store);
};

// One Adam update from the gradients currently held in `store`.
//
// With a mask, every maskable parameter whose bit is 0 keeps its value and
// moments bit-for-bit; the mask multiplies the update itself, not only the
// gradient, because Adam's decaying first moment would otherwise keep moving
// pruned weights. Non-maskable parameters always update.
template <typename T>
void optimizer_step(BasicParamStore<T>& store, AdamState<T>& state, double lr,
                    const ParameterMask* mask = nullptr,
                    const AdamConfig& cfg = {});

}  // namespace lass
