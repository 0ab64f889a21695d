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
#include "lass/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "lass/errors.hpp"
#include "lass/naming.hpp"

namespace lass {

double lr_at(std::int64_t step, const LrSchedule& sched) {
  if (step < 1) {
    throw PreconditionError("learning-rate step must be >= 1, got " +
                            std::to_string(step));
  }
  if (!(sched.base_lr > 0.0) || sched.warmup_steps < 1) {
    throw PreconditionError("invalid learning-rate schedule");
  }
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(sched.warmup_steps);
  return sched.base_lr * std::min(s / w, std::sqrt(w / s));
}

template <typename T>
AdamState<T> AdamState<T>::zeros_like(const BasicParamStore<T>& store) {
  AdamState<T> s;
  for (const auto& e : store.entries()) {
    s.first_moment.emplace_back(e.size(), T(0));
    s.second_moment.emplace_back(e.size(), T(0));
  }
  return s;
}

template <typename T>
void optimizer_step(BasicParamStore<T>& store, AdamState<T>& state, double lr,
                    const ParameterMask* mask, const AdamConfig& cfg) {
  auto entries = store.entries();
  if (state.first_moment.empty()) state = AdamState<T>::zeros_like(store);
  if (state.first_moment.size() != entries.size()) {
    throw StructuralError("optimizer state does not match parameter store");
  }
  if (mask) mask->check_congruent(store);

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(cfg.beta1, t));
  const T c2 = static_cast<T>(1.0 - std::pow(cfg.beta2, t));
  const T step = static_cast<T>(lr);
  const T eps = static_cast<T>(cfg.eps);

  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& e = entries[i];
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (m.size() != e.size()) {
      throw StructuralError("optimizer state shape mismatch at " + e.name);
    }
    const PackedBits* bits = mask ? mask->find(e.name) : nullptr;
    for (std::size_t k = 0; k < e.size(); ++k) {
      if (bits && !bits->test(k)) continue;
      const T g = e.grad[k];
      m[k] = b1 * m[k] + (T(1) - b1) * g;
      v[k] = b2 * v[k] + (T(1) - b2) * g * g;
      const T mhat = m[k] / c1;
      const T vhat = v[k] / c2;
      e.values[k] -= step * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void optimizer_step(BasicParamStore<float>&, AdamState<float>&, double,
                             const ParameterMask*, const AdamConfig&);
template void optimizer_step(BasicParamStore<double>&, AdamState<double>&,
                             double, const ParameterMask*, const AdamConfig&);

}  // namespace lass
