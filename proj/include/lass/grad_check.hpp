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
#include <string>

#include "lass/param_store.hpp"

namespace lass {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t sampled = 0;
};

// Loss evaluated on `store`; when `backward` is set it must also accumulate
// d(loss)/d(param) into the store gradients. Must be deterministic.
using LossFn = std::function<double(BasicParamStore<double>&, bool backward)>;

// Compares analytic gradients with central differences
//   (f(w + eps) - f(w - eps)) / (2 eps)
// at `sample_count` flat indices drawn uniformly without replacement, and
// returns max |analytic - numeric| / max(|analytic|, |numeric|, floor).
//
// The floor matters for parameters whose true gradient is exactly zero (an
// attention key bias shifts every score of a query equally, so softmax
// ignores it); there the central difference is pure rounding noise of order
// 1e-16 |f| / eps and only an absolute comparison is meaningful.
GradCheckResult grad_check(const LossFn& loss, BasicParamStore<double>& store,
                           double eps, std::size_t sample_count,
                           std::uint64_t seed = 0, std::int64_t batch_id = 0,
                           double floor = 1e-12);

}  // namespace lass
