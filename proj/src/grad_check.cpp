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
#include "lass/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lass/errors.hpp"

namespace lass {

GradCheckResult grad_check(const LossFn& loss, BasicParamStore<double>& store,
                           double eps, std::size_t sample_count,
                           std::uint64_t seed, std::int64_t batch_id,
                           double floor) {
  if (!(eps > 0.0)) throw PreconditionError("grad_check eps must be > 0");
  if (!(floor > 0.0)) throw PreconditionError("grad_check floor must be > 0");
  const std::size_t total = store.total_size();
  if (total == 0) return {};

  store.zero_grad();
  const double base = loss(store, true);
  if (!std::isfinite(base)) {
    throw NumericalError("non-finite loss at the unperturbed point, batch " +
                         std::to_string(batch_id));
  }
  const auto analytic = store.flatten_grad();

  std::vector<std::size_t> flat(total);
  std::iota(flat.begin(), flat.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  const std::size_t n = std::min(sample_count, total);
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, total - 1);
    std::swap(flat[i], flat[pick(rng)]);
  }
  std::sort(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(n));

  GradCheckResult result;
  result.sampled = n;
  auto entries = store.entries();
  std::size_t ei = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t idx = flat[s];
    while (entries[ei].offset + entries[ei].size() <= idx) ++ei;
    auto& e = entries[ei];
    const std::size_t k = idx - e.offset;
    const double saved = e.values[k];
    e.values[k] = saved + eps;
    const double up = loss(store, false);
    e.values[k] = saved - eps;
    const double down = loss(store, false);
    e.values[k] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("non-finite loss while perturbing " + e.name + "[" +
                           std::to_string(k) + "], batch " +
                           std::to_string(batch_id));
    }
    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic[idx];
    const double denom = std::max({std::abs(a), std::abs(numeric), floor});
    const double rel = std::abs(a - numeric) / denom;
    if (rel > result.max_rel_error || s == 0) {
      result.max_rel_error = rel;
      result.worst_param = e.name;
      result.worst_index = k;
      result.worst_analytic = a;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

}  // namespace lass
