/*
 * Copyright 2026 The RankLab Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ranklab/numerics.h"

#include <limits>

#include "ranklab/errors.h"

namespace ranklab {

double LogSumExp(std::span<const double> x, std::span<const double> weights) {
  if (x.empty()) throw ArgumentError("log_sum_exp of an empty vector");
  const bool weighted = !weights.empty();
  if (weighted && weights.size() != x.size()) {
    throw ArgumentError("log_sum_exp weights length mismatch");
  }
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = weighted ? weights[i] : 1.0;
    if (w < 0) throw ArgumentError("log_sum_exp weights must be nonnegative");
    if (w > 0 && x[i] > shift) shift = x[i];
  }
  if (shift == -std::numeric_limits<double>::infinity()) {
    throw ArgumentError("log_sum_exp needs at least one positive weight");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = weighted ? weights[i] : 1.0;
    if (w > 0) total += w * std::exp(x[i] - shift);
  }
  return shift + std::log(total);
}

}  // namespace ranklab
