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

#ifndef RANKLAB_NUMERICS_H_
#define RANKLAB_NUMERICS_H_

#include <cmath>
#include <span>

namespace ranklab {

// Branches on the sign of x so that exp() never overflows.
inline double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x) without overflow or cancellation.
inline double Softplus(double x) {
  return std::fmax(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

// log sum_i w_i exp(x_i), shifted by the max over terms with positive
// weight. An empty `weights` means all ones. Throws ArgumentError on empty
// input, mismatched lengths, negative weights or no positive weight.
double LogSumExp(std::span<const double> x,
                 std::span<const double> weights = {});

}  // namespace ranklab

#endif  // RANKLAB_NUMERICS_H_
