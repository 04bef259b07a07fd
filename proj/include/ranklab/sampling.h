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

#ifndef RANKLAB_SAMPLING_H_
#define RANKLAB_SAMPLING_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ranklab::sampling {

// SplitMix64 stream keyed by (seed, stream). Two generators built from the
// same key produce the same sequence, independent of call history elsewhere.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t Next();
  // Uniform integer in [0, n); n must be positive. Unbiased.
  std::uint64_t Below(std::uint64_t n);
  // Uniform double in [0, 1).
  double Uniform();

 private:
  std::uint64_t state_;
};

struct SamplerConfig {
  std::size_t catalog_size = 0;
  std::size_t num_negatives = 1;
  // Training draws exclude the target; bound checks keep it.
  bool exclude_target = true;
  std::uint64_t seed = 0;

  // Throws ArgumentError unless K >= 1 and the catalog leaves something to
  // draw from.
  void Validate() const;
};

// K independent uniform draws with replacement from the catalog (minus the
// target when exclude_target). Deterministic in (seed, draw_index).
std::vector<std::size_t> SampleUniform(const SamplerConfig& cfg,
                                       std::size_t target,
                                       std::uint64_t draw_index);
// Same draws written into `out`, whose length must equal num_negatives.
void SampleUniformInto(const SamplerConfig& cfg, std::size_t target,
                       std::uint64_t draw_index, std::span<std::size_t> out);

}  // namespace ranklab::sampling

#endif  // RANKLAB_SAMPLING_H_
