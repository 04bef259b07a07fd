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

#include "ranklab/sampling.h"

#include <string>

#include "ranklab/errors.h"

namespace ranklab::sampling {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t Mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : state_(Mix(seed + kGolden) ^ Mix(Mix(stream) + 0x632be59bd9b4e019ULL)) {}

std::uint64_t CounterRng::Next() {
  state_ += kGolden;
  return Mix(state_);
}

std::uint64_t CounterRng::Below(std::uint64_t n) {
  // Lemire's multiply-shift with rejection of the biased low band.
  unsigned __int128 m = static_cast<unsigned __int128>(Next()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t floor = -n % n;
    while (low < floor) {
      m = static_cast<unsigned __int128>(Next()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double CounterRng::Uniform() {
  return static_cast<double>(Next() >> 11) * 0x1.0p-53;
}

void SamplerConfig::Validate() const {
  if (num_negatives < 1) throw ArgumentError("sampler needs K >= 1");
  const std::size_t minimum = exclude_target ? 2 : 1;
  if (catalog_size < minimum) {
    throw ArgumentError("catalog of " + std::to_string(catalog_size) +
                        " items is too small to sample from");
  }
}

void SampleUniformInto(const SamplerConfig& cfg, std::size_t target,
                       std::uint64_t draw_index, std::span<std::size_t> out) {
  cfg.Validate();
  if (target >= cfg.catalog_size) {
    throw ArgumentError("target " + std::to_string(target) +
                        " outside the catalog");
  }
  if (out.size() != cfg.num_negatives) {
    throw ArgumentError("output buffer does not hold K draws");
  }
  CounterRng rng(cfg.seed, draw_index);
  if (cfg.exclude_target) {
    for (std::size_t& id : out) {
      id = rng.Below(cfg.catalog_size - 1);
      if (id >= target) ++id;
    }
  } else {
    for (std::size_t& id : out) id = rng.Below(cfg.catalog_size);
  }
}

std::vector<std::size_t> SampleUniform(const SamplerConfig& cfg,
                                       std::size_t target,
                                       std::uint64_t draw_index) {
  std::vector<std::size_t> out(cfg.num_negatives);
  SampleUniformInto(cfg, target, draw_index, out);
  return out;
}

}  // namespace ranklab::sampling
