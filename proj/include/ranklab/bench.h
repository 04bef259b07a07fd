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

#ifndef RANKLAB_BENCH_H_
#define RANKLAB_BENCH_H_

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

// Per-example cost of full-catalog CE versus a sampled loss, both including
// the backward pass into the embedding table.
namespace ranklab::bench {

struct BenchConfig {
  std::vector<std::size_t> catalog_sizes = {500000, 1000000};
  std::vector<std::size_t> ks = {100};
  std::size_t d = 64;
  // Timed full-catalog examples per size; sampled runs use 200x as many.
  std::size_t reps = 5;
  double alpha = 100.0;
  std::uint64_t seed = 1;

  // Throws ArgumentError on empty lists, zero sizes or K >= catalog size.
  void Validate() const;
};

struct BenchRow {
  std::size_t catalog_size = 0;
  std::size_t k = 0;
  double ns_full = 0.0;
  double ns_sampled = 0.0;
  double ratio() const { return ns_full / ns_sampled; }
};

std::vector<BenchRow> RunBench(const BenchConfig& cfg);

// Columns: size,K,ns_full,ns_sampled,ratio.
void WriteBenchCsv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace ranklab::bench

#endif  // RANKLAB_BENCH_H_
