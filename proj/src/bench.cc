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

#include "ranklab/bench.h"

#include <chrono>
#include <string>

#include "ranklab/errors.h"
#include "ranklab/losses.h"
#include "ranklab/metrics.h"
#include "ranklab/ops.h"
#include "ranklab/sampling.h"
#include "ranklab/tape.h"

namespace ranklab::bench {
namespace {

using Clock = std::chrono::steady_clock;

ad::Tensor UniformTensor(ad::Shape shape, std::uint64_t seed, double scale) {
  ad::Tensor t(std::move(shape));
  sampling::CounterRng rng(seed, 0);
  for (double& v : t.mutable_data()) v = scale * (2.0 * rng.Uniform() - 1.0);
  return t;
}

double FullStep(ad::Parameter& query, ad::Parameter& table, std::size_t target) {
  ad::Tape tape;
  const ad::Var q = tape.Bind(query);
  const ad::Var scores = ad::MatMulNT(q, tape.Bind(table));
  const std::size_t targets[] = {target};
  const ad::Var loss =
      ad::Sum(losses::CatalogLossBatch(losses::LossSpec::CE(), scores, targets));
  tape.Backward(loss);
  return loss.value().item();
}

double SampledStep(ad::Parameter& query, ad::Parameter& table,
                   const losses::LossSpec& spec,
                   const sampling::SamplerConfig& sampler, std::size_t target,
                   std::uint64_t draw, std::vector<std::size_t>& ids) {
  ids[0] = target;
  sampling::SampleUniformInto(sampler, target, draw,
                              std::span<std::size_t>(ids).subspan(1));
  ad::Tape tape;
  const ad::Var q = tape.Bind(query);
  const ad::Var scores = ad::GatheredDot(q, tape.Bind(table), ids);
  const ad::Var loss = ad::Sum(losses::SampledLossBatch(spec, scores));
  tape.Backward(loss);
  return loss.value().item();
}

}  // namespace

void BenchConfig::Validate() const {
  if (catalog_sizes.empty() || ks.empty()) {
    throw ArgumentError("bench needs catalog sizes and K values");
  }
  if (d == 0 || reps == 0) throw ArgumentError("d and reps must be positive");
  for (std::size_t n : catalog_sizes) {
    for (std::size_t k : ks) {
      if (k == 0 || n <= k) {
        throw ArgumentError("catalog size " + std::to_string(n) +
                            " must exceed K = " + std::to_string(k));
      }
    }
  }
}

std::vector<BenchRow> RunBench(const BenchConfig& cfg) {
  cfg.Validate();
  std::vector<BenchRow> rows;
  volatile double sink = 0.0;
  for (std::size_t n : cfg.catalog_sizes) {
    ad::Parameter table("table", UniformTensor({n, cfg.d}, cfg.seed, 0.1));
    ad::Parameter query("query", UniformTensor({1, cfg.d}, cfg.seed + 1, 1.0));
    const std::size_t target = n / 2;

    sink = sink + FullStep(query, table, target);  // warm-up
    const auto f0 = Clock::now();
    for (std::size_t r = 0; r < cfg.reps; ++r) {
      sink = sink + FullStep(query, table, target);
    }
    const double ns_full =
        std::chrono::duration<double, std::nano>(Clock::now() - f0).count() /
        double(cfg.reps);

    for (std::size_t k : cfg.ks) {
      const losses::LossSpec spec = losses::LossSpec::SCE(k, cfg.alpha);
      sampling::SamplerConfig sampler;
      sampler.catalog_size = n;
      sampler.num_negatives = k;
      sampler.seed = cfg.seed;
      std::vector<std::size_t> ids(k + 1);
      const std::size_t iters = cfg.reps * 200;
      sink = sink + SampledStep(query, table, spec, sampler, target, 0, ids);
      const auto s0 = Clock::now();
      for (std::size_t r = 0; r < iters; ++r) {
        sink = sink + SampledStep(query, table, spec, sampler, target, r + 1, ids);
      }
      const double ns_sampled =
          std::chrono::duration<double, std::nano>(Clock::now() - s0).count() /
          double(iters);
      rows.push_back({n, k, ns_full, ns_sampled});
    }
  }
  return rows;
}

void WriteBenchCsv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "size,K,ns_full,ns_sampled,ratio\n";
  for (const BenchRow& r : rows) {
    out << r.catalog_size << ',' << r.k << ',' << metrics::FormatDouble(r.ns_full)
        << ',' << metrics::FormatDouble(r.ns_sampled) << ','
        << metrics::FormatDouble(r.ratio()) << '\n';
  }
}

}  // namespace ranklab::bench
