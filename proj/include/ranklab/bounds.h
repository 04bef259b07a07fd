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

#ifndef RANKLAB_BOUNDS_H_
#define RANKLAB_BOUNDS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

// Probabilities that sampled softmax losses upper-bound -log NDCG and
// -log MRR under uniform sampling, together with the exact quantities used to
// check them.
namespace ranklab::bounds {

struct BoundQuery {
  std::size_t rank = 1;           // r_+
  std::size_t num_negatives = 1;  // K
  std::size_t catalog_size = 1;   // |I|
  double alpha = 1.0;

  // Throws ArgumentError unless 1 <= rank <= catalog_size, K >= 1, alpha >= 1.
  void Validate() const;
  // r_+ / |I|: chance that one uniform draw scores at least s_+.
  double hit_probability() const;
};

struct BoundEstimate {
  double probability = 0.0;  // max(raw, 0)
  double raw = 0.0;
};

// Smallest m with rank <= 2^m - 1, i.e. ceil(log2(rank + 1)).
int MOfRank(std::size_t rank);

// Smallest integer g with g * alpha >= numerator.
std::uint64_t CeilDiv(double numerator, double alpha);

// 1 - m (1 - r/|I|)^floor(K/m). The query's alpha is not used.
BoundEstimate SsmBoundNdcg(const BoundQuery& q);
// 1 - g (1 - r/|I|)^floor(K/g) with g = ceil(m / alpha).
BoundEstimate SceBoundNdcg(const BoundQuery& q);
// Same with g = ceil(2^m / alpha).
BoundEstimate SceBoundMrr(const BoundQuery& q);

// Grouping lower bound on P(Binomial(K, p) >= m): 1 - m (1-p)^floor(K/m),
// and 1 when m = 0. Unclipped. Requires m <= K and p in [0, 1].
double BinomialTailBound(std::size_t k, double p, std::size_t m);
// Exact P(Binomial(K, p) >= m) by log-domain summation. Requires K <= 1000.
double ExactBinomialTail(std::size_t k, double p, std::size_t m);

struct McResult {
  double alpha = 1.0;
  std::size_t trials = 0;
  std::size_t ndcg_hits = 0;  // trials with l_SCE >= -log NDCG(r_+)
  std::size_t mrr_hits = 0;   // trials with l_SCE >= -log MRR(r_+)
  // Trials where l_SCE < log(1 + alpha * xi) - 1e-9. Always 0 when sound.
  std::size_t floor_violations = 0;

  double ndcg_frequency() const { return double(ndcg_hits) / double(trials); }
  double mrr_frequency() const { return double(mrr_hits) / double(trials); }
};

// Draws K negatives uniformly with replacement from the whole catalog (target
// included) per trial, evaluates l_SCE for every alpha on the same draws and
// counts how often it bounds -log NDCG / -log MRR of the target's
// full-catalog rank. Trial t uses sampler draw index t.
std::vector<McResult> McVerify(std::span<const double> scores,
                               std::size_t target, std::size_t num_negatives,
                               std::span<const double> alphas,
                               std::size_t trials, std::uint64_t seed);

struct Prop1Report {
  bool passed = true;
  std::size_t rank = 0;
  std::size_t checked = 0;  // number of n values examined
  std::optional<std::size_t> first_violation;
  std::string detail;
};

// Checks -log NDCG(r) <= -log MRR(r) <= l_CE-n <= l_CE for every n in
// [r, |catalog|] with the given slack.
Prop1Report Prop1Audit(std::span<const double> scores, std::size_t target,
                       double slack = 1e-9);

enum class BoundMetric { kNdcg, kMrr };

// Clipped bound for every (rank, K) pair: result[i][j] uses ranks[i] and
// ks[j]. Throws ArgumentError on empty lists.
std::vector<std::vector<double>> BoundGrid(std::size_t catalog_size,
                                           double alpha,
                                           std::span<const std::size_t> ranks,
                                           std::span<const std::size_t> ks,
                                           BoundMetric metric);
// Header "r_plus,<K values>" then one row per rank.
void WriteGridCsv(std::ostream& out, std::span<const std::size_t> ranks,
                  std::span<const std::size_t> ks,
                  const std::vector<std::vector<double>>& grid);

// 1, 2, 3, 5, 7 per decade up to 1000.
std::vector<std::size_t> DefaultGridAxis();

struct McCell {
  std::size_t rank = 1;
  std::size_t num_negatives = 1;
  double alpha = 1.0;
};

struct VerifyConfig {
  std::size_t trials = 100000;
  std::uint64_t seed = 1;
  std::size_t catalog_size = 12101;
  std::vector<McCell> cells;  // empty = default battery
  std::size_t ordering_instances = 10000;
  std::size_t floor_instances = 10000;
  // Negative control: replaces the closed-form bound by an overclaimed value so
  // that the Monte Carlo section must fail.
  bool corrupt_bound = false;
};

// r in {1, 5, 50, 500} x K in {10, 100, 1000} x alpha in {1, 5, 100}.
std::vector<McCell> DefaultBattery();
// Reads [{"rank":..,"K":..,"alpha":..}, ...].
std::vector<McCell> BatteryFromJson(const nlohmann::json& doc);

// Prop1Audit over random vectors of size 2..100 drawn from Gaussian,
// Student-t (2 dof) and near-tie families.
nlohmann::json RunOrderingAudit(std::size_t instances, std::uint64_t seed);
// l_SCE >= log(1 + alpha * xi) over random (s+, negatives, alpha).
nlohmann::json RunSceFloorCheck(std::size_t instances, std::uint64_t seed);
// Exact binomial tail against BinomialTailBound for K <= 30, all m,
// p = 0.05 .. 0.95.
nlohmann::json RunBinomialTailCheck();

// Runs the ordering audit, the SCE floor and binomial tail checks and the Monte Carlo battery.
// The report's "all_passed" is true iff every section passed.
nlohmann::json RunVerification(const VerifyConfig& cfg);

}  // namespace ranklab::bounds

#endif  // RANKLAB_BOUNDS_H_
