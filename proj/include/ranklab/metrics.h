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

#ifndef RANKLAB_METRICS_H_
#define RANKLAB_METRICS_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ranklab::metrics {

// Number of catalog items scoring at least as high as the target, the target
// included. Ties count against the target.
std::size_t RankOfTarget(std::span<const double> scores, std::size_t target);

// 1 / log2(1 + rank).
double Ndcg(std::size_t rank);
// 1 / rank.
double Mrr(std::size_t rank);

enum class Metric { kNdcg, kMrr };

// Metric value when rank <= k, zero otherwise.
double MetricAtK(Metric metric, std::size_t rank, std::size_t k);

// Mean metrics over a set of queries. Column order is fixed: NDCG@k and
// MRR@k for every cutoff in ascending order, then untruncated NDCG and MRR.
struct MetricReport {
  std::vector<std::size_t> ks;
  std::vector<double> ndcg_at;  // parallel to ks
  std::vector<double> mrr_at;   // parallel to ks
  double ndcg = 0.0;
  double mrr = 0.0;
  std::size_t queries = 0;

  std::vector<std::string> ColumnNames() const;
  std::vector<double> Values() const;
  // Value of a named column such as "NDCG@10" or "MRR". Throws
  // ArgumentError for unknown names.
  double Get(const std::string& name) const;
};

// Averages each metric over `ranks` in the given order. Throws ArgumentError
// on an empty rank list or a zero cutoff.
MetricReport Aggregate(std::span<const std::size_t> ranks,
                       std::vector<std::size_t> ks = {5, 10});

// "run_id,loss,seed,<columns>" and the matching data row.
std::string CsvHeader(const MetricReport& report);
std::string CsvRow(const std::string& run_id, const std::string& loss,
                   unsigned long long seed, const MetricReport& report);

// Shortest round-trip decimal form of a double.
std::string FormatDouble(double value);

}  // namespace ranklab::metrics

#endif  // RANKLAB_METRICS_H_
