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

#include "ranklab/metrics.h"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "ranklab/errors.h"

namespace ranklab::metrics {

std::size_t RankOfTarget(std::span<const double> scores, std::size_t target) {
  if (target >= scores.size()) {
    throw IndexError("target " + std::to_string(target) +
                     " outside a catalog of " + std::to_string(scores.size()));
  }
  const double s = scores[target];
  std::size_t rank = 0;
  for (double v : scores) rank += v >= s ? 1 : 0;
  return rank;
}

double Ndcg(std::size_t rank) {
  return 1.0 / std::log2(1.0 + static_cast<double>(rank));
}

double Mrr(std::size_t rank) { return 1.0 / static_cast<double>(rank); }

double MetricAtK(Metric metric, std::size_t rank, std::size_t k) {
  if (rank > k) return 0.0;
  return metric == Metric::kNdcg ? Ndcg(rank) : Mrr(rank);
}

std::vector<std::string> MetricReport::ColumnNames() const {
  std::vector<std::string> names;
  for (std::size_t k : ks) names.push_back("NDCG@" + std::to_string(k));
  for (std::size_t k : ks) names.push_back("MRR@" + std::to_string(k));
  names.push_back("NDCG");
  names.push_back("MRR");
  return names;
}

std::vector<double> MetricReport::Values() const {
  std::vector<double> values(ndcg_at);
  values.insert(values.end(), mrr_at.begin(), mrr_at.end());
  values.push_back(ndcg);
  values.push_back(mrr);
  return values;
}

double MetricReport::Get(const std::string& name) const {
  const auto names = ColumnNames();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ArgumentError("unknown metric '" + name + "'");
  return Values()[static_cast<std::size_t>(it - names.begin())];
}

MetricReport Aggregate(std::span<const std::size_t> ranks,
                       std::vector<std::size_t> ks) {
  if (ranks.empty()) throw ArgumentError("cannot aggregate zero queries");
  std::sort(ks.begin(), ks.end());
  if (!ks.empty() && ks.front() == 0) throw ArgumentError("cutoff k must be >= 1");
  MetricReport report;
  report.ks = ks;
  report.ndcg_at.assign(ks.size(), 0.0);
  report.mrr_at.assign(ks.size(), 0.0);
  for (std::size_t r : ranks) {
    if (r == 0) throw ArgumentError("ranks start at 1");
    for (std::size_t i = 0; i < ks.size(); ++i) {
      report.ndcg_at[i] += MetricAtK(Metric::kNdcg, r, ks[i]);
      report.mrr_at[i] += MetricAtK(Metric::kMrr, r, ks[i]);
    }
    report.ndcg += Ndcg(r);
    report.mrr += Mrr(r);
  }
  const double n = static_cast<double>(ranks.size());
  for (double& v : report.ndcg_at) v /= n;
  for (double& v : report.mrr_at) v /= n;
  report.ndcg /= n;
  report.mrr /= n;
  report.queries = ranks.size();
  return report;
}

std::string FormatDouble(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string CsvHeader(const MetricReport& report) {
  std::string out = "run_id,loss,seed";
  for (const auto& name : report.ColumnNames()) out += "," + name;
  return out;
}

std::string CsvRow(const std::string& run_id, const std::string& loss,
                   unsigned long long seed, const MetricReport& report) {
  std::string out = run_id + "," + loss + "," + std::to_string(seed);
  for (double v : report.Values()) out += "," + FormatDouble(v);
  return out;
}

}  // namespace ranklab::metrics
