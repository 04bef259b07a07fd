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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "ranklab/errors.h"
#include "ranklab/metrics.h"

namespace ranklab::metrics {
namespace {

TEST_CASE("rank_of_target examples") {
  const std::vector<double> scores = {0.9, 0.5, 0.7};
  CHECK(RankOfTarget(scores, 1) == 3);
  CHECK(RankOfTarget(scores, 0) == 1);
  const std::vector<double> flat(17, 0.25);
  CHECK(RankOfTarget(flat, 4) == 17);
  CHECK_THROWS_AS(RankOfTarget(scores, 3), IndexError);
}

TEST_CASE("ndcg and mrr examples") {
  CHECK(Ndcg(1) == 1.0);
  CHECK(Mrr(1) == 1.0);
  CHECK(Ndcg(3) == 0.5);
  CHECK(Mrr(4) == 0.25);
}

TEST_CASE("metric_at_k examples") {
  CHECK(MetricAtK(Metric::kNdcg, 11, 10) == 0.0);
  CHECK(MetricAtK(Metric::kMrr, 5, 5) == 0.2);
  CHECK(MetricAtK(Metric::kNdcg, 1, 5) == 1.0);
}

TEST_CASE("aggregate examples") {
  const std::vector<std::size_t> ones = {1, 1};
  const MetricReport all = Aggregate(ones);
  for (double v : all.Values()) CHECK(v == 1.0);
  const std::vector<std::size_t> mixed = {1, 3};
  CHECK(Aggregate(mixed).ndcg == 0.75);
  CHECK(Aggregate(mixed).Get("NDCG@5") == 0.75);
  CHECK_THROWS_AS(Aggregate(std::vector<std::size_t>{}), ArgumentError);
  CHECK_THROWS_AS(Aggregate(mixed).Get("HR@10"), ArgumentError);
}

TEST_CASE("aggregate equals naive re-aggregation") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> dist(1, 60);
  std::vector<std::size_t> ranks(1000);
  for (auto& r : ranks) r = dist(rng);
  const MetricReport report = Aggregate(ranks, {10, 5});
  double ndcg5 = 0, ndcg10 = 0, mrr5 = 0, mrr10 = 0, ndcg = 0, mrr = 0;
  for (std::size_t r : ranks) {
    const double n = 1.0 / std::log2(1.0 + r);
    const double m = 1.0 / r;
    ndcg += n;
    mrr += m;
    if (r <= 5) ndcg5 += n, mrr5 += m;
    if (r <= 10) ndcg10 += n, mrr10 += m;
  }
  const double q = 1000.0;
  CHECK(report.ks == std::vector<std::size_t>{5, 10});
  CHECK(std::fabs(report.Get("NDCG@5") - ndcg5 / q) <= 1e-12);
  CHECK(std::fabs(report.Get("NDCG@10") - ndcg10 / q) <= 1e-12);
  CHECK(std::fabs(report.Get("MRR@5") - mrr5 / q) <= 1e-12);
  CHECK(std::fabs(report.Get("MRR@10") - mrr10 / q) <= 1e-12);
  CHECK(std::fabs(report.ndcg - ndcg / q) <= 1e-12);
  CHECK(std::fabs(report.mrr - mrr / q) <= 1e-12);
  CHECK(report.queries == 1000);
}

TEST_CASE("metric invariants") {
  for (std::size_t r = 1; r <= 2000; ++r) {
    if (r == 1) {
      CHECK(Ndcg(r) == Mrr(r));
    } else {
      CHECK(Ndcg(r) > Mrr(r));
    }
    for (std::size_t k = 1; k <= 12; ++k) {
      for (Metric m : {Metric::kNdcg, Metric::kMrr}) {
        CHECK(MetricAtK(m, r, k) >= MetricAtK(m, r + 1, k));
        CHECK(MetricAtK(m, r, k + 1) >= MetricAtK(m, r, k));
      }
    }
  }
  // Rank is unchanged by a strictly increasing transform of all scores.
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(30);
    for (auto& v : s) v = std::round(normal(rng) * 4) / 4;  // forces ties
    std::vector<double> t(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) t[i] = std::exp(3 * s[i]) - 7;
    for (std::size_t target = 0; target < s.size(); ++target) {
      CHECK(RankOfTarget(s, target) == RankOfTarget(t, target));
    }
  }
}

TEST_CASE("csv row layout") {
  const std::vector<std::size_t> ranks = {1, 3};
  const MetricReport report = Aggregate(ranks);
  CHECK(CsvHeader(report) ==
        "run_id,loss,seed,NDCG@5,NDCG@10,MRR@5,MRR@10,NDCG,MRR");
  CHECK(CsvRow("r1", "ce", 7, report) ==
        "r1,ce,7,0.75,0.75,0.6666666666666666,0.6666666666666666,0.75,"
        "0.6666666666666666");
}

}  // namespace
}  // namespace ranklab::metrics
