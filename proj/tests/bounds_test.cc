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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "ranklab/bounds.h"
#include "ranklab/errors.h"
#include "ranklab/losses.h"

namespace ranklab::bounds {
namespace {

constexpr std::size_t kCatalog = 12101;

// Independent oracle: plain pow and the textbook binomial pmf recursion.
double NaiveBound(std::size_t k, double p, std::size_t groups) {
  if (groups == 0) return 1.0;
  return 1.0 - double(groups) * std::pow(1.0 - p, double(k / groups));
}

double NaiveTail(std::size_t k, double p, std::size_t m) {
  double pmf = std::pow(1.0 - p, double(k));
  double tail = 0.0;
  for (std::size_t j = 0; j <= k; ++j) {
    if (j >= m) tail += pmf;
    pmf *= double(k - j) / double(j + 1) * p / (1.0 - p);
  }
  return tail;
}

TEST_CASE("m_of_rank examples") {
  CHECK(MOfRank(1) == 1);
  CHECK(MOfRank(2) == 2);
  CHECK(MOfRank(3) == 2);
  CHECK(MOfRank(7) == 3);
  CHECK(MOfRank(8) == 4);
  CHECK(MOfRank(500) == 9);
  CHECK_THROWS_AS(MOfRank(0), ArgumentError);
  for (std::size_t r = 1; r < 5000; ++r) {
    const int m = MOfRank(r);
    CHECK((std::size_t{1} << m) - 1 >= r);
    CHECK((std::size_t{1} << (m - 1)) - 1 < r);
  }
}

TEST_CASE("ceil division is exact") {
  CHECK(CeilDiv(9, 1.0) == 9);
  CHECK(CeilDiv(9, 5.0) == 2);
  CHECK(CeilDiv(10, 5.0) == 2);
  CHECK(CeilDiv(9, 100.0) == 1);
  CHECK(CeilDiv(3, 1.5) == 2);
  CHECK(CeilDiv(512, 100.0) == 6);
  CHECK(CeilDiv(0, 3.0) == 0);
}

TEST_CASE("ssm_bound_ndcg examples") {
  const BoundEstimate a = SsmBoundNdcg({1, 1, 2, 1.0});
  CHECK(a.probability == doctest::Approx(0.5).epsilon(1e-15));
  const BoundEstimate b = SsmBoundNdcg({10, 100, kCatalog, 1.0});
  CHECK(b.raw < 0.0);
  CHECK(b.raw == doctest::Approx(NaiveBound(100, 10.0 / kCatalog, 4)));
  CHECK(b.probability == 0.0);
  const BoundEstimate c = SsmBoundNdcg({500, 1000, kCatalog, 1.0});
  CHECK(std::abs(c.probability - 0.917) <= 0.001);
  CHECK(c.probability ==
        doctest::Approx(NaiveBound(1000, 500.0 / kCatalog, 9)).epsilon(1e-12));
}

TEST_CASE("sce_bound_ndcg examples") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const std::size_t r = 1 + rng() % 2000;
    const std::size_t k = 1 + rng() % 2000;
    const BoundQuery q{r, k, kCatalog, 1.0};
    CHECK(SceBoundNdcg(q).raw == SsmBoundNdcg(q).raw);
    // alpha >= m collapses to a single group.
    const BoundQuery big{r, k, kCatalog, double(MOfRank(r)) + 0.5 * (i % 3)};
    const double p = double(r) / kCatalog;
    CHECK(SceBoundNdcg(big).raw ==
          doctest::Approx(1.0 - std::pow(1.0 - p, double(k))).epsilon(1e-12));
  }
  const BoundEstimate e = SceBoundNdcg({10, 100, kCatalog, 100.0});
  CHECK(std::abs(e.probability - 0.0794) <= 0.0005);
  CHECK(e.probability ==
        doctest::Approx(1.0 - std::pow(1.0 - 10.0 / kCatalog, 100.0))
            .epsilon(1e-12));
}

TEST_CASE("sce_bound_mrr examples") {
  const BoundQuery q{1, 37, 50, 2.0};
  CHECK(SceBoundMrr(q).raw ==
        doctest::Approx(1.0 - std::pow(1.0 - 1.0 / 50, 37.0)).epsilon(1e-12));
  const BoundEstimate b = SceBoundMrr({1, 1, 2, 1.0});
  CHECK(b.raw == doctest::Approx(-1.0));
  CHECK(b.probability == 0.0);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 2000; ++i) {
    const BoundQuery x{1 + rng() % 3000, 1 + rng() % 3000, kCatalog,
                       1.0 + double(rng() % 200)};
    CHECK(SceBoundMrr(x).probability <= SceBoundNdcg(x).probability);
    const std::uint64_t g = CeilDiv(std::ldexp(1.0, MOfRank(x.rank)), x.alpha);
    CHECK(SceBoundMrr(x).raw ==
          doctest::Approx(NaiveBound(x.num_negatives, x.hit_probability(), g))
              .epsilon(1e-10));
  }
}

TEST_CASE("query validation") {
  CHECK_THROWS_AS(SsmBoundNdcg({0, 1, 10, 1.0}), ArgumentError);
  CHECK_THROWS_AS(SsmBoundNdcg({11, 1, 10, 1.0}), ArgumentError);
  CHECK_THROWS_AS(SsmBoundNdcg({1, 0, 10, 1.0}), ArgumentError);
  CHECK_THROWS_AS(SceBoundNdcg({1, 1, 10, 0.5}), ArgumentError);
  CHECK_THROWS_AS(SceBoundNdcg({1, 1, 10, NAN}), ArgumentError);
  CHECK_NOTHROW(SceBoundNdcg({10, 1, 10, 1.0}));
}

TEST_CASE("binomial_tail_bound examples") {
  CHECK(BinomialTailBound(10, 0.3, 0) == 1.0);
  CHECK(BinomialTailBound(0, 0.3, 0) == 1.0);
  CHECK(BinomialTailBound(10, 0.5, 1) ==
        doctest::Approx(0.999023).epsilon(1e-6));
  CHECK_THROWS_AS(BinomialTailBound(3, 0.5, 4), ArgumentError);
  CHECK_THROWS_AS(BinomialTailBound(3, 1.5, 1), ArgumentError);
  CHECK(BinomialTailBound(5, 1.0, 2) == 1.0);
  CHECK(BinomialTailBound(5, 0.0, 2) == -1.0);
}

TEST_CASE("exact_binomial_tail examples") {
  CHECK(ExactBinomialTail(10, 0.3, 0) == 1.0);
  CHECK(ExactBinomialTail(2, 0.5, 2) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(ExactBinomialTail(10, 0.3, 3) == doctest::Approx(0.617217).epsilon(1e-6));
  CHECK_THROWS_AS(ExactBinomialTail(1001, 0.5, 1), ArgumentError);
  for (std::size_t k = 1; k <= 60; ++k) {
    for (std::size_t m = 0; m <= k; ++m) {
      for (double p : {0.01, 0.2, 0.5, 0.9}) {
        CHECK(ExactBinomialTail(k, p, m) ==
              doctest::Approx(NaiveTail(k, p, m)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("binomial tail bound never exceeds the exact tail") {
  for (std::size_t k = 1; k <= 30; ++k) {
    for (std::size_t m = 0; m <= k; ++m) {
      for (int step = 1; step <= 19; ++step) {
        const double p = 0.05 * step;
        CHECK(ExactBinomialTail(k, p, m) >=
              BinomialTailBound(k, p, m) - 1e-12);
      }
    }
  }
}

TEST_CASE("exact tail is non-decreasing in K") {
  for (std::size_t m = 0; m <= 10; ++m) {
    for (double p : {0.05, 0.3, 0.75}) {
      double prev = 0.0;
      for (std::size_t k = m; k <= 200; ++k) {
        const double t = ExactBinomialTail(k, p, m);
        CHECK(t >= prev - 1e-12);
        prev = t;
      }
    }
  }
}

TEST_CASE("sce bound is non-decreasing in alpha") {
  const std::vector<double> alphas = {1, 1.5, 2, 3, 5, 8, 20, 100, 1000};
  for (std::size_t r : {1, 3, 10, 77, 500, 4000}) {
    for (std::size_t k : {1, 10, 100, 1000, 10000}) {
      double ndcg = -1, mrr = -1;
      for (double a : alphas) {
        const BoundQuery q{r, k, kCatalog, a};
        CHECK(SceBoundNdcg(q).probability >= ndcg);
        CHECK(SceBoundMrr(q).probability >= mrr);
        CHECK(SceBoundNdcg(q).probability >=
              SsmBoundNdcg(q).probability);
        ndcg = SceBoundNdcg(q).probability;
        mrr = SceBoundMrr(q).probability;
      }
    }
  }
}

TEST_CASE("bound grid") {
  const std::vector<std::size_t> ranks = DefaultGridAxis();
  const std::vector<std::size_t> ks = DefaultGridAxis();
  CHECK(ranks.front() == 1);
  CHECK(ranks.back() == 1000);
  const auto g1 = BoundGrid(kCatalog, 1.0, ranks, ks, BoundMetric::kNdcg);
  const auto g5 = BoundGrid(kCatalog, 5.0, ranks, ks, BoundMetric::kNdcg);
  const auto g100 = BoundGrid(kCatalog, 100.0, ranks, ks, BoundMetric::kNdcg);
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    for (std::size_t j = 0; j < ks.size(); ++j) {
      CHECK(g1[i][j] <= g5[i][j]);
      CHECK(g5[i][j] <= g100[i][j]);
      CHECK(g1[i][j] >= 0.0);
      CHECK(g100[i][j] <= 1.0);
    }
  }
  auto at = [&](const auto& g, std::size_t r, std::size_t k) {
    const auto ri = std::find(ranks.begin(), ranks.end(), r) - ranks.begin();
    const auto ki = std::find(ks.begin(), ks.end(), k) - ks.begin();
    return g[ri][ki];
  };
  CHECK(at(g1, 10, 100) == 0.0);
  CHECK(std::abs(at(g1, 500, 1000) - 0.917) <= 0.001);
  CHECK(std::abs(at(g100, 10, 100) - 0.0794) <= 0.0005);

  const std::vector<std::size_t> one_r = {37}, one_k = {222};
  const auto single = BoundGrid(kCatalog, 5.0, one_r, one_k, BoundMetric::kMrr);
  REQUIRE(single.size() == 1);
  REQUIRE(single[0].size() == 1);
  CHECK(single[0][0] == SceBoundMrr({37, 222, kCatalog, 5.0}).probability);
  CHECK_THROWS_AS(BoundGrid(kCatalog, 1.0, {}, ks, BoundMetric::kNdcg),
                  ArgumentError);

  std::ostringstream csv;
  const std::vector<std::size_t> rs = {1, 10}, kk = {10, 100};
  WriteGridCsv(csv, rs, kk, BoundGrid(kCatalog, 1.0, rs, kk, BoundMetric::kNdcg));
  const std::string text = csv.str();
  CHECK(text.rfind("r_plus,10,100\n1,", 0) == 0);
  CHECK(text.find("\n10,") != std::string::npos);
}

TEST_CASE("prop1_audit") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(50);
    for (double& x : s) x = normal(rng);
    const Prop1Report r = Prop1Audit(s, rng() % 50);
    CHECK(r.passed);
    CHECK(r.checked == 50 - r.rank + 1);
  }
  const std::vector<double> flat(20, 0.7);
  const Prop1Report f = Prop1Audit(flat, 4);
  CHECK(f.passed);
  CHECK(f.rank == 20);
  CHECK(f.checked == 1);
  std::vector<double> ties(40);
  for (std::size_t i = 0; i < ties.size(); ++i) {
    ties[i] = 1.0 + 1e-9 * double(i % 3);
  }
  for (std::size_t t = 0; t < ties.size(); ++t) CHECK(Prop1Audit(ties, t).passed);
  // A negative slack exposes the tightest link: at r=1 the chain is all 0.
  const std::vector<double> top = {5.0, 0.0};
  CHECK_FALSE(Prop1Audit(top, 0, -1e-3).passed);
}

TEST_CASE("mc_verify") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  std::vector<double> s(2000);
  for (double& x : s) x = normal(rng);
  // Top-ranked target: every trial holds.
  const std::size_t best = std::max_element(s.begin(), s.end()) - s.begin();
  const std::vector<double> one = {1.0};
  const auto top = McVerify(s, best, 10, one, 500, 1);
  CHECK(top[0].ndcg_frequency() == 1.0);
  CHECK(top[0].mrr_frequency() == 1.0);

  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return s[a] > s[b]; });
  const std::size_t target = order[39];  // rank 40
  const std::vector<double> alphas = {1.0, 5.0, 100.0};
  const std::size_t trials = 20000;
  const auto res = McVerify(s, target, 100, alphas, trials, 3);
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    CHECK(res[a].floor_violations == 0);
    const BoundQuery q{40, 100, s.size(), alphas[a]};
    const double b = SceBoundNdcg(q).probability;
    CHECK(res[a].ndcg_frequency() >=
          b - 3.0 * std::sqrt(b * (1 - b) / trials));
    const double bm = SceBoundMrr(q).probability;
    CHECK(res[a].mrr_frequency() >=
          bm - 3.0 * std::sqrt(bm * (1 - bm) / trials));
    if (a > 0) {
      CHECK(res[a].ndcg_hits >= res[a - 1].ndcg_hits);
      CHECK(res[a].mrr_hits >= res[a - 1].mrr_hits);
    }
  }
  // Same seed, same counts.
  const auto again = McVerify(s, target, 100, alphas, trials, 3);
  CHECK(again[2].ndcg_hits == res[2].ndcg_hits);

  // The shared-sum loss matches the loss module on an explicit draw.
  const std::vector<double> negs = {0.3, -1.2, 2.0};
  const double direct = std::log1p(5.0 * (std::exp(0.3 - 0.5) +
                                          std::exp(-1.2 - 0.5) +
                                          std::exp(2.0 - 0.5)));
  CHECK(losses::SceLoss(0.5, negs, 5.0).value ==
        doctest::Approx(direct).epsilon(1e-13));

  CHECK_THROWS_AS(McVerify(s, 5000, 10, alphas, 10, 1), IndexError);
  CHECK_THROWS_AS(McVerify(s, 0, 10, alphas, 0, 1), ArgumentError);
}

TEST_CASE("verification report") {
  VerifyConfig cfg;
  cfg.trials = 2000;
  cfg.ordering_instances = 300;
  cfg.floor_instances = 300;
  cfg.cells = {{5, 100, 1.0}, {5, 100, 100.0}, {500, 10, 5.0}};
  const nlohmann::json a = RunVerification(cfg);
  CHECK(a["all_passed"].get<bool>());
  CHECK(a["monte_carlo"]["cells"].size() == 3);
  CHECK(a.dump() == RunVerification(cfg).dump());

  cfg.corrupt_bound = true;
  const nlohmann::json bad = RunVerification(cfg);
  CHECK_FALSE(bad["all_passed"].get<bool>());
  CHECK_FALSE(bad["monte_carlo"]["passed"].get<bool>());

  const auto cells = BatteryFromJson(nlohmann::json::parse(
      R"([{"rank": 3, "K": 20, "alpha": 2.5}, {"rank": 1, "K": 1}])"));
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].alpha == 2.5);
  CHECK(cells[1].alpha == 1.0);
  CHECK_THROWS_AS(BatteryFromJson(nlohmann::json::parse("{}")), ConfigError);
  CHECK_THROWS_AS(BatteryFromJson(nlohmann::json::parse(R"([{"K": 2}])")),
                  ConfigError);
  CHECK(DefaultBattery().size() == 36);
}

}  // namespace
}  // namespace ranklab::bounds
