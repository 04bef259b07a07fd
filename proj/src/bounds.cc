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

#include "ranklab/bounds.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ranklab/errors.h"
#include "ranklab/losses.h"
#include "ranklab/metrics.h"
#include "ranklab/sampling.h"

namespace ranklab::bounds {
namespace {

// (1 - p)^n without losing precision for small p.
double PowOneMinus(double p, std::uint64_t n) {
  if (n == 0) return 1.0;
  if (p >= 1.0) return 0.0;
  return std::exp(double(n) * std::log1p(-p));
}

double GroupingBound(std::uint64_t k, double p, std::uint64_t groups) {
  if (groups == 0) return 1.0;
  return 1.0 - double(groups) * PowOneMinus(p, k / groups);
}

BoundEstimate Clip(double raw) { return {std::max(raw, 0.0), raw}; }

void CheckProbability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ArgumentError("probability must lie in [0, 1], got " +
                        std::to_string(p));
  }
}

}  // namespace

void BoundQuery::Validate() const {
  if (catalog_size == 0) throw ArgumentError("catalog_size must be positive");
  if (rank < 1 || rank > catalog_size) {
    throw ArgumentError("rank " + std::to_string(rank) +
                        " outside [1, catalog_size]");
  }
  if (num_negatives < 1) throw ArgumentError("K must be at least 1");
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) {
    throw ArgumentError("alpha must be a finite value >= 1");
  }
}

double BoundQuery::hit_probability() const {
  return double(rank) / double(catalog_size);
}

int MOfRank(std::size_t rank) {
  if (rank < 1) throw ArgumentError("rank must be at least 1");
  int m = 0;
  // 2^m - 1 < rank  <=>  2^m <= rank.
  while (m < 64 && (std::uint64_t{1} << m) <= rank) ++m;
  return m;
}

std::uint64_t CeilDiv(double numerator, double alpha) {
  if (!(alpha > 0.0)) throw ArgumentError("alpha must be positive");
  if (numerator <= 0.0) return 0;
  auto g = static_cast<std::uint64_t>(std::ceil(numerator / alpha));
  while (g > 0 && double(g - 1) * alpha >= numerator) --g;
  while (double(g) * alpha < numerator) ++g;
  return g;
}

BoundEstimate SsmBoundNdcg(const BoundQuery& q) {
  q.Validate();
  return Clip(GroupingBound(q.num_negatives, q.hit_probability(),
                            MOfRank(q.rank)));
}

BoundEstimate SceBoundNdcg(const BoundQuery& q) {
  q.Validate();
  const std::uint64_t g = CeilDiv(MOfRank(q.rank), q.alpha);
  return Clip(GroupingBound(q.num_negatives, q.hit_probability(), g));
}

BoundEstimate SceBoundMrr(const BoundQuery& q) {
  q.Validate();
  const std::uint64_t g = CeilDiv(std::ldexp(1.0, MOfRank(q.rank)), q.alpha);
  return Clip(GroupingBound(q.num_negatives, q.hit_probability(), g));
}

double BinomialTailBound(std::size_t k, double p, std::size_t m) {
  CheckProbability(p);
  if (m > k) throw ArgumentError("m must not exceed K");
  return GroupingBound(k, p, m);
}

double ExactBinomialTail(std::size_t k, double p, std::size_t m) {
  CheckProbability(p);
  if (k > 1000) throw ArgumentError("exact tail supports K <= 1000");
  if (m == 0) return 1.0;
  if (m > k) return 0.0;
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lk = std::lgamma(double(k) + 1.0);
  std::vector<double> terms;
  terms.reserve(k - m + 1);
  for (std::size_t j = m; j <= k; ++j) {
    terms.push_back(lk - std::lgamma(double(j) + 1.0) -
                    std::lgamma(double(k - j) + 1.0) + double(j) * lp +
                    double(k - j) * lq);
  }
  const double top = *std::max_element(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - top);
  return std::min(1.0, std::exp(top + std::log(sum)));
}

std::vector<McResult> McVerify(std::span<const double> scores,
                               std::size_t target, std::size_t num_negatives,
                               std::span<const double> alphas,
                               std::size_t trials, std::uint64_t seed) {
  if (scores.empty()) throw ArgumentError("empty score vector");
  if (target >= scores.size()) throw IndexError("target out of range");
  if (alphas.empty()) throw ArgumentError("no alpha values");
  for (double a : alphas) {
    if (!(a >= 1.0)) throw ArgumentError("alpha must be >= 1");
  }
  if (trials == 0) throw ArgumentError("trials must be positive");

  sampling::SamplerConfig cfg;
  cfg.catalog_size = scores.size();
  cfg.num_negatives = num_negatives;
  cfg.exclude_target = false;
  cfg.seed = seed;
  cfg.Validate();

  const std::size_t rank = metrics::RankOfTarget(scores, target);
  const double neg_log_ndcg = -std::log(metrics::Ndcg(rank));
  const double neg_log_mrr = -std::log(metrics::Mrr(rank));
  const double s_plus = scores[target];

  std::vector<McResult> out(alphas.size());
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    out[a].alpha = alphas[a];
    out[a].trials = trials;
  }
  std::vector<std::size_t> draws(num_negatives);
  for (std::size_t t = 0; t < trials; ++t) {
    sampling::SampleUniformInto(cfg, target, t, draws);
    // Shifted by s_+, so exp never overflows for the terms that matter.
    double tail = 0.0;
    std::size_t xi = 0;
    for (std::size_t id : draws) {
      const double d = scores[id] - s_plus;
      if (d >= 0.0) ++xi;
      tail += std::exp(d);
    }
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      const double alpha = alphas[a];
      const double loss = std::isinf(tail) ? tail : std::log1p(alpha * tail);
      McResult& r = out[a];
      if (loss >= neg_log_ndcg) ++r.ndcg_hits;
      if (loss >= neg_log_mrr) ++r.mrr_hits;
      if (loss < std::log1p(alpha * double(xi)) - 1e-9) ++r.floor_violations;
    }
  }
  return out;
}

Prop1Report Prop1Audit(std::span<const double> scores, std::size_t target,
                       double slack) {
  Prop1Report report;
  report.rank = metrics::RankOfTarget(scores, target);
  const double a = -std::log(metrics::Ndcg(report.rank));
  const double b = -std::log(metrics::Mrr(report.rank));
  const double ce = losses::CeLoss(scores, target).value;
  auto fail = [&](std::size_t n, const std::string& what) {
    report.passed = false;
    report.first_violation = n;
    report.detail = what;
  };
  if (a > b + slack) {
    fail(report.rank, "-log NDCG exceeds -log MRR");
    return report;
  }
  for (std::size_t n = report.rank; n <= scores.size(); ++n) {
    ++report.checked;
    const double topn = losses::CeTopNLoss(scores, target, n).value;
    if (b > topn + slack) {
      std::ostringstream msg;
      msg << "-log MRR " << b << " exceeds truncated CE " << topn << " at n="
          << n;
      fail(n, msg.str());
      return report;
    }
    if (topn > ce + slack) {
      std::ostringstream msg;
      msg << "truncated CE " << topn << " exceeds CE " << ce << " at n=" << n;
      fail(n, msg.str());
      return report;
    }
  }
  return report;
}

std::vector<std::vector<double>> BoundGrid(std::size_t catalog_size,
                                           double alpha,
                                           std::span<const std::size_t> ranks,
                                           std::span<const std::size_t> ks,
                                           BoundMetric metric) {
  if (ranks.empty() || ks.empty()) throw ArgumentError("empty grid axis");
  std::vector<std::vector<double>> grid(ranks.size(),
                                        std::vector<double>(ks.size()));
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    for (std::size_t j = 0; j < ks.size(); ++j) {
      const BoundQuery q{ranks[i], ks[j], catalog_size, alpha};
      grid[i][j] = metric == BoundMetric::kNdcg ? SceBoundNdcg(q).probability
                                                : SceBoundMrr(q).probability;
    }
  }
  return grid;
}

void WriteGridCsv(std::ostream& out, std::span<const std::size_t> ranks,
                  std::span<const std::size_t> ks,
                  const std::vector<std::vector<double>>& grid) {
  if (grid.size() != ranks.size()) {
    throw DimensionError("grid rows do not match ranks");
  }
  out << "r_plus";
  for (std::size_t k : ks) out << ',' << k;
  out << '\n';
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (grid[i].size() != ks.size()) {
      throw DimensionError("grid columns do not match K values");
    }
    out << ranks[i];
    for (double v : grid[i]) out << ',' << metrics::FormatDouble(v);
    out << '\n';
  }
}

std::vector<std::size_t> DefaultGridAxis() {
  std::vector<std::size_t> axis;
  for (std::size_t decade = 1; decade < 1000; decade *= 10) {
    for (std::size_t step : {1, 2, 3, 5, 7}) axis.push_back(step * decade);
  }
  axis.push_back(1000);
  return axis;
}

std::vector<McCell> DefaultBattery() {
  std::vector<McCell> cells;
  for (std::size_t r : {1, 5, 50, 500}) {
    for (std::size_t k : {10, 100, 1000}) {
      for (double a : {1.0, 5.0, 100.0}) cells.push_back({r, k, a});
    }
  }
  return cells;
}

std::vector<McCell> BatteryFromJson(const nlohmann::json& doc) {
  if (!doc.is_array()) throw ConfigError("battery must be a JSON array");
  std::vector<McCell> cells;
  try {
    for (const auto& item : doc) {
      McCell c;
      c.rank = item.at("rank").get<std::size_t>();
      c.num_negatives = item.at("K").get<std::size_t>();
      c.alpha = item.value("alpha", 1.0);
      cells.push_back(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad battery entry: ") + e.what());
  }
  if (cells.empty()) throw ConfigError("battery is empty");
  return cells;
}

nlohmann::json RunOrderingAudit(std::size_t instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size_dist(2, 100);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::student_t_distribution<double> heavy(2.0);
  std::size_t failures = 0;
  nlohmann::json first = nullptr;
  std::vector<double> scores;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t n = size_dist(rng);
    scores.resize(n);
    const int family = int(i % 3);
    for (double& s : scores) {
      if (family == 0) {
        s = 3.0 * normal(rng);
      } else if (family == 1) {
        s = 3.0 * heavy(rng);
      } else {
        // Near-ties: a few levels split by 1e-9 gaps.
        s = double(rng() % 4) + 1e-9 * double(rng() % 3);
      }
    }
    const std::size_t target = rng() % n;
    const Prop1Report r = Prop1Audit(scores, target);
    if (!r.passed) {
      ++failures;
      if (first.is_null()) first = {{"instance", i}, {"detail", r.detail}};
    }
  }
  return {{"instances", instances},
          {"failures", failures},
          {"first_failure", first},
          {"passed", failures == 0}};
}

nlohmann::json RunSceFloorCheck(std::size_t instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::uniform_int_distribution<std::size_t> k_dist(1, 50);
  std::uniform_real_distribution<double> log_alpha(0.0, std::log(100.0));
  std::size_t failures = 0;
  double worst = std::numeric_limits<double>::infinity();
  std::vector<double> negs;
  for (std::size_t i = 0; i < instances; ++i) {
    const double s_plus = normal(rng);
    negs.resize(k_dist(rng));
    std::size_t xi = 0;
    for (double& s : negs) {
      // Every fourth negative ties the target exactly.
      s = rng() % 4 == 0 ? s_plus : normal(rng);
      if (s >= s_plus) ++xi;
    }
    const double alpha = std::exp(log_alpha(rng));
    const double loss = losses::SceLoss(s_plus, negs, alpha).value;
    const double margin = loss - std::log1p(alpha * double(xi));
    worst = std::min(worst, margin);
    if (margin < -1e-9) ++failures;
  }
  return {{"instances", instances},
          {"failures", failures},
          {"min_margin", worst},
          {"passed", failures == 0}};
}

nlohmann::json RunBinomialTailCheck() {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= 30; ++k) {
    for (std::size_t m = 0; m <= k; ++m) {
      for (int step = 1; step <= 19; ++step) {
        const double p = 0.05 * step;
        const double gap =
            ExactBinomialTail(k, p, m) - BinomialTailBound(k, p, m);
        worst = std::min(worst, gap);
        if (gap < -1e-12) ++failures;
        ++checked;
      }
    }
  }
  return {{"checked", checked},
          {"failures", failures},
          {"min_gap", worst},
          {"passed", failures == 0}};
}

namespace {

// Gaussian scores with the target placed at the requested rank.
std::pair<std::vector<double>, std::size_t> FixedScores(
    std::size_t catalog_size, std::size_t rank, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> scores(catalog_size);
  for (double& s : scores) s = normal(rng);
  std::vector<std::size_t> order(catalog_size);
  for (std::size_t i = 0; i < catalog_size; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return scores[a] > scores[b];
  });
  return {std::move(scores), order[rank - 1]};
}

}  // namespace

nlohmann::json RunVerification(const VerifyConfig& cfg) {
  if (cfg.trials == 0) throw ArgumentError("trials must be positive");
  const std::vector<McCell> cells =
      cfg.cells.empty() ? DefaultBattery() : cfg.cells;

  nlohmann::json report;
  report["seed"] = cfg.seed;
  report["trials"] = cfg.trials;
  report["catalog_size"] = cfg.catalog_size;
  report["corrupt_bound"] = cfg.corrupt_bound;
  report["ordering"] = RunOrderingAudit(cfg.ordering_instances, cfg.seed);
  report["sce_floor"] = RunSceFloorCheck(cfg.floor_instances, cfg.seed + 1);
  report["binomial_tail"] = RunBinomialTailCheck();

  // Cells sharing (rank, K) reuse one score vector and one set of draws.
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  for (const McCell& c : cells) {
    const std::pair<std::size_t, std::size_t> key{c.rank, c.num_negatives};
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) {
      groups.push_back(key);
    }
  }
  nlohmann::json mc = nlohmann::json::array();
  bool mc_passed = true;
  for (const auto& [rank, k] : groups) {
    std::vector<double> alphas;
    for (const McCell& c : cells) {
      if (c.rank == rank && c.num_negatives == k) alphas.push_back(c.alpha);
    }
    const auto [scores, target] =
        FixedScores(cfg.catalog_size, rank, cfg.seed * 7919 + rank);
    const std::vector<McResult> results =
        McVerify(scores, target, k, alphas, cfg.trials, cfg.seed + rank * 31 + k);
    for (const McResult& r : results) {
      const BoundQuery q{rank, k, cfg.catalog_size, r.alpha};
      double ndcg_bound = SceBoundNdcg(q).probability;
      double mrr_bound = SceBoundMrr(q).probability;
      if (cfg.corrupt_bound) {
        ndcg_bound = 1.0;
        mrr_bound = 1.0;
      }
      auto slack = [&](double b) {
        return 3.0 * std::sqrt(b * (1.0 - b) / double(r.trials));
      };
      const bool ndcg_ok = r.ndcg_frequency() >= ndcg_bound - slack(ndcg_bound);
      const bool mrr_ok = r.mrr_frequency() >= mrr_bound - slack(mrr_bound);
      const bool floor_ok = r.floor_violations == 0;
      mc_passed = mc_passed && ndcg_ok && mrr_ok && floor_ok;
      mc.push_back({{"rank", rank},
                    {"K", k},
                    {"alpha", r.alpha},
                    {"ndcg_bound", ndcg_bound},
                    {"ndcg_frequency", r.ndcg_frequency()},
                    {"ndcg_passed", ndcg_ok},
                    {"mrr_bound", mrr_bound},
                    {"mrr_frequency", r.mrr_frequency()},
                    {"mrr_passed", mrr_ok},
                    {"floor_violations", r.floor_violations},
                    {"passed", ndcg_ok && mrr_ok && floor_ok}});
    }
  }
  report["monte_carlo"] = {{"cells", mc}, {"passed", mc_passed}};
  report["all_passed"] = report["ordering"]["passed"].get<bool>() &&
                         report["sce_floor"]["passed"].get<bool>() &&
                         report["binomial_tail"]["passed"].get<bool>() && mc_passed;
  return report;
}

}  // namespace ranklab::bounds
