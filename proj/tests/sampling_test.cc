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
#include <vector>

#include "ranklab/errors.h"
#include "ranklab/sampling.h"

namespace ranklab::sampling {
namespace {

TEST_CASE("two-item catalog with the target excluded") {
  const SamplerConfig cfg{.catalog_size = 2, .num_negatives = 16,
                          .exclude_target = true, .seed = 3};
  for (std::uint64_t draw = 0; draw < 20; ++draw) {
    for (std::size_t id : SampleUniform(cfg, 0, draw)) CHECK(id == 1);
    for (std::size_t id : SampleUniform(cfg, 1, draw)) CHECK(id == 0);
  }
}

TEST_CASE("draws are deterministic in seed and draw index") {
  const SamplerConfig cfg{.catalog_size = 1000, .num_negatives = 50,
                          .exclude_target = true, .seed = 42};
  CHECK(SampleUniform(cfg, 7, 123) == SampleUniform(cfg, 7, 123));
  CHECK(SampleUniform(cfg, 7, 123) != SampleUniform(cfg, 7, 124));
  SamplerConfig other = cfg;
  other.seed = 43;
  CHECK(SampleUniform(cfg, 7, 123) != SampleUniform(other, 7, 123));
}

TEST_CASE("argument validation") {
  CHECK_THROWS_AS(SampleUniform({.catalog_size = 1, .exclude_target = true}, 0, 0),
                  ArgumentError);
  CHECK_THROWS_AS(SampleUniform({.catalog_size = 5, .num_negatives = 0}, 0, 0),
                  ArgumentError);
  CHECK_THROWS_AS(SampleUniform({.catalog_size = 5}, 5, 0), ArgumentError);
  CHECK(SampleUniform({.catalog_size = 1, .num_negatives = 3,
                       .exclude_target = false}, 0, 0) ==
        std::vector<std::size_t>{0, 0, 0});
}

TEST_CASE("uniformity: chi-square over 10^6 draws") {
  const std::size_t catalog = 100;
  const SamplerConfig cfg{.catalog_size = catalog, .num_negatives = 1000,
                          .exclude_target = false, .seed = 2024};
  std::vector<double> counts(catalog, 0.0);
  for (std::uint64_t draw = 0; draw < 1000; ++draw) {
    for (std::size_t id : SampleUniform(cfg, 0, draw)) counts[id] += 1;
  }
  const double expected = 1e4;
  const double sigma = std::sqrt(expected * (1 - 1.0 / catalog));
  double chi2 = 0.0;
  for (double c : counts) {
    CHECK(std::fabs(c - expected) <= 5 * sigma);
    chi2 += (c - expected) * (c - expected) / expected;
  }
  // Upper 0.001 quantile of chi-square with 99 degrees of freedom.
  CHECK(chi2 < 148.23);
}

TEST_CASE("excluded target never appears and the rest stay uniform") {
  const SamplerConfig cfg{.catalog_size = 10, .num_negatives = 100,
                          .exclude_target = true, .seed = 9};
  std::vector<double> counts(10, 0.0);
  for (std::uint64_t draw = 0; draw < 2000; ++draw) {
    for (std::size_t id : SampleUniform(cfg, 4, draw)) counts[id] += 1;
  }
  CHECK(counts[4] == 0.0);
  const double expected = 2e5 / 9;
  for (std::size_t v = 0; v < 10; ++v) {
    if (v != 4) CHECK(std::fabs(counts[v] - expected) <= 5 * std::sqrt(expected));
  }
}

TEST_CASE("duplicates occur at the with-replacement rate") {
  // Two draws from three items coincide with probability 1/3.
  const SamplerConfig cfg{.catalog_size = 3, .num_negatives = 2,
                          .exclude_target = false, .seed = 5};
  const int trials = 90000;
  int dup = 0;
  for (int draw = 0; draw < trials; ++draw) {
    const auto ids = SampleUniform(cfg, 0, static_cast<std::uint64_t>(draw));
    dup += ids[0] == ids[1] ? 1 : 0;
  }
  const double sigma = std::sqrt(trials * (1.0 / 3) * (2.0 / 3));
  CHECK(std::fabs(dup - trials / 3.0) <= 5 * sigma);
}

TEST_CASE("neighbouring streams are uncorrelated") {
  const SamplerConfig cfg{.catalog_size = 1000, .num_negatives = 1,
                          .exclude_target = false, .seed = 77};
  const int n = 100000;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = double(SampleUniform(cfg, 0, std::uint64_t(i))[0]);
    const double y = double(SampleUniform(cfg, 0, std::uint64_t(i) + 1)[0]);
    sx += x, sy += y, sxx += x * x, syy += y * y, sxy += x * y;
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double rho = cov / std::sqrt((sxx / n - sx * sx / n / n) *
                                     (syy / n - sy * sy / n / n));
  CHECK(std::fabs(rho) < 5 / std::sqrt(double(n)));
}

}  // namespace
}  // namespace ranklab::sampling
