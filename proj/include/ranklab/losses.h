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

#ifndef RANKLAB_LOSSES_H_
#define RANKLAB_LOSSES_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ranklab/tape.h"

// Recommendation losses written as -s_+ + log Z, where Z is the loss's
// normalizing term.
namespace ranklab::losses {

enum class LossKind { kCE, kCETopN, kCEEta, kBCE, kBPR, kNCE, kSSM, kSCE };

struct LossSpec {
  LossKind kind = LossKind::kCE;
  std::size_t n = 0;              // kCETopN
  double eta = 0.0;               // kCEEta
  std::size_t num_negatives = 0;  // kNCE, kSSM, kSCE
  double alpha = 1.0;             // kSCE

  static LossSpec CE() { return {}; }
  static LossSpec TopN(std::size_t n);
  static LossSpec Eta(double eta);
  static LossSpec BCE();
  static LossSpec BPR();
  static LossSpec NCE(std::size_t k);
  static LossSpec SSM(std::size_t k);
  static LossSpec SCE(std::size_t k, double alpha);

  // Accepts "ce", "ce-top:{n}", "ce-eta:{eta}", "bce", "bpr", "nce:{K}",
  // "ssm:{K}" and "sce:{K}:{alpha}". Throws ConfigError otherwise.
  static LossSpec Parse(const std::string& text);
  std::string ToString() const;

  // Throws ConfigError when parameters are out of range.
  void Validate() const;

  // True for losses that score the full catalog.
  bool uses_catalog() const {
    return kind == LossKind::kCE || kind == LossKind::kCETopN ||
           kind == LossKind::kCEEta;
  }
  // Negatives drawn per example: 1 for BCE/BPR, K for NCE/SSM/SCE, else 0.
  std::size_t negatives_per_example() const;

  bool operator==(const LossSpec&) const = default;
};

struct LossValue {
  double value = 0.0;
  // log Z; value == -s_+ + normalizer_log.
  double normalizer_log = 0.0;
};

LossValue CeLoss(std::span<const double> scores, std::size_t target);
// Normalizer over the n best-scored items, ties broken by ascending item id.
// When n < rank(target) the target may fall outside the cut; the loss is
// still evaluated and no longer bounds the ranking metrics.
LossValue CeTopNLoss(std::span<const double> scores, std::size_t target,
                     std::size_t n);
// Normalizer over items v with s_v - s_+ >= -eta * |s_+|.
LossValue CeEtaLoss(std::span<const double> scores, std::size_t target,
                    double eta);
LossValue BceLoss(double s_plus, double s_minus);
LossValue BprLoss(double s_plus, double s_minus);
// Scores are corrected to s - c - log(K / catalog_size) before the logistic
// terms. normalizer_log is reported against the uncorrected s_+.
LossValue NceLoss(double s_plus, std::span<const double> negatives,
                  double offset, std::size_t catalog_size);
LossValue SsmLoss(double s_plus, std::span<const double> negatives);
LossValue SceLoss(double s_plus, std::span<const double> negatives,
                  double alpha);

struct LossInputs {
  // Full-catalog scores; required by the CE family.
  std::span<const double> catalog_scores;
  std::size_t target = 0;
  // Target score for sampled losses; taken from catalog_scores when unset.
  std::optional<double> target_score;
  // Scores of sampled negatives; required by sampled losses.
  std::optional<std::span<const double>> negative_scores;
  double nce_offset = 0.0;
  // Needed by NCE; defaults to catalog_scores.size().
  std::size_t catalog_size = 0;
};

// Dispatches on spec.kind. Throws ConfigError when inputs the loss needs are
// missing or the negative count disagrees with the spec.
LossValue EvaluateLoss(const LossSpec& spec, const LossInputs& inputs);

// 0/1 inclusion weights of the CE-n and CE-eta normalizers.
std::vector<double> TopNMask(std::span<const double> scores, std::size_t n);
std::vector<double> EtaMask(std::span<const double> scores, std::size_t target,
                            double eta);

// Differentiable per-example losses for a batch scored against the whole
// catalog: scores [B x N] -> [B]. Only CE-family specs are accepted.
ad::Var CatalogLossBatch(const LossSpec& spec, const ad::Var& scores,
                         std::span<const std::size_t> targets);

// Differentiable per-example losses for sampled scores [B x (1 + K)] whose
// column 0 holds the target -> [B]. `nce_offset` (a scalar Var) is required
// for NCE only.
ad::Var SampledLossBatch(const LossSpec& spec, const ad::Var& scores,
                         const ad::Var* nce_offset = nullptr,
                         std::size_t catalog_size = 0);

}  // namespace ranklab::losses

#endif  // RANKLAB_LOSSES_H_
