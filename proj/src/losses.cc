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

#include "ranklab/losses.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ranklab/errors.h"
#include "ranklab/metrics.h"
#include "ranklab/numerics.h"
#include "ranklab/ops.h"

namespace ranklab::losses {
namespace {

std::size_t ParseCount(const std::string& text, const std::string& spec) {
  std::size_t pos = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &pos);
  } catch (const std::logic_error&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size() || text[0] == '-') {
    throw ConfigError("bad integer '" + text + "' in loss '" + spec + "'");
  }
  return static_cast<std::size_t>(value);
}

double ParseReal(const std::string& text, const std::string& spec) {
  std::size_t pos = 0;
  double value = 0;
  try {
    value = std::stod(text, &pos);
  } catch (const std::logic_error&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size()) {
    throw ConfigError("bad number '" + text + "' in loss '" + spec + "'");
  }
  return value;
}

std::vector<std::string> SplitColons(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (!text.empty() && text.back() == ':') parts.emplace_back();
  return parts;
}

double SampledTargetScore(const LossInputs& in) {
  if (in.target_score.has_value()) return *in.target_score;
  if (in.target < in.catalog_scores.size()) return in.catalog_scores[in.target];
  throw ConfigError("sampled loss needs the target score");
}

void RequireTarget(std::span<const double> scores, std::size_t target) {
  if (scores.empty()) throw ConfigError("loss needs a nonempty catalog");
  if (target >= scores.size()) {
    throw IndexError("target " + std::to_string(target) +
                     " outside a catalog of " + std::to_string(scores.size()));
  }
}

LossValue FromNormalizer(double s_plus, double normalizer_log) {
  return {normalizer_log - s_plus, normalizer_log};
}

}  // namespace

LossSpec LossSpec::TopN(std::size_t n) {
  LossSpec s;
  s.kind = LossKind::kCETopN;
  s.n = n;
  return s;
}

LossSpec LossSpec::Eta(double eta) {
  LossSpec s;
  s.kind = LossKind::kCEEta;
  s.eta = eta;
  return s;
}

LossSpec LossSpec::BCE() {
  LossSpec s;
  s.kind = LossKind::kBCE;
  return s;
}

LossSpec LossSpec::BPR() {
  LossSpec s;
  s.kind = LossKind::kBPR;
  return s;
}

LossSpec LossSpec::NCE(std::size_t k) {
  LossSpec s;
  s.kind = LossKind::kNCE;
  s.num_negatives = k;
  return s;
}

LossSpec LossSpec::SSM(std::size_t k) {
  LossSpec s;
  s.kind = LossKind::kSSM;
  s.num_negatives = k;
  return s;
}

LossSpec LossSpec::SCE(std::size_t k, double alpha) {
  LossSpec s;
  s.kind = LossKind::kSCE;
  s.num_negatives = k;
  s.alpha = alpha;
  return s;
}

LossSpec LossSpec::Parse(const std::string& text) {
  const auto parts = SplitColons(text);
  if (parts.empty()) throw ConfigError("empty loss spec");
  const std::string& name = parts[0];
  auto expect = [&](std::size_t count) {
    if (parts.size() != count) {
      throw ConfigError("loss '" + text + "' expects " +
                        std::to_string(count - 1) + " parameter(s)");
    }
  };
  LossSpec spec;
  if (name == "ce") {
    expect(1);
  } else if (name == "ce-top") {
    expect(2);
    spec = TopN(ParseCount(parts[1], text));
  } else if (name == "ce-eta") {
    expect(2);
    spec = Eta(ParseReal(parts[1], text));
  } else if (name == "bce") {
    expect(1);
    spec = BCE();
  } else if (name == "bpr") {
    expect(1);
    spec = BPR();
  } else if (name == "nce") {
    expect(2);
    spec = NCE(ParseCount(parts[1], text));
  } else if (name == "ssm") {
    expect(2);
    spec = SSM(ParseCount(parts[1], text));
  } else if (name == "sce") {
    expect(3);
    spec = SCE(ParseCount(parts[1], text), ParseReal(parts[2], text));
  } else {
    throw ConfigError("unknown loss '" + text + "'");
  }
  spec.Validate();
  return spec;
}

std::string LossSpec::ToString() const {
  using metrics::FormatDouble;
  switch (kind) {
    case LossKind::kCE: return "ce";
    case LossKind::kCETopN: return "ce-top:" + std::to_string(n);
    case LossKind::kCEEta: return "ce-eta:" + FormatDouble(eta);
    case LossKind::kBCE: return "bce";
    case LossKind::kBPR: return "bpr";
    case LossKind::kNCE: return "nce:" + std::to_string(num_negatives);
    case LossKind::kSSM: return "ssm:" + std::to_string(num_negatives);
    case LossKind::kSCE:
      return "sce:" + std::to_string(num_negatives) + ":" + FormatDouble(alpha);
  }
  return "?";
}

void LossSpec::Validate() const {
  switch (kind) {
    case LossKind::kCETopN:
      if (n < 1) throw ConfigError("ce-top needs n >= 1");
      break;
    case LossKind::kCEEta:
      if (!(eta >= 0)) throw ConfigError("ce-eta needs eta >= 0");
      break;
    case LossKind::kSCE:
      if (!(alpha >= 1) || !std::isfinite(alpha)) {
        throw ConfigError("sce needs a finite alpha >= 1");
      }
      [[fallthrough]];
    case LossKind::kNCE:
    case LossKind::kSSM:
      if (num_negatives < 1) throw ConfigError("sampled loss needs K >= 1");
      break;
    default:
      break;
  }
}

std::size_t LossSpec::negatives_per_example() const {
  switch (kind) {
    case LossKind::kBCE:
    case LossKind::kBPR:
      return 1;
    case LossKind::kNCE:
    case LossKind::kSSM:
    case LossKind::kSCE:
      return num_negatives;
    default:
      return 0;
  }
}

std::vector<double> TopNMask(std::span<const double> scores, std::size_t n) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t keep = std::min(n, scores.size());
  std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return scores[a] > scores[b] ||
                             (scores[a] == scores[b] && a < b);
                    });
  std::vector<double> mask(scores.size(), 0.0);
  for (std::size_t i = 0; i < keep; ++i) mask[order[i]] = 1.0;
  return mask;
}

std::vector<double> EtaMask(std::span<const double> scores, std::size_t target,
                            double eta) {
  const double s_plus = scores[target];
  const double floor = -eta * std::fabs(s_plus);
  std::vector<double> mask(scores.size(), 0.0);
  for (std::size_t v = 0; v < scores.size(); ++v) {
    if (scores[v] - s_plus >= floor) mask[v] = 1.0;
  }
  return mask;
}

LossValue CeLoss(std::span<const double> scores, std::size_t target) {
  RequireTarget(scores, target);
  return FromNormalizer(scores[target], LogSumExp(scores));
}

LossValue CeTopNLoss(std::span<const double> scores, std::size_t target,
                     std::size_t n) {
  RequireTarget(scores, target);
  if (n < 1) throw ConfigError("ce-top needs n >= 1");
  return FromNormalizer(scores[target], LogSumExp(scores, TopNMask(scores, n)));
}

LossValue CeEtaLoss(std::span<const double> scores, std::size_t target,
                    double eta) {
  RequireTarget(scores, target);
  if (!(eta >= 0)) throw ConfigError("ce-eta needs eta >= 0");
  return FromNormalizer(scores[target],
                        LogSumExp(scores, EtaMask(scores, target, eta)));
}

LossValue BceLoss(double s_plus, double s_minus) {
  return {Softplus(-s_plus) + Softplus(s_minus),
          Softplus(s_plus) + Softplus(s_minus)};
}

LossValue BprLoss(double s_plus, double s_minus) {
  const double pair[] = {s_plus, s_minus};
  return {Softplus(s_minus - s_plus), LogSumExp(pair)};
}

LossValue NceLoss(double s_plus, std::span<const double> negatives,
                  double offset, std::size_t catalog_size) {
  if (negatives.empty()) throw ConfigError("nce needs K >= 1 negatives");
  if (catalog_size == 0) throw ConfigError("nce needs the catalog size");
  const double shift =
      offset + std::log(static_cast<double>(negatives.size()) /
                        static_cast<double>(catalog_size));
  const double corrected_plus = s_plus - shift;
  double negative_terms = 0.0;
  for (double s : negatives) negative_terms += Softplus(s - shift);
  // -s'_+ + log Z_NCE, with log Z_NCE re-expressed against s_+.
  return {Softplus(-corrected_plus) + negative_terms,
          Softplus(corrected_plus) + negative_terms + shift};
}

LossValue SsmLoss(double s_plus, std::span<const double> negatives) {
  return SceLoss(s_plus, negatives, 1.0);
}

LossValue SceLoss(double s_plus, std::span<const double> negatives,
                  double alpha) {
  if (negatives.empty()) throw ConfigError("sampled softmax needs K >= 1");
  if (!(alpha >= 1)) throw ConfigError("sce needs alpha >= 1");
  std::vector<double> scores;
  scores.reserve(negatives.size() + 1);
  scores.push_back(s_plus);
  scores.insert(scores.end(), negatives.begin(), negatives.end());
  std::vector<double> weights(scores.size(), alpha);
  weights[0] = 1.0;
  return FromNormalizer(s_plus, LogSumExp(scores, weights));
}

LossValue EvaluateLoss(const LossSpec& spec, const LossInputs& in) {
  spec.Validate();
  if (spec.uses_catalog()) {
    if (in.catalog_scores.empty()) {
      throw ConfigError(spec.ToString() + " needs full-catalog scores");
    }
    switch (spec.kind) {
      case LossKind::kCE: return CeLoss(in.catalog_scores, in.target);
      case LossKind::kCETopN:
        return CeTopNLoss(in.catalog_scores, in.target, spec.n);
      default: return CeEtaLoss(in.catalog_scores, in.target, spec.eta);
    }
  }
  if (!in.negative_scores.has_value()) {
    throw ConfigError(spec.ToString() + " needs sampled negative scores");
  }
  const auto negs = *in.negative_scores;
  if (negs.size() != spec.negatives_per_example()) {
    throw ConfigError(spec.ToString() + " expects " +
                      std::to_string(spec.negatives_per_example()) +
                      " negatives, got " + std::to_string(negs.size()));
  }
  const double s_plus = SampledTargetScore(in);
  switch (spec.kind) {
    case LossKind::kBCE: return BceLoss(s_plus, negs[0]);
    case LossKind::kBPR: return BprLoss(s_plus, negs[0]);
    case LossKind::kNCE:
      return NceLoss(s_plus, negs, in.nce_offset,
                     in.catalog_size > 0 ? in.catalog_size
                                         : in.catalog_scores.size());
    case LossKind::kSSM: return SsmLoss(s_plus, negs);
    default: return SceLoss(s_plus, negs, spec.alpha);
  }
}

ad::Var CatalogLossBatch(const LossSpec& spec, const ad::Var& scores,
                         std::span<const std::size_t> targets) {
  if (!spec.uses_catalog()) {
    throw ConfigError(spec.ToString() + " is not a full-catalog loss");
  }
  const ad::Tensor& s = scores.value();
  if (s.rank() != 2 || s.rows() != targets.size()) {
    throw DimensionError("catalog loss needs one score row per target");
  }
  ad::Var lse;
  if (spec.kind == LossKind::kCE) {
    lse = ad::RowLogSumExp(scores);
  } else {
    ad::Tensor mask(s.shape());
    for (std::size_t b = 0; b < s.rows(); ++b) {
      if (targets[b] >= s.cols()) throw IndexError("target outside catalog");
      const auto row = s.row(b);
      const auto m = spec.kind == LossKind::kCETopN
                         ? TopNMask(row, spec.n)
                         : EtaMask(row, targets[b], spec.eta);
      std::copy(m.begin(), m.end(), mask.mutable_row(b).begin());
    }
    lse = ad::RowLogSumExp(scores, &mask);
  }
  return ad::Sub(lse, ad::PickColumns(scores, targets));
}

ad::Var SampledLossBatch(const LossSpec& spec, const ad::Var& scores,
                         const ad::Var* nce_offset, std::size_t catalog_size) {
  if (spec.uses_catalog()) {
    throw ConfigError(spec.ToString() + " is not a sampled loss");
  }
  const ad::Tensor& s = scores.value();
  const std::size_t k = spec.negatives_per_example();
  if (s.rank() != 2 || s.cols() != k + 1) {
    throw DimensionError("sampled loss for " + spec.ToString() +
                         " needs [B x " + std::to_string(k + 1) +
                         "] scores, got " + ad::ShapeToString(s.shape()));
  }
  ad::Tape& tape = *scores.tape();
  const std::size_t batch = s.rows();
  const std::vector<std::size_t> first(batch, 0);
  // +1 on negatives and -1 on the target column turns softplus into the
  // logistic terms of BCE and NCE.
  auto signs = [&] {
    ad::Tensor t = ad::Tensor::Filled(s.shape(), 1.0);
    for (std::size_t b = 0; b < batch; ++b) t[b * (k + 1)] = -1.0;
    return tape.Constant(std::move(t));
  };
  switch (spec.kind) {
    case LossKind::kBCE:
      return ad::RowSum(ad::Softplus(ad::Mul(scores, signs())));
    case LossKind::kBPR: {
      const std::vector<std::size_t> second(batch, 1);
      return ad::Softplus(ad::Sub(ad::PickColumns(scores, second),
                                  ad::PickColumns(scores, first)));
    }
    case LossKind::kNCE: {
      if (nce_offset == nullptr) throw ConfigError("nce needs the offset c");
      if (catalog_size == 0) throw ConfigError("nce needs the catalog size");
      const double log_ratio = std::log(static_cast<double>(k) /
                                        static_cast<double>(catalog_size));
      const ad::Var corrected =
          ad::AddScalar(ad::Sub(scores, *nce_offset), -log_ratio);
      return ad::RowSum(ad::Softplus(ad::Mul(corrected, signs())));
    }
    default: {
      const double alpha = spec.kind == LossKind::kSCE ? spec.alpha : 1.0;
      ad::Tensor w = ad::Tensor::Filled(s.shape(), alpha);
      for (std::size_t b = 0; b < batch; ++b) w[b * (k + 1)] = 1.0;
      return ad::Sub(ad::RowLogSumExp(scores, &w),
                     ad::PickColumns(scores, first));
    }
  }
}

}  // namespace ranklab::losses
