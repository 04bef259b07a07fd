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

#ifndef RANKLAB_MODELS_H_
#define RANKLAB_MODELS_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ranklab/datasets.h"
#include "ranklab/tape.h"

// Sequential scorers: a shared item-embedding table, a query encoder over the
// interaction history and inner-product scoring.
namespace ranklab::models {

using data::ItemId;
using History = std::span<const ItemId>;

enum class EncoderKind { kMeanPool, kGru };
enum class InitKind { kNormal, kXavier };

std::string ToString(EncoderKind kind);
std::string ToString(InitKind kind);
// Throws ConfigError on unknown names ("mean_pool", "gru", "normal", "xavier").
EncoderKind ParseEncoderKind(const std::string& name);
InitKind ParseInitKind(const std::string& name);

struct ModelConfig {
  std::size_t item_count = 0;
  std::size_t dim = 64;
  std::size_t max_len = 50;
  EncoderKind encoder = EncoderKind::kMeanPool;
  InitKind init = InitKind::kNormal;
  std::uint64_t seed = 1;
  bool nce_offset = false;

  // Throws ConfigError.
  void Validate() const;
};

// Gate order inside the GRU arrays.
enum Gate { kUpdate = 0, kReset = 1, kCandidate = 2 };

// Parameters bound to one tape.
struct BoundModel {
  ad::Var table;
  std::array<ad::Var, 3> wx, wh, bias;  // GRU only
  std::optional<ad::Var> nce_offset;
};

class Model {
 public:
  explicit Model(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  std::size_t dim() const { return cfg_.dim; }
  std::size_t item_count() const { return cfg_.item_count; }

  // Declared order: item_embeddings, then for the GRU wx_{z,r,n},
  // wh_{z,r,n}, b_{z,r,n}, then nce_offset when present.
  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
  std::size_t parameter_count() const;

  ad::Parameter& item_embeddings() { return table_; }
  const ad::Parameter& item_embeddings() const { return table_; }
  ad::Parameter* nce_offset() { return nce_ ? &*nce_ : nullptr; }

  BoundModel Bind(ad::Tape& tape);

  // Query vectors [B x d]; each history is cut to its most recent max_len
  // items. Throws ArgumentError on an empty history, IndexError on bad ids.
  ad::Var Encode(const BoundModel& bound, std::span<const History> histories) const;
  // Queries for every proper prefix of every sequence, sequence-major: row
  // order is (seq 0, prefix 1), (seq 0, prefix 2), ..., (seq 1, prefix 1).
  // Equal to Encode over the truncated prefixes but shares the recurrent
  // computation. Sequences of length < 2 contribute no rows.
  ad::Var EncodePrefixes(const BoundModel& bound,
                         std::span<const History> sequences) const;

  // [B x N] inner products against the whole table.
  static ad::Var ScoreAll(const BoundModel& bound, const ad::Var& queries);
  // [B x M] scores for ids laid out row-major (ids.size() == B * M).
  static ad::Var ScoreSubset(const BoundModel& bound, const ad::Var& queries,
                             std::span<const ItemId> ids);

  // Value-only helpers for a single query.
  std::vector<double> EncodeOne(History history) const;
  std::vector<double> ScoreAllOne(std::span<const double> query) const;
  std::vector<double> ScoreSubsetOne(std::span<const double> query,
                                     std::span<const ItemId> ids) const;

  // JSON header line followed by the parameters as little-endian float64 in
  // declared order. `metadata` is stored verbatim under "metadata".
  void Save(const std::string& path,
            const nlohmann::json& metadata = nlohmann::json::object()) const;
  // Throws ParseError on a malformed file and ArgumentError when unreadable.
  static Model Load(const std::string& path, nlohmann::json* metadata = nullptr);

 private:
  std::vector<ad::Var> RunGru(const BoundModel& bound,
                              std::span<const History> sequences,
                              std::size_t steps) const;
  ad::Var EncodeMeanPool(const BoundModel& bound,
                         std::span<const History> histories) const;
  ad::Var EncodeGru(const BoundModel& bound,
                    std::span<const History> histories) const;
  void CheckIds(History ids) const;

  ModelConfig cfg_;
  ad::Parameter table_;
  std::array<ad::Parameter, 3> wx_, wh_, b_;
  std::optional<ad::Parameter> nce_;
};

}  // namespace ranklab::models

#endif  // RANKLAB_MODELS_H_
