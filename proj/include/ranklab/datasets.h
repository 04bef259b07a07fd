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

#ifndef RANKLAB_DATASETS_H_
#define RANKLAB_DATASETS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "json.hpp"

namespace ranklab::data {

using ItemId = std::size_t;

struct RawInteraction {
  std::string user;
  std::string item;
  std::int64_t timestamp = 0;
};

// Timestamp-ordered per-user item sequences over a dense catalog.
struct InteractionLog {
  std::size_t user_count() const { return sequences.size(); }
  std::size_t item_count() const { return item_ids.size(); }
  std::size_t interaction_count() const;

  // sequences[u] lists dense item ids of user u, oldest first.
  std::vector<std::vector<ItemId>> sequences;
  // Dense id -> original id.
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
};

// Fields of the usual dataset statistics table.
struct DatasetStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t interactions = 0;
  double density = 0.0;  // interactions / (users * items)
  double avg_len = 0.0;  // interactions / users
};

DatasetStats ComputeStats(const InteractionLog& log);

// Parses user<TAB>item<TAB>timestamp lines. Blank lines are skipped; any
// other malformed line raises ParseError carrying its 1-based line number.
std::vector<RawInteraction> ParseTsv(std::istream& in);
// Throws ArgumentError if the file cannot be opened.
std::vector<RawInteraction> LoadTsv(const std::filesystem::path& path);

// Repeatedly drops users and items with fewer than k interactions until every
// survivor has at least k. Dense ids follow first appearance in input order;
// each sequence is sorted by timestamp with ties kept in input order.
// Throws EmptyDatasetError when nothing survives.
InteractionLog KCoreFilter(const std::vector<RawInteraction>& raw, int k = 5);

// Re-expresses a log as raw records (timestamps are sequence positions).
std::vector<RawInteraction> ToRawInteractions(const InteractionLog& log);

struct UserSplit {
  std::vector<ItemId> train;
  ItemId val = 0;
  ItemId test = 0;
};

struct Split {
  std::size_t item_count = 0;
  std::vector<UserSplit> users;
};

// Last item for test, penultimate for validation, the rest for training.
// Throws SplitError naming the first user with fewer than 3 interactions.
Split LeaveOneOutSplit(const InteractionLog& log);

struct SynthConfig {
  std::size_t users = 2000;
  std::size_t items = 500;
  std::size_t latent_dim = 16;
  std::size_t min_len = 5;
  std::size_t max_len = 20;
  // Multiplies every logit; larger values make next-item choices less noisy.
  double sharpness = 8.0;
  std::uint64_t seed = 1;
};

// Each user draws the next item from a softmax over
// <0.8 * user + 0.2 * previous item, item> (never repeating the previous
// item), with latent vectors ~ N(0, 1/latent_dim). Deterministic in seed.
InteractionLog SynthGenerate(const SynthConfig& cfg);

// Parses "users=2000,items=500,seed=1,..." onto the defaults.
SynthConfig ParseSynthSpec(const std::string& spec);

nlohmann::json ToJson(const InteractionLog& log);
InteractionLog LogFromJson(const nlohmann::json& doc);
nlohmann::json ToJson(const DatasetStats& stats);

void SaveDataset(const std::filesystem::path& path, const InteractionLog& log);
InteractionLog LoadDataset(const std::filesystem::path& path);

}  // namespace ranklab::data

#endif  // RANKLAB_DATASETS_H_
