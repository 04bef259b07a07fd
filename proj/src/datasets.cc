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

#include "ranklab/datasets.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "ranklab/errors.h"

namespace ranklab::data {

std::size_t InteractionLog::interaction_count() const {
  std::size_t total = 0;
  for (const auto& seq : sequences) total += seq.size();
  return total;
}

DatasetStats ComputeStats(const InteractionLog& log) {
  DatasetStats stats;
  stats.users = log.user_count();
  stats.items = log.item_count();
  stats.interactions = log.interaction_count();
  if (stats.users > 0 && stats.items > 0) {
    stats.density = static_cast<double>(stats.interactions) /
                    (static_cast<double>(stats.users) * stats.items);
    stats.avg_len = static_cast<double>(stats.interactions) / stats.users;
  }
  return stats;
}

std::vector<RawInteraction> ParseTsv(std::istream& in) {
  std::vector<RawInteraction> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 =
        tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos || line.find('\t', tab2 + 1) != line.npos) {
      throw ParseError("expected 3 tab-separated fields", line_no);
    }
    RawInteraction rec;
    rec.user = line.substr(0, tab1);
    rec.item = line.substr(tab1 + 1, tab2 - tab1 - 1);
    if (rec.user.empty() || rec.item.empty()) {
      throw ParseError("empty user or item field", line_no);
    }
    const char* first = line.data() + tab2 + 1;
    const char* last = line.data() + line.size();
    auto [ptr, ec] = std::from_chars(first, last, rec.timestamp);
    if (ec != std::errc() || ptr != last || first == last) {
      throw ParseError("timestamp '" + std::string(first, last) +
                           "' is not an integer",
                       line_no);
    }
    if (rec.timestamp < 0) throw ParseError("negative timestamp", line_no);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<RawInteraction> LoadTsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path.string());
  return ParseTsv(in);
}

InteractionLog KCoreFilter(const std::vector<RawInteraction>& raw, int k) {
  if (k < 1) throw ArgumentError("k-core needs k >= 1");
  // Intern ids in first-appearance order.
  std::unordered_map<std::string, std::size_t> user_index, item_index;
  std::vector<std::string> users, items;
  std::vector<std::size_t> rec_user(raw.size()), rec_item(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto [u, u_new] = user_index.try_emplace(raw[i].user, users.size());
    if (u_new) users.push_back(raw[i].user);
    auto [v, v_new] = item_index.try_emplace(raw[i].item, items.size());
    if (v_new) items.push_back(raw[i].item);
    rec_user[i] = u->second;
    rec_item[i] = v->second;
  }

  std::vector<char> alive(raw.size(), 1);
  const auto threshold = static_cast<std::size_t>(k);
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<std::size_t> user_deg(users.size(), 0);
    std::vector<std::size_t> item_deg(items.size(), 0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (!alive[i]) continue;
      ++user_deg[rec_user[i]];
      ++item_deg[rec_item[i]];
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (alive[i] && (user_deg[rec_user[i]] < threshold ||
                       item_deg[rec_item[i]] < threshold)) {
        alive[i] = 0;
        changed = true;
      }
    }
  }

  // Survivors, re-densified in first-appearance order.
  InteractionLog log;
  std::vector<std::size_t> user_dense(users.size(), SIZE_MAX);
  std::vector<std::size_t> item_dense(items.size(), SIZE_MAX);
  std::vector<std::vector<std::size_t>> records;  // per dense user
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!alive[i]) continue;
    std::size_t& u = user_dense[rec_user[i]];
    if (u == SIZE_MAX) {
      u = log.user_ids.size();
      log.user_ids.push_back(users[rec_user[i]]);
      records.emplace_back();
    }
    std::size_t& v = item_dense[rec_item[i]];
    if (v == SIZE_MAX) {
      v = log.item_ids.size();
      log.item_ids.push_back(items[rec_item[i]]);
    }
    records[u].push_back(i);
  }
  if (log.user_ids.empty()) {
    throw EmptyDatasetError("no interactions survive the " +
                            std::to_string(k) + "-core filter");
  }
  log.sequences.resize(records.size());
  for (std::size_t u = 0; u < records.size(); ++u) {
    auto& recs = records[u];
    std::stable_sort(recs.begin(), recs.end(), [&](std::size_t a, std::size_t b) {
      return raw[a].timestamp < raw[b].timestamp;
    });
    log.sequences[u].reserve(recs.size());
    for (std::size_t i : recs) log.sequences[u].push_back(item_dense[rec_item[i]]);
  }
  return log;
}

std::vector<RawInteraction> ToRawInteractions(const InteractionLog& log) {
  std::vector<RawInteraction> out;
  out.reserve(log.interaction_count());
  for (std::size_t u = 0; u < log.user_count(); ++u) {
    const auto& seq = log.sequences[u];
    for (std::size_t t = 0; t < seq.size(); ++t) {
      out.push_back({log.user_ids[u], log.item_ids[seq[t]],
                     static_cast<std::int64_t>(t)});
    }
  }
  return out;
}

Split LeaveOneOutSplit(const InteractionLog& log) {
  Split split;
  split.item_count = log.item_count();
  split.users.reserve(log.user_count());
  for (std::size_t u = 0; u < log.user_count(); ++u) {
    const auto& seq = log.sequences[u];
    if (seq.size() < 3) {
      throw SplitError("user '" + log.user_ids[u] + "' has " +
                       std::to_string(seq.size()) +
                       " interactions; leave-one-out needs at least 3");
    }
    UserSplit us;
    us.train.assign(seq.begin(), seq.end() - 2);
    us.val = seq[seq.size() - 2];
    us.test = seq.back();
    split.users.push_back(std::move(us));
  }
  return split;
}

InteractionLog SynthGenerate(const SynthConfig& cfg) {
  if (cfg.users < 1 || cfg.items < 1 || cfg.latent_dim < 1) {
    throw ArgumentError("synthetic users, items and latent_dim must be >= 1");
  }
  if (cfg.min_len < 1 || cfg.min_len > cfg.max_len) {
    throw ArgumentError("synthetic sequence length range is empty");
  }
  if (cfg.items < 2 && cfg.max_len > 1) {
    throw ArgumentError("sequences longer than 1 need at least 2 items");
  }
  std::mt19937_64 rng(cfg.seed);
  const std::size_t d = cfg.latent_dim;
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(double(d)));
  std::vector<double> user_vec(cfg.users * d), item_vec(cfg.items * d);
  for (double& x : item_vec) x = normal(rng);
  for (double& x : user_vec) x = normal(rng);

  InteractionLog log;
  log.sequences.resize(cfg.users);
  for (std::size_t u = 0; u < cfg.users; ++u) {
    log.user_ids.push_back("u" + std::to_string(u));
  }
  for (std::size_t v = 0; v < cfg.items; ++v) {
    log.item_ids.push_back("i" + std::to_string(v));
  }

  std::uniform_int_distribution<std::size_t> length(cfg.min_len, cfg.max_len);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> query(d), logits(cfg.items);
  for (std::size_t u = 0; u < cfg.users; ++u) {
    const std::size_t len = length(rng);
    auto& seq = log.sequences[u];
    const double* uv = user_vec.data() + u * d;
    for (std::size_t t = 0; t < len; ++t) {
      const bool has_prev = t > 0;
      const double* pv = has_prev ? item_vec.data() + seq.back() * d : nullptr;
      for (std::size_t c = 0; c < d; ++c) {
        query[c] = 0.8 * uv[c] + (has_prev ? 0.2 * pv[c] : 0.0);
      }
      double max_logit = -std::numeric_limits<double>::infinity();
      for (std::size_t v = 0; v < cfg.items; ++v) {
        const double* iv = item_vec.data() + v * d;
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) dot += query[c] * iv[c];
        logits[v] = cfg.sharpness * dot;
        if (!(has_prev && v == seq.back())) max_logit = std::max(max_logit, logits[v]);
      }
      double total = 0.0;
      for (std::size_t v = 0; v < cfg.items; ++v) {
        logits[v] = (has_prev && v == seq.back())
                        ? 0.0
                        : std::exp(logits[v] - max_logit);
        total += logits[v];
      }
      double target = unit(rng) * total;
      std::size_t pick = cfg.items;
      for (std::size_t v = 0; v < cfg.items; ++v) {
        if (logits[v] == 0.0) continue;
        pick = v;
        target -= logits[v];
        if (target < 0) break;
      }
      seq.push_back(pick);
    }
  }
  return log;
}

SynthConfig ParseSynthSpec(const std::string& spec) {
  SynthConfig cfg;
  std::stringstream ss(spec);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (field.empty()) continue;
    const auto eq = field.find('=');
    if (eq == std::string::npos) {
      throw ArgumentError("synthetic spec field '" + field + "' lacks '='");
    }
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    try {
      if (key == "users") cfg.users = std::stoul(value);
      else if (key == "items") cfg.items = std::stoul(value);
      else if (key == "latent_dim") cfg.latent_dim = std::stoul(value);
      else if (key == "min_len") cfg.min_len = std::stoul(value);
      else if (key == "max_len") cfg.max_len = std::stoul(value);
      else if (key == "sharpness") cfg.sharpness = std::stod(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else throw ArgumentError("unknown synthetic spec key '" + key + "'");
    } catch (const std::logic_error&) {
      throw ArgumentError("bad value for synthetic spec key '" + key + "'");
    }
  }
  return cfg;
}

nlohmann::json ToJson(const DatasetStats& stats) {
  return {{"#Users", stats.users},
          {"#Items", stats.items},
          {"#Interactions", stats.interactions},
          {"Density", stats.density},
          {"Avg. Len.", stats.avg_len}};
}

nlohmann::json ToJson(const InteractionLog& log) {
  return {{"users", log.user_count()},
          {"items", log.item_count()},
          {"sequences", log.sequences},
          {"id_maps", {{"users", log.user_ids}, {"items", log.item_ids}}},
          {"statistics", ToJson(ComputeStats(log))}};
}

InteractionLog LogFromJson(const nlohmann::json& doc) {
  InteractionLog log;
  try {
    log.sequences =
        doc.at("sequences").get<std::vector<std::vector<ItemId>>>();
    log.user_ids = doc.at("id_maps").at("users").get<std::vector<std::string>>();
    log.item_ids = doc.at("id_maps").at("items").get<std::vector<std::string>>();
    if (doc.at("users").get<std::size_t>() != log.sequences.size() ||
        doc.at("items").get<std::size_t>() != log.item_ids.size() ||
        log.user_ids.size() != log.sequences.size()) {
      throw ParseError("dataset counts disagree with its id maps", 0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed dataset JSON: ") + e.what(), 0);
  }
  for (const auto& seq : log.sequences) {
    for (ItemId v : seq) {
      if (v >= log.item_ids.size()) {
        throw ParseError("dataset item id " + std::to_string(v) +
                             " outside the catalog",
                         0);
      }
    }
  }
  return log;
}

void SaveDataset(const std::filesystem::path& path, const InteractionLog& log) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write " + path.string());
  out << ToJson(log).dump() << "\n";
}

InteractionLog LoadDataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed dataset JSON: ") + e.what(), 0);
  }
  return LogFromJson(doc);
}

}  // namespace ranklab::data
