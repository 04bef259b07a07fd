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

#include "ranklab/models.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "ranklab/errors.h"
#include "ranklab/ops.h"

namespace ranklab::models {
namespace {

constexpr char kFormat[] = "ranklab-checkpoint";
constexpr int kVersion = 1;
constexpr const char* kGateNames[3] = {"z", "r", "n"};

History Truncate(History h, std::size_t max_len) {
  return h.size() > max_len ? h.subspan(h.size() - max_len) : h;
}

}  // namespace

std::string ToString(EncoderKind kind) {
  return kind == EncoderKind::kGru ? "gru" : "mean_pool";
}

std::string ToString(InitKind kind) {
  return kind == InitKind::kXavier ? "xavier" : "normal";
}

EncoderKind ParseEncoderKind(const std::string& name) {
  if (name == "mean_pool") return EncoderKind::kMeanPool;
  if (name == "gru") return EncoderKind::kGru;
  throw ConfigError("unknown encoder '" + name + "'");
}

InitKind ParseInitKind(const std::string& name) {
  if (name == "normal") return InitKind::kNormal;
  if (name == "xavier") return InitKind::kXavier;
  throw ConfigError("unknown init '" + name + "'");
}

void ModelConfig::Validate() const {
  if (item_count == 0) throw ConfigError("item_count must be positive");
  if (dim == 0) throw ConfigError("dim must be positive");
  if (max_len == 0) throw ConfigError("max_len must be positive");
}

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.Validate();
  const std::size_t n = cfg_.item_count;
  const std::size_t d = cfg_.dim;
  std::mt19937_64 rng(cfg_.seed);

  ad::Tensor table({n, d});
  if (cfg_.init == InitKind::kXavier) {
    const double a = std::sqrt(6.0 / double(n + d));
    std::uniform_real_distribution<double> u(-a, a);
    for (double& x : table.mutable_data()) x = u(rng);
  } else {
    std::normal_distribution<double> g(0.0, 0.02);
    for (double& x : table.mutable_data()) x = g(rng);
  }
  table_ = ad::Parameter("item_embeddings", std::move(table));

  if (cfg_.encoder == EncoderKind::kGru) {
    // Recurrent matrices use a fan-based uniform range under either option; a
    // 0.02 normal would leave the recurrence nearly inert.
    const double a = cfg_.init == InitKind::kXavier
                         ? std::sqrt(6.0 / double(2 * d))
                         : 1.0 / std::sqrt(double(d));
    std::uniform_real_distribution<double> u(-a, a);
    for (int g = 0; g < 3; ++g) {
      ad::Tensor x({d, d}), h({d, d});
      for (double& v : x.mutable_data()) v = u(rng);
      for (double& v : h.mutable_data()) v = u(rng);
      wx_[g] = ad::Parameter(std::string("gru.wx_") + kGateNames[g], std::move(x));
      wh_[g] = ad::Parameter(std::string("gru.wh_") + kGateNames[g], std::move(h));
    }
    for (int g = 0; g < 3; ++g) {
      b_[g] = ad::Parameter(std::string("gru.b_") + kGateNames[g], ad::Tensor({d}));
    }
  }
  if (cfg_.nce_offset) nce_ = ad::Parameter("nce_offset", ad::Tensor::Scalar(0.0));
}

std::vector<ad::Parameter*> Model::parameters() {
  std::vector<ad::Parameter*> out = {&table_};
  if (cfg_.encoder == EncoderKind::kGru) {
    for (auto& p : wx_) out.push_back(&p);
    for (auto& p : wh_) out.push_back(&p);
    for (auto& p : b_) out.push_back(&p);
  }
  if (nce_) out.push_back(&*nce_);
  return out;
}

std::vector<const ad::Parameter*> Model::parameters() const {
  std::vector<const ad::Parameter*> out;
  for (ad::Parameter* p : const_cast<Model*>(this)->parameters()) {
    out.push_back(p);
  }
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t total = 0;
  for (const ad::Parameter* p : parameters()) total += p->value.size();
  return total;
}

BoundModel Model::Bind(ad::Tape& tape) {
  BoundModel b;
  b.table = tape.Bind(table_);
  if (cfg_.encoder == EncoderKind::kGru) {
    for (int g = 0; g < 3; ++g) {
      b.wx[g] = tape.Bind(wx_[g]);
      b.wh[g] = tape.Bind(wh_[g]);
      b.bias[g] = tape.Bind(b_[g]);
    }
  }
  if (nce_) b.nce_offset = tape.Bind(*nce_);
  return b;
}

void Model::CheckIds(History ids) const {
  for (ItemId id : ids) {
    if (id >= cfg_.item_count) {
      throw IndexError("item id " + std::to_string(id) + " outside catalog of " +
                       std::to_string(cfg_.item_count));
    }
  }
}

ad::Var Model::EncodeMeanPool(const BoundModel& bound,
                              std::span<const History> histories) const {
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets = {0};
  for (History h : histories) {
    const History t = Truncate(h, cfg_.max_len);
    ids.insert(ids.end(), t.begin(), t.end());
    offsets.push_back(ids.size());
  }
  return ad::SegmentMean(ad::GatherRows(bound.table, ids), offsets);
}

std::vector<ad::Var> Model::RunGru(const BoundModel& bound,
                                   std::span<const History> sequences,
                                   std::size_t steps) const {
  const std::size_t batch = sequences.size();
  ad::Tape& tape = *bound.table.tape();
  ad::Var h = tape.Constant(ad::Tensor({batch, cfg_.dim}));
  std::vector<ad::Var> states;
  std::vector<std::size_t> ids(batch);
  for (std::size_t t = 0; t < steps; ++t) {
    // Rows past their sequence end read item 0; those states are never used.
    for (std::size_t b = 0; b < batch; ++b) {
      ids[b] = t < sequences[b].size() ? sequences[b][t] : 0;
    }
    const ad::Var x = ad::GatherRows(bound.table, ids);
    auto gate = [&](int g) {
      return ad::AddBias(ad::Add(ad::MatMul(x, bound.wx[g]),
                                 ad::MatMul(h, bound.wh[g])),
                         bound.bias[g]);
    };
    const ad::Var z = ad::Sigmoid(gate(kUpdate));
    const ad::Var r = ad::Sigmoid(gate(kReset));
    const ad::Var n = ad::Tanh(ad::AddBias(
        ad::Add(ad::MatMul(x, bound.wx[kCandidate]),
                ad::Mul(r, ad::MatMul(h, bound.wh[kCandidate]))),
        bound.bias[kCandidate]));
    // (1 - z) * n + z * h
    h = ad::Add(n, ad::Mul(z, ad::Sub(h, n)));
    states.push_back(h);
  }
  return states;
}

ad::Var Model::EncodeGru(const BoundModel& bound,
                         std::span<const History> histories) const {
  std::vector<History> cut;
  std::size_t steps = 0;
  for (History h : histories) {
    cut.push_back(Truncate(h, cfg_.max_len));
    steps = std::max(steps, cut.back().size());
  }
  const std::vector<ad::Var> states = RunGru(bound, cut, steps);
  const std::size_t batch = cut.size();
  std::vector<std::size_t> pick(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    pick[b] = (cut[b].size() - 1) * batch + b;
  }
  return ad::GatherRows(ad::StackRows(states), pick);
}

ad::Var Model::Encode(const BoundModel& bound,
                      std::span<const History> histories) const {
  if (histories.empty()) throw ArgumentError("encode: no histories");
  for (History h : histories) {
    if (h.empty()) throw ArgumentError("encode: empty history");
    CheckIds(h);
  }
  return cfg_.encoder == EncoderKind::kGru ? EncodeGru(bound, histories)
                                           : EncodeMeanPool(bound, histories);
}

ad::Var Model::EncodePrefixes(const BoundModel& bound,
                              std::span<const History> sequences) const {
  std::size_t rows = 0;
  for (History s : sequences) {
    CheckIds(s);
    if (s.size() >= 2) rows += s.size() - 1;
  }
  if (rows == 0) throw ArgumentError("encode_prefixes: no prefixes");

  if (cfg_.encoder == EncoderKind::kMeanPool) {
    std::vector<History> prefixes;
    prefixes.reserve(rows);
    for (History s : sequences) {
      for (std::size_t j = 1; j < s.size(); ++j) prefixes.push_back(s.first(j));
    }
    return EncodeMeanPool(bound, prefixes);
  }

  // One recurrent pass per sequence covers prefixes up to max_len; longer
  // prefixes are truncated windows and get their own pass.
  const std::size_t batch = sequences.size();
  std::size_t steps = 0;
  for (History s : sequences) {
    if (s.size() >= 2) steps = std::max(steps, std::min(s.size() - 1, cfg_.max_len));
  }
  std::vector<ad::Var> blocks = {ad::StackRows(RunGru(bound, sequences, steps))};
  std::vector<History> windows;
  std::vector<std::size_t> order;
  order.reserve(rows);
  for (std::size_t b = 0; b < batch; ++b) {
    const History s = sequences[b];
    for (std::size_t j = 1; j < s.size(); ++j) {
      if (j <= cfg_.max_len) {
        order.push_back((j - 1) * batch + b);
      } else {
        order.push_back(steps * batch + windows.size());
        windows.push_back(s.subspan(j - cfg_.max_len, cfg_.max_len));
      }
    }
  }
  if (!windows.empty()) blocks.push_back(EncodeGru(bound, windows));
  return ad::GatherRows(ad::StackRows(blocks), order);
}

ad::Var Model::ScoreAll(const BoundModel& bound, const ad::Var& queries) {
  return ad::MatMulNT(queries, bound.table);
}

ad::Var Model::ScoreSubset(const BoundModel& bound, const ad::Var& queries,
                           std::span<const ItemId> ids) {
  return ad::GatheredDot(queries, bound.table, ids);
}

std::vector<double> Model::EncodeOne(History history) const {
  ad::Tape tape;
  Model& self = const_cast<Model&>(*this);
  const BoundModel bound = self.Bind(tape);
  const History one[] = {history};
  const auto v = Encode(bound, one).value().data();
  return {v.begin(), v.end()};
}

std::vector<double> Model::ScoreAllOne(std::span<const double> query) const {
  if (query.size() != cfg_.dim) throw DimensionError("query length != dim");
  std::vector<double> out(cfg_.item_count);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto row = table_.value.row(i);
    double s = 0.0;
    for (std::size_t c = 0; c < cfg_.dim; ++c) s += query[c] * row[c];
    out[i] = s;
  }
  return out;
}

std::vector<double> Model::ScoreSubsetOne(std::span<const double> query,
                                          std::span<const ItemId> ids) const {
  if (query.size() != cfg_.dim) throw DimensionError("query length != dim");
  CheckIds(ids);
  std::vector<double> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto row = table_.value.row(ids[i]);
    double s = 0.0;
    for (std::size_t c = 0; c < cfg_.dim; ++c) s += query[c] * row[c];
    out[i] = s;
  }
  return out;
}

void Model::Save(const std::string& path, const nlohmann::json& metadata) const {
  nlohmann::json header;
  header["format"] = kFormat;
  header["version"] = kVersion;
  header["item_count"] = cfg_.item_count;
  header["dim"] = cfg_.dim;
  header["max_len"] = cfg_.max_len;
  header["encoder"] = ToString(cfg_.encoder);
  header["init"] = ToString(cfg_.init);
  header["seed"] = cfg_.seed;
  header["nce_offset"] = cfg_.nce_offset;
  header["metadata"] = metadata;
  nlohmann::json fields = nlohmann::json::array();
  for (const ad::Parameter* p : parameters()) {
    fields.push_back({{"name", p->name}, {"shape", p->value.shape()}});
  }
  header["parameters"] = fields;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArgumentError("cannot write checkpoint '" + path + "'");
  out << header.dump() << '\n';
  for (const ad::Parameter* p : parameters()) {
    for (double v : p->value.data()) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
      unsigned char bytes[8];
      for (int i = 0; i < 8; ++i) bytes[i] = (bits >> (8 * i)) & 0xff;
      out.write(reinterpret_cast<const char*>(bytes), 8);
    }
  }
  if (!out) throw ArgumentError("failed writing checkpoint '" + path + "'");
}

Model Model::Load(const std::string& path, nlohmann::json* metadata) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot read checkpoint '" + path + "'");
  std::string line;
  std::getline(in, line);
  ModelConfig cfg;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
    if (header.at("format") != kFormat || header.at("version") != kVersion) {
      throw ParseError("not a ranklab checkpoint", 1);
    }
    cfg.item_count = header.at("item_count").get<std::size_t>();
    cfg.dim = header.at("dim").get<std::size_t>();
    cfg.max_len = header.at("max_len").get<std::size_t>();
    cfg.encoder = ParseEncoderKind(header.at("encoder").get<std::string>());
    cfg.init = ParseInitKind(header.at("init").get<std::string>());
    cfg.seed = header.at("seed").get<std::uint64_t>();
    cfg.nce_offset = header.at("nce_offset").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint header: ") + e.what(), 1);
  } catch (const ConfigError& e) {
    throw ParseError(std::string("bad checkpoint header: ") + e.what(), 1);
  }
  Model model(cfg);
  const auto params = model.parameters();
  const auto& fields = header["parameters"];
  if (!fields.is_array() || fields.size() != params.size()) {
    throw ParseError("checkpoint parameter list does not match the model", 1);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (fields[i].value("name", "") != params[i]->name ||
        fields[i].value("shape", ad::Shape{}) != params[i]->value.shape()) {
      throw ParseError("checkpoint field " + std::to_string(i) + " mismatch", 1);
    }
    for (double& v : params[i]->value.mutable_data()) {
      unsigned char bytes[8];
      if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
        throw ParseError("checkpoint blob truncated", 2);
      }
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= std::uint64_t(bytes[b]) << (8 * b);
      v = std::bit_cast<double>(bits);
    }
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw ParseError("trailing bytes after checkpoint blob", 2);
  }
  if (metadata != nullptr) *metadata = header.value("metadata", nlohmann::json::object());
  return model;
}

}  // namespace ranklab::models
