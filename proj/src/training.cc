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

#include "ranklab/training.h"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "ranklab/errors.h"
#include "ranklab/ops.h"
#include "ranklab/sampling.h"

namespace ranklab::training {
namespace {

// Stream ids that keep the shuffle and negative draws apart.
constexpr std::uint64_t kShuffleStream = 0x5348554646000000ull;
constexpr std::uint64_t kNegativeSalt = 0x4e45474154495645ull;

bool ValidMetricName(const std::string& name) {
  metrics::MetricReport probe;
  probe.ks = {5, 10};
  probe.ndcg_at = {0, 0};
  probe.mrr_at = {0, 0};
  for (const std::string& c : probe.ColumnNames()) {
    if (c == name) return true;
  }
  return false;
}

std::vector<std::size_t> Shuffled(std::size_t n, std::uint64_t seed,
                                  std::size_t epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  sampling::CounterRng rng(seed, kShuffleStream + epoch);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.Below(i)]);
  }
  return order;
}

nlohmann::json ReportJson(const metrics::MetricReport& r) {
  nlohmann::json out = nlohmann::json::object();
  const auto names = r.ColumnNames();
  const auto values = r.Values();
  for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] = values[i];
  out["queries"] = r.queries;
  return out;
}

}  // namespace

std::string HashHex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void TrainConfig::Validate() const {
  loss.Validate();
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw ConfigError("weight_decay must be non-negative");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (max_len < 1) throw ConfigError("max_len must be at least 1");
  if (d < 1) throw ConfigError("d must be at least 1");
  if (eval_every < 1) throw ConfigError("eval_every must be at least 1");
  if (!ValidMetricName(eval_metric)) {
    throw ConfigError("unknown eval_metric '" + eval_metric + "'");
  }
}

std::size_t TrainConfig::effective_epochs() const {
  if (epochs > 0) return epochs;
  return loss.uses_catalog() ? 200 : 300;
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"loss", loss.ToString()},
          {"learning_rate", learning_rate},
          {"weight_decay", weight_decay},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"max_len", max_len},
          {"d", d},
          {"encoder_kind", models::ToString(encoder_kind)},
          {"init", models::ToString(init)},
          {"seed", seed},
          {"eval_every", eval_every},
          {"early_stop_patience", early_stop_patience},
          {"eval_metric", eval_metric}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  TrainConfig cfg;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "loss") {
        cfg.loss = losses::LossSpec::Parse(value.get<std::string>());
      } else if (key == "learning_rate") {
        cfg.learning_rate = value.get<double>();
      } else if (key == "weight_decay") {
        cfg.weight_decay = value.get<double>();
      } else if (key == "epochs") {
        cfg.epochs = value.get<std::size_t>();
      } else if (key == "batch_size") {
        cfg.batch_size = value.get<std::size_t>();
      } else if (key == "max_len") {
        cfg.max_len = value.get<std::size_t>();
      } else if (key == "d") {
        cfg.d = value.get<std::size_t>();
      } else if (key == "encoder_kind") {
        cfg.encoder_kind = models::ParseEncoderKind(value.get<std::string>());
      } else if (key == "init") {
        cfg.init = models::ParseInitKind(value.get<std::string>());
      } else if (key == "seed") {
        cfg.seed = value.get<std::uint64_t>();
      } else if (key == "eval_every") {
        cfg.eval_every = value.get<std::size_t>();
      } else if (key == "early_stop_patience") {
        cfg.early_stop_patience = value.get<std::size_t>();
      } else if (key == "eval_metric") {
        cfg.eval_metric = value.get<std::string>();
      } else {
        throw ConfigError("unknown config field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  cfg.Validate();
  return cfg;
}

std::string TrainConfig::Hash() const { return HashHex(ToJson().dump()); }

std::vector<Example> MakeTrainingExamples(const data::Split& split,
                                          std::size_t max_len) {
  if (max_len < 1) throw ArgumentError("max_len must be at least 1");
  std::vector<Example> out;
  for (const data::UserSplit& u : split.users) {
    const models::History seq = u.train;
    for (std::size_t j = 1; j < seq.size(); ++j) {
      const std::size_t start = j > max_len ? j - max_len : 0;
      out.push_back({seq.subspan(start, j - start), seq[j]});
    }
  }
  return out;
}

Adam::Adam(std::vector<ad::Parameter*> params, double learning_rate,
           double weight_decay, double beta1, double beta2, double eps)
    : params_(std::move(params)),
      lr_(learning_rate),
      wd_(weight_decay),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {
  if (!(lr_ >= 0.0) || !(wd_ >= 0.0)) {
    throw ArgumentError("learning rate and weight decay must be non-negative");
  }
  for (ad::Parameter* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::Step() {
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, double(steps_));
  const double c2 = 1.0 - std::pow(beta2_, double(steps_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    ad::Parameter& p = *params_[k];
    double* w = p.value.raw();
    const double* g = p.grad.raw();
    double* m = m_[k].raw();
    double* v = v_[k].raw();
    bool finite = true;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      w[i] -= lr_ * (update + wd_ * w[i]);
      finite = finite && std::isfinite(w[i]);
    }
    if (!finite) {
      throw DivergenceError("parameter '" + p.name + "' became non-finite at step " +
                            std::to_string(steps_));
    }
  }
}

double TrainEpoch(models::Model& model, Adam& optimizer,
                  const std::vector<Example>& examples, const TrainConfig& cfg,
                  std::size_t epoch) {
  if (examples.empty()) throw ArgumentError("no training examples");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be at least 1");
  const std::size_t n = model.item_count();
  const losses::LossSpec& spec = cfg.loss;
  const std::size_t k = spec.negatives_per_example();

  sampling::SamplerConfig sampler;
  if (k > 0) {
    sampler.catalog_size = n;
    sampler.num_negatives = k;
    sampler.exclude_target = true;
    sampler.seed = cfg.seed ^ (kNegativeSalt + 0x9e3779b97f4a7c15ull * epoch);
    sampler.Validate();
  }

  const std::vector<std::size_t> order = Shuffled(examples.size(), cfg.seed, epoch);
  const auto params = model.parameters();
  double total = 0.0;
  std::vector<models::History> histories;
  std::vector<std::size_t> targets;
  std::vector<std::size_t> ids;
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
    const std::size_t end = std::min(order.size(), start + cfg.batch_size);
    histories.clear();
    targets.clear();
    ids.assign((end - start) * (1 + k), 0);
    for (std::size_t i = start; i < end; ++i) {
      const Example& ex = examples[order[i]];
      histories.push_back(ex.history);
      targets.push_back(ex.target);
      if (k > 0) {
        const std::size_t row = i - start;
        ids[row * (1 + k)] = ex.target;
        // Draw index is the example's own position, so negatives do not
        // depend on the shuffle.
        sampling::SampleUniformInto(
            sampler, ex.target, order[i],
            std::span<std::size_t>(ids).subspan(row * (1 + k) + 1, k));
      }
    }

    for (ad::Parameter* p : params) p->ZeroGrad();
    ad::Tape tape;
    const models::BoundModel bound = model.Bind(tape);
    const ad::Var queries = model.Encode(bound, histories);
    const ad::Var scores = spec.uses_catalog()
                               ? models::Model::ScoreAll(bound, queries)
                               : models::Model::ScoreSubset(bound, queries, ids);
    if (!scores.value().AllFinite()) {
      throw DivergenceError("non-finite scores in epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch_index));
    }
    ad::Var per_example;
    if (spec.uses_catalog()) {
      per_example = losses::CatalogLossBatch(spec, scores, targets);
    } else {
      const ad::Var* offset = bound.nce_offset ? &*bound.nce_offset : nullptr;
      per_example = losses::SampledLossBatch(spec, scores, offset, n);
    }
    const ad::Var loss = ad::Mean(per_example);
    const double value = loss.value().item();
    if (!std::isfinite(value)) {
      throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch_index));
    }
    total += value * double(end - start);
    tape.Backward(loss);
    optimizer.Step();
  }
  return total / double(examples.size());
}

metrics::MetricReport Evaluate(const models::Model& model,
                               const data::Split& split, Phase phase,
                               std::vector<std::size_t> ks) {
  if (split.users.empty()) throw EmptyDatasetError("no users to evaluate");
  if (split.item_count != model.item_count()) {
    throw IncompatibleError("model has " + std::to_string(model.item_count()) +
                            " items, data has " + std::to_string(split.item_count));
  }
  constexpr std::size_t kBatch = 256;
  std::vector<std::size_t> ranks;
  ranks.reserve(split.users.size());
  models::Model& scorer = const_cast<models::Model&>(model);
  std::vector<std::vector<data::ItemId>> extended;
  for (std::size_t start = 0; start < split.users.size(); start += kBatch) {
    const std::size_t end = std::min(split.users.size(), start + kBatch);
    std::vector<models::History> histories;
    std::vector<std::size_t> targets;
    extended.clear();
    extended.reserve(end - start);
    for (std::size_t u = start; u < end; ++u) {
      const data::UserSplit& us = split.users[u];
      if (phase == Phase::kVal) {
        histories.push_back(us.train);
        targets.push_back(us.val);
      } else {
        extended.push_back(us.train);
        extended.back().push_back(us.val);
        histories.push_back(extended.back());
        targets.push_back(us.test);
      }
    }
    ad::Tape tape;
    const models::BoundModel bound = scorer.Bind(tape);
    const ad::Var scores =
        models::Model::ScoreAll(bound, model.Encode(bound, histories));
    for (std::size_t b = 0; b < targets.size(); ++b) {
      ranks.push_back(metrics::RankOfTarget(scores.value().row(b), targets[b]));
    }
  }
  return metrics::Aggregate(ranks, std::move(ks));
}

nlohmann::json RunHistory::ToJson() const {
  nlohmann::json evals = nlohmann::json::array();
  for (const EvalRecord& r : evaluations) {
    evals.push_back({{"epoch", r.epoch}, {"validation", ReportJson(r.report)}});
  }
  return {{"run_id", run_id},
          {"epoch_loss", epoch_loss},
          {"evaluations", evals},
          {"best_epoch", best_epoch},
          {"early_stopped", early_stopped},
          {"test", ReportJson(test)}};
}

std::string MakeRunId(const TrainConfig& cfg, const data::Split& split) {
  std::string text = cfg.ToJson().dump();
  text += "|items=" + std::to_string(split.item_count);
  for (const data::UserSplit& u : split.users) {
    text += '|';
    for (data::ItemId id : u.train) text += std::to_string(id) + ',';
    text += std::to_string(u.val) + ',' + std::to_string(u.test);
  }
  return HashHex(text);
}

FitResult Fit(const TrainConfig& cfg, const data::Split& split,
              const std::function<void(const EvalRecord&)>& on_eval) {
  cfg.Validate();
  models::ModelConfig mc;
  mc.item_count = split.item_count;
  mc.dim = cfg.d;
  mc.max_len = cfg.max_len;
  mc.encoder = cfg.encoder_kind;
  mc.init = cfg.init;
  mc.seed = cfg.seed;
  mc.nce_offset = cfg.loss.kind == losses::LossKind::kNCE;
  models::Model model(mc);

  const std::vector<Example> examples = MakeTrainingExamples(split, cfg.max_len);
  if (examples.empty()) throw EmptyDatasetError("split yields no training pairs");

  RunHistory history;
  history.run_id = MakeRunId(cfg, split);
  auto evaluate = [&](std::size_t epoch) {
    EvalRecord rec{epoch, Evaluate(model, split, Phase::kVal)};
    history.evaluations.push_back(rec);
    if (on_eval) on_eval(rec);
    return rec.report.Get(cfg.eval_metric);
  };

  models::Model best = model;
  double best_value = evaluate(0);
  std::size_t stale = 0;
  if (cfg.early_stop_patience > 0) {
    Adam optimizer(model.parameters(), cfg.learning_rate, cfg.weight_decay);
    const std::size_t epochs = cfg.effective_epochs();
    for (std::size_t e = 1; e <= epochs; ++e) {
      history.epoch_loss.push_back(TrainEpoch(model, optimizer, examples, cfg, e));
      if (e % cfg.eval_every != 0 && e != epochs) continue;
      const double value = evaluate(e);
      if (value > best_value) {
        best_value = value;
        best = model;
        history.best_epoch = e;
        stale = 0;
      } else if (++stale >= cfg.early_stop_patience) {
        history.early_stopped = e < epochs;
        break;
      }
    }
  }
  history.test = Evaluate(best, split, Phase::kTest);
  return {std::move(best), std::move(history)};
}

std::vector<SweepRun> Sweep(const TrainConfig& base,
                            const std::vector<GridAxis>& grid,
                            const std::vector<std::uint64_t>& seeds,
                            const data::Split& split, std::size_t workers) {
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
  for (const GridAxis& axis : grid) {
    if (axis.second.empty()) throw ConfigError("axis '" + axis.first + "' is empty");
    if (axis.first == "seed") throw ConfigError("seeds are given separately");
  }

  std::vector<SweepRun> runs;
  std::vector<std::size_t> index(grid.size(), 0);
  while (true) {
    for (std::uint64_t seed : seeds) {
      SweepRun run;
      nlohmann::json doc = base.ToJson();
      for (std::size_t a = 0; a < grid.size(); ++a) {
        run.point.push_back(grid[a].second[index[a]]);
        doc[grid[a].first] = grid[a].second[index[a]];
      }
      doc["seed"] = seed;
      try {
        run.config = TrainConfig::FromJson(doc);
      } catch (const ConfigError& e) {
        run.config = base;
        run.config.seed = seed;
        run.error = e.what();
      }
      runs.push_back(std::move(run));
    }
    std::size_t a = grid.size();
    while (a > 0 && ++index[a - 1] == grid[a - 1].second.size()) {
      index[a - 1] = 0;
      --a;
    }
    if (a == 0) break;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      SweepRun& run = runs[i];
      if (!run.error.empty()) continue;
      try {
        run.history = Fit(run.config, split).history;
        run.ok = true;
      } catch (const std::exception& e) {
        run.error = e.what();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, runs.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  return runs;
}

void WriteSweepCsv(std::ostream& out, const std::vector<GridAxis>& grid,
                   const std::vector<SweepRun>& runs) {
  metrics::MetricReport layout;
  layout.ks = {5, 10};
  layout.ndcg_at = {0, 0};
  layout.mrr_at = {0, 0};
  for (const SweepRun& r : runs) {
    if (r.ok) {
      layout = r.history.test;
      break;
    }
  }
  const auto columns = layout.ColumnNames();
  out << "run_id,loss";
  // The loss already has its own column.
  for (const GridAxis& axis : grid) {
    if (axis.first != "loss") out << ',' << axis.first;
  }
  out << ",seed,best_epoch";
  for (const std::string& c : columns) out << ',' << c;
  out << '\n';
  for (const SweepRun& r : runs) {
    std::string loss = r.config.loss.ToString();
    for (std::size_t a = 0; a < r.point.size() && a < grid.size(); ++a) {
      if (grid[a].first == "loss" && r.point[a].is_string()) {
        loss = r.point[a].get<std::string>();
      }
    }
    out << (r.ok ? r.history.run_id : "") << ',' << loss;
    for (std::size_t a = 0; a < r.point.size() && a < grid.size(); ++a) {
      if (grid[a].first == "loss") continue;
      const nlohmann::json& v = r.point[a];
      out << ',' << (v.is_string() ? v.get<std::string>() : v.dump());
    }
    out << ',' << r.config.seed << ',';
    if (r.ok) out << r.history.best_epoch;
    const std::vector<double> values =
        r.ok ? r.history.test.Values() : std::vector<double>();
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out << ',';
      if (r.ok) out << metrics::FormatDouble(values[c]);
    }
    out << '\n';
  }
}

std::size_t ThreadsFromEnv() {
  const char* env = std::getenv("RANKLAB_THREADS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1) return 1;
  return static_cast<std::size_t>(v);
}

}  // namespace ranklab::training
