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

#ifndef RANKLAB_TRAINING_H_
#define RANKLAB_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ranklab/datasets.h"
#include "ranklab/losses.h"
#include "ranklab/metrics.h"
#include "ranklab/models.h"

// Mini-batch training with Adam, full-catalog evaluation, early stopping and
// hyperparameter sweeps.
namespace ranklab::training {

struct TrainConfig {
  losses::LossSpec loss;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  // 0 picks 200 for the full-catalog losses and 300 for the sampled ones.
  std::size_t epochs = 0;
  std::size_t batch_size = 256;
  std::size_t max_len = 50;
  std::size_t d = 64;
  models::EncoderKind encoder_kind = models::EncoderKind::kMeanPool;
  models::InitKind init = models::InitKind::kNormal;
  std::uint64_t seed = 1;
  std::size_t eval_every = 5;
  // Evaluations without improvement before stopping. 0 returns the initial
  // parameters after the first evaluation.
  std::size_t early_stop_patience = 10;
  std::string eval_metric = "NDCG@10";

  // Throws ConfigError.
  void Validate() const;
  std::size_t effective_epochs() const;

  // Field names match the struct; the loss is stored in its text form.
  nlohmann::json ToJson() const;
  // Missing fields keep their defaults; unknown fields raise ConfigError.
  static TrainConfig FromJson(const nlohmann::json& doc);
  // 16 hex digits identifying the canonical JSON form.
  std::string Hash() const;
};

// Stable 64-bit FNV-1a hash, printed as 16 hex digits.
std::string HashHex(const std::string& text);

// A next-item prediction pair; `history` views the split's storage.
struct Example {
  models::History history;
  data::ItemId target = 0;
};

// For each user's train sequence [v1..vt], the pairs ([v1..vj], v(j+1)) for
// j = 1..t-1, histories cut to the most recent max_len items.
std::vector<Example> MakeTrainingExamples(const data::Split& split,
                                          std::size_t max_len);

// Adam with decoupled weight decay:
//   p -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
class Adam {
 public:
  Adam(std::vector<ad::Parameter*> params, double learning_rate,
       double weight_decay = 0.0, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  // Applies one update from the accumulated param.grad values.
  void Step();
  std::size_t steps() const { return steps_; }

 private:
  std::vector<ad::Parameter*> params_;
  std::vector<ad::Tensor> m_, v_;
  double lr_, wd_, beta1_, beta2_, eps_;
  std::size_t steps_ = 0;
};

// One pass over `examples` in shuffled batches (the order depends only on
// cfg.seed and epoch). Sampled losses draw fresh negatives per example and
// epoch, never the target. Returns the mean per-example loss. Throws
// DivergenceError on a non-finite loss or parameter.
double TrainEpoch(models::Model& model, Adam& optimizer,
                  const std::vector<Example>& examples, const TrainConfig& cfg,
                  std::size_t epoch);

enum class Phase { kVal, kTest };

// Ranks each user's held-out item against the full catalog. Validation
// queries use the train sequence; test queries append the validation item.
metrics::MetricReport Evaluate(const models::Model& model,
                               const data::Split& split, Phase phase,
                               std::vector<std::size_t> ks = {5, 10});

struct EvalRecord {
  std::size_t epoch = 0;
  metrics::MetricReport report;
};

struct RunHistory {
  std::string run_id;
  std::vector<double> epoch_loss;  // entry e is the mean loss of epoch e+1
  std::vector<EvalRecord> evaluations;
  std::size_t best_epoch = 0;
  metrics::MetricReport test;
  bool early_stopped = false;

  nlohmann::json ToJson() const;
};

struct FitResult {
  models::Model model;
  RunHistory history;
};

// Identifies a run by its configuration and data only, so reruns reproduce
// the same id.
std::string MakeRunId(const TrainConfig& cfg, const data::Split& split);

// Evaluates the initial model, trains up to effective_epochs() evaluating
// every eval_every epochs (and after the last one), keeps the parameters with
// the best validation eval_metric (earliest on ties) and reports their test
// metrics. `on_eval` is called after each evaluation when set.
FitResult Fit(const TrainConfig& cfg, const data::Split& split,
              const std::function<void(const EvalRecord&)>& on_eval = {});

// Grid axis: a TrainConfig JSON field name and the values it takes.
using GridAxis = std::pair<std::string, std::vector<nlohmann::json>>;

struct SweepRun {
  TrainConfig config;
  std::vector<nlohmann::json> point;  // one value per axis
  bool ok = false;
  std::string error;
  RunHistory history;
};

// Fits every grid point x seed (grid-major, seeds innermost). Failed fits are
// recorded and the sweep continues. Up to `workers` fits run at once.
std::vector<SweepRun> Sweep(const TrainConfig& base,
                            const std::vector<GridAxis>& grid,
                            const std::vector<std::uint64_t>& seeds,
                            const data::Split& split, std::size_t workers = 1);

// Columns: run_id, loss, <axis names>, seed, best_epoch, then the test
// metric columns. Failed runs leave best_epoch and metrics empty.
void WriteSweepCsv(std::ostream& out, const std::vector<GridAxis>& grid,
                   const std::vector<SweepRun>& runs);

// Worker cap from RANKLAB_THREADS (default 1, at least 1).
std::size_t ThreadsFromEnv();

}  // namespace ranklab::training

#endif  // RANKLAB_TRAINING_H_
