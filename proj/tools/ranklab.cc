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

// Command-line front end: data preparation, training, evaluation, sweeps,
// bound tables, bound verification and the complexity benchmark.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ranklab/bench.h"
#include "ranklab/bounds.h"
#include "ranklab/datasets.h"
#include "ranklab/errors.h"
#include "ranklab/metrics.h"
#include "ranklab/models.h"
#include "ranklab/training.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ranklab::cli {
namespace {

constexpr char kVersion[] = "0.1.0";

enum ExitCode { kOk = 0, kOther = 1, kInput = 2, kDivergence = 3, kIncompatible = 4 };

fs::path EnsureDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ArgumentError("cannot create output directory '" + dir + "'");
  return fs::path(dir);
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArgumentError("cannot write '" + path.string() + "'");
  out << text;
}

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("'" + path + "' is not valid JSON: " + e.what(), 0);
  }
}

std::string InvocationId() {
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  return std::to_string(
             std::chrono::duration_cast<std::chrono::microseconds>(now).count()) +
         "-" + std::to_string(::getpid());
}

std::string UtcNow() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Everything except invocation_id and created_at is a function of the
// command's inputs.
void WriteManifest(const fs::path& dir, const std::string& command,
                   const std::string& run_id, const std::string& config_hash,
                   const std::vector<std::string>& inputs,
                   const std::vector<std::string>& outputs, std::uint64_t seed) {
  const json manifest = {{"run_id", run_id},
                         {"command", command},
                         {"config_hash", config_hash},
                         {"inputs", inputs},
                         {"outputs", outputs},
                         {"tool_version", kVersion},
                         {"seed", seed},
                         {"invocation_id", InvocationId()},
                         {"created_at", UtcNow()}};
  WriteText(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// --- prep -----------------------------------------------------------------

struct PrepArgs {
  std::string input;
  std::string synth;
  int k_core = 5;
  std::string out;
};

int RunPrep(const PrepArgs& a) {
  if (a.input.empty() == a.synth.empty()) {
    throw ArgumentError("give exactly one of --input or --synth");
  }
  data::InteractionLog log;
  std::string source;
  if (!a.input.empty()) {
    log = data::KCoreFilter(data::LoadTsv(a.input), a.k_core);
    source = a.input;
  } else {
    const data::SynthConfig sc = data::ParseSynthSpec(a.synth);
    log = data::KCoreFilter(data::ToRawInteractions(data::SynthGenerate(sc)),
                            a.k_core);
    source = "synth:" + a.synth;
  }
  const fs::path dir = EnsureDir(a.out);
  data::SaveDataset(dir / "dataset.json", log);
  const json stats = data::ToJson(data::ComputeStats(log));
  WriteText(dir / "stats.json", stats.dump(2) + "\n");
  const std::string run_id =
      training::HashHex("prep|" + source + "|" + std::to_string(a.k_core));
  WriteManifest(dir, "prep", run_id, run_id, {source},
                {"dataset.json", "stats.json"}, 0);
  std::cout << stats.dump(2) << "\n";
  return kOk;
}

// --- train / eval -----------------------------------------------------------

data::Split LoadSplit(const std::string& path) {
  return data::LeaveOneOutSplit(data::LoadDataset(path));
}

struct TrainArgs {
  std::string data;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int RunTrain(const TrainArgs& a) {
  training::TrainConfig cfg = training::TrainConfig::FromJson(ReadJsonFile(a.config));
  if (a.seed) cfg.seed = *a.seed;
  const data::Split split = LoadSplit(a.data);
  const fs::path dir = EnsureDir(a.out);
  const training::FitResult fit = training::Fit(
      cfg, split, [](const training::EvalRecord& r) {
        std::cerr << "epoch " << r.epoch << " val "
                  << metrics::FormatDouble(r.report.Get("NDCG@10")) << "\n";
      });
  const std::string& run_id = fit.history.run_id;
  fit.model.Save((dir / "model.ckpt").string(),
                 {{"config", cfg.ToJson()}, {"config_hash", cfg.Hash()}, {"run_id", run_id}});
  WriteText(dir / "history.json", fit.history.ToJson().dump(2) + "\n");
  WriteText(dir / "config.json", cfg.ToJson().dump(2) + "\n");
  const std::string csv = metrics::CsvHeader(fit.history.test) + "\n" +
                          metrics::CsvRow(run_id, cfg.loss.ToString(), cfg.seed,
                                          fit.history.test) +
                          "\n";
  WriteText(dir / "metrics.csv", csv);
  WriteManifest(dir, "train", run_id, cfg.Hash(), {a.data, a.config},
                {"model.ckpt", "history.json", "config.json", "metrics.csv"}, cfg.seed);
  std::cout << csv;
  return kOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string phase = "test";
  std::string out;
};

int RunEval(const EvalArgs& a) {
  json meta;
  const models::Model model = models::Model::Load(a.checkpoint, &meta);
  const data::Split split = LoadSplit(a.data);
  if (split.item_count != model.item_count()) {
    throw IncompatibleError("checkpoint has " + std::to_string(model.item_count()) +
                            " items but the dataset has " +
                            std::to_string(split.item_count));
  }
  training::Phase phase;
  if (a.phase == "test") {
    phase = training::Phase::kTest;
  } else if (a.phase == "val") {
    phase = training::Phase::kVal;
  } else {
    throw ArgumentError("--phase must be val or test");
  }
  const metrics::MetricReport report = training::Evaluate(model, split, phase);
  const std::string loss = meta.contains("config") ? meta["config"].value("loss", "") : "";
  const std::string run_id = meta.value("run_id", "");
  const std::string csv = metrics::CsvHeader(report) + "\n" +
                          metrics::CsvRow(run_id, loss, model.config().seed, report) +
                          "\n";
  if (!a.out.empty()) WriteText(a.out, csv);
  std::cout << csv;
  return kOk;
}

// --- sweep -----------------------------------------------------------------

struct SweepArgs {
  std::string data;
  std::string config;
  std::string grid;
  std::string seeds = "1";
  std::string out;
};

int RunSweep(const SweepArgs& a) {
  const training::TrainConfig base =
      training::TrainConfig::FromJson(ReadJsonFile(a.config));
  nlohmann::ordered_json grid_doc;
  try {
    if (!a.grid.empty() && a.grid.front() == '{') {
      grid_doc = nlohmann::ordered_json::parse(a.grid);
    } else {
      std::ifstream in(a.grid);
      if (!in) throw ArgumentError("cannot read grid '" + a.grid + "'");
      grid_doc = nlohmann::ordered_json::parse(in);
    }
  } catch (const nlohmann::ordered_json::exception& e) {
    throw ConfigError(std::string("bad grid: ") + e.what());
  }
  if (!grid_doc.is_object()) throw ConfigError("grid must be a JSON object");
  std::vector<training::GridAxis> grid;
  for (const auto& [key, values] : grid_doc.items()) {
    if (!values.is_array()) throw ConfigError("grid axis '" + key + "' is not a list");
    std::vector<json> vs;
    for (const auto& v : values) vs.push_back(json::parse(v.dump()));
    grid.emplace_back(key, std::move(vs));
  }
  std::vector<std::uint64_t> seeds;
  for (const std::string& s : SplitList(a.seeds)) {
    try {
      seeds.push_back(std::stoull(s));
    } catch (const std::exception&) {
      throw ArgumentError("bad seed '" + s + "'");
    }
  }
  const data::Split split = LoadSplit(a.data);
  const auto runs =
      training::Sweep(base, grid, seeds, split, training::ThreadsFromEnv());
  const fs::path dir = EnsureDir(a.out);
  std::ostringstream csv;
  training::WriteSweepCsv(csv, grid, runs);
  WriteText(dir / "sweep.csv", csv.str());
  std::size_t failed = 0;
  for (const auto& r : runs) {
    if (!r.ok) {
      ++failed;
      std::cerr << "run (seed " << r.config.seed << ") failed: " << r.error << "\n";
    }
  }
  const std::string run_id =
      training::HashHex("sweep|" + base.Hash() + "|" + grid_doc.dump() + "|" + a.seeds);
  WriteManifest(dir, "sweep", run_id, base.Hash(), {a.data, a.config}, {"sweep.csv"},
                seeds.front());
  std::cout << csv.str();
  std::cerr << runs.size() - failed << " of " << runs.size() << " runs completed\n";
  return kOk;
}

// --- bounds / verify ---------------------------------------------------------

std::vector<std::size_t> ParseSizes(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  for (const std::string& s : SplitList(text)) {
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(s, &pos);
      if (pos != s.size() || v == 0) throw std::invalid_argument(s);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ArgumentError(std::string("bad ") + what + " value '" + s + "'");
    }
  }
  if (out.empty()) throw ArgumentError(std::string("empty ") + what + " list");
  return out;
}

struct BoundsArgs {
  std::size_t catalog_size = 12101;
  std::string alphas;
  std::string metric = "ndcg";
  std::string ranks;
  std::string ks;
  std::string out;
};

int RunBounds(const BoundsArgs& a) {
  std::vector<double> alphas;
  for (const std::string& s : SplitList(a.alphas)) {
    try {
      std::size_t pos = 0;
      alphas.push_back(std::stod(s, &pos));
      if (pos != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw ArgumentError("bad alpha '" + s + "'");
    }
  }
  if (alphas.empty()) throw ArgumentError("--alpha needs at least one value");
  bounds::BoundMetric metric;
  if (a.metric == "ndcg") {
    metric = bounds::BoundMetric::kNdcg;
  } else if (a.metric == "mrr") {
    metric = bounds::BoundMetric::kMrr;
  } else {
    throw ArgumentError("--metric must be ndcg or mrr");
  }
  const auto ranks = a.ranks.empty() ? bounds::DefaultGridAxis() : ParseSizes(a.ranks, "rank");
  const auto ks = a.ks.empty() ? bounds::DefaultGridAxis() : ParseSizes(a.ks, "K");
  const fs::path dir = EnsureDir(a.out);
  std::vector<std::string> outputs;
  for (double alpha : alphas) {
    const auto grid = bounds::BoundGrid(a.catalog_size, alpha, ranks, ks, metric);
    std::ostringstream csv;
    bounds::WriteGridCsv(csv, ranks, ks, grid);
    const std::string name =
        "grid_" + a.metric + "_alpha" + metrics::FormatDouble(alpha) + ".csv";
    WriteText(dir / name, csv.str());
    outputs.push_back(name);
    std::cout << "# alpha=" << metrics::FormatDouble(alpha) << "\n" << csv.str();
  }
  const std::string run_id = training::HashHex(
      "bounds|" + std::to_string(a.catalog_size) + "|" + a.alphas + "|" + a.metric +
      "|" + a.ranks + "|" + a.ks);
  WriteManifest(dir, "bounds", run_id, run_id, {}, outputs, 0);
  return kOk;
}

struct VerifyArgs {
  std::string battery = "default";
  std::size_t trials = 100000;
  std::uint64_t seed = 1;
  std::string out;
  bool corrupt_bound = false;
};

int RunVerify(const VerifyArgs& a) {
  if (a.trials < 1000) throw ArgumentError("--trials must be at least 1000");
  bounds::VerifyConfig cfg;
  cfg.trials = a.trials;
  cfg.seed = a.seed;
  cfg.corrupt_bound = a.corrupt_bound;
  if (a.battery != "default") cfg.cells = bounds::BatteryFromJson(ReadJsonFile(a.battery));
  const json report = bounds::RunVerification(cfg);
  const std::string text = report.dump(2) + "\n";
  fs::path out_path;
  if (!a.out.empty()) {
    out_path = fs::path(a.out);
    if (out_path.has_parent_path()) EnsureDir(out_path.parent_path().string());
    WriteText(out_path, text);
  } else {
    std::cout << text;
  }
  const bool passed = report["all_passed"].get<bool>();
  std::cerr << (passed ? "all checks passed" : "verification FAILED") << "\n";
  return passed ? kOk : kOther;
}

// --- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string sizes = "500000,1000000";
  std::size_t d = 64;
  std::string ks = "100";
  std::size_t reps = 5;
  std::string out;
};

int RunBench(const BenchArgs& a) {
  bench::BenchConfig cfg;
  cfg.catalog_sizes = ParseSizes(a.sizes, "catalog size");
  cfg.ks = ParseSizes(a.ks, "K");
  cfg.d = a.d;
  cfg.reps = a.reps;
  const auto rows = bench::RunBench(cfg);
  std::ostringstream csv;
  bench::WriteBenchCsv(csv, rows);
  if (!a.out.empty()) WriteText(a.out, csv.str());
  std::cout << csv.str();
  return kOk;
}

int Main(int argc, char** argv) {
  CLI::App app{"ranklab: sampled softmax losses for sequential recommendation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  PrepArgs prep;
  auto* p = app.add_subcommand("prep", "Filter and store a dataset");
  p->add_option("--input", prep.input, "user<TAB>item<TAB>timestamp file");
  p->add_option("--synth", prep.synth, "synthetic spec, e.g. users=2000,items=500,seed=1");
  p->add_option("--k-core", prep.k_core, "minimum interactions per user and item")
      ->check(CLI::PositiveNumber);
  p->add_option("--out", prep.out, "output directory")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Fit a model and write its checkpoint");
  t->add_option("--data", train.data, "dataset.json from prep")->required();
  t->add_option("--config", train.config, "training config JSON")->required();
  t->add_option("--out", train.out, "output directory")->required();
  t->add_option("--seed", train.seed, "override the config seed");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint");
  e->add_option("--checkpoint", eval.checkpoint, "model.ckpt")->required();
  e->add_option("--data", eval.data, "dataset.json")->required();
  e->add_option("--phase", eval.phase, "val or test");
  e->add_option("--out", eval.out, "CSV output path");

  SweepArgs sweep;
  auto* s = app.add_subcommand("sweep", "Fit every grid point and seed");
  s->add_option("--data", sweep.data, "dataset.json")->required();
  s->add_option("--config", sweep.config, "base training config JSON")->required();
  s->add_option("--grid", sweep.grid, "JSON object (inline or file) of field -> values")
      ->required();
  s->add_option("--seeds", sweep.seeds, "comma-separated seeds");
  s->add_option("--out", sweep.out, "output directory")->required();

  BoundsArgs bnd;
  auto* b = app.add_subcommand("bounds", "Write bounding-probability grids");
  b->add_option("--catalog-size", bnd.catalog_size, "catalog size")
      ->check(CLI::PositiveNumber);
  b->add_option("--alpha", bnd.alphas, "comma-separated alpha values")->required();
  b->add_option("--metric", bnd.metric, "ndcg or mrr");
  b->add_option("--ranks", bnd.ranks, "comma-separated ranks (default 1..1000)");
  b->add_option("--K", bnd.ks, "comma-separated K values (default 1..1000)");
  b->add_option("--out", bnd.out, "output directory")->required();

  VerifyArgs ver;
  auto* v = app.add_subcommand("verify", "Run the bound verification battery");
  v->add_option("--battery", ver.battery, "default or a JSON cell list");
  v->add_option("--trials", ver.trials, "Monte Carlo trials per cell");
  v->add_option("--seed", ver.seed, "seed");
  v->add_option("--out", ver.out, "JSON report path");
  // Negative control used by the test harness.
  v->add_flag("--corrupt-bound", ver.corrupt_bound)->group("");

  BenchArgs bn;
  auto* c = app.add_subcommand("bench", "Time full versus sampled loss");
  c->add_option("--catalog-sizes", bn.sizes, "comma-separated catalog sizes");
  c->add_option("--d", bn.d, "embedding width")->check(CLI::PositiveNumber);
  c->add_option("--K", bn.ks, "comma-separated K values");
  c->add_option("--reps", bn.reps, "timed full-catalog examples")
      ->check(CLI::PositiveNumber);
  c->add_option("--out", bn.out, "CSV output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& ok) {
    return app.exit(ok);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kInput;
  }

  try {
    if (*p) return RunPrep(prep);
    if (*t) return RunTrain(train);
    if (*e) return RunEval(eval);
    if (*s) return RunSweep(sweep);
    if (*b) return RunBounds(bnd);
    if (*v) return RunVerify(ver);
    if (*c) return RunBench(bn);
  } catch (const DivergenceError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kDivergence;
  } catch (const IncompatibleError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kIncompatible;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kInput;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kOther;
  }
  return kOther;
}

}  // namespace
}  // namespace ranklab::cli

int main(int argc, char** argv) { return ranklab::cli::Main(argc, argv); }
