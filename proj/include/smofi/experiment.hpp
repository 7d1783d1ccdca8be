// Copyright 2026 The smofi-sim Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "smofi/data.hpp"
#include "smofi/optim.hpp"
#include "smofi/protocols.hpp"
#include "smofi/split.hpp"
#include "smofi/system_model.hpp"

namespace smofi {

struct DatasetConfig {
  std::string kind = "blobs";  // blobs | csv
  int classes = 10;
  int dims = 16;
  int per_class = 200;
  int test_per_class = 50;
  double spread = 1.0;
  double separation = 1.0;
  std::string train_csv;
  std::string test_csv;
};

struct TargetConfig {
  enum class Mode { absolute, baseline };
  Mode mode = Mode::baseline;
  double value = 0.9;  // accuracy (absolute) or fraction of the baseline's best (baseline)
  Method baseline_method = Method::fedavg;
};

// Independent seed streams, so one source of randomness can vary at a time.
struct Seeds {
  std::uint64_t data = 1;
  std::uint64_t init = 2;
  std::uint64_t selection = 3;
  std::uint64_t batching = 4;
  std::uint64_t profiles = 5;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string notes;  // free text, ignored by the simulator
  std::vector<LayerSpec> layers;
  std::size_t cut = 1;
  std::vector<std::uint64_t> macs;    // optional profile override
  std::vector<double> activation_kb;  // optional profile override
  DatasetConfig dataset;
  int clients = 20;
  double gamma = 0.2;
  RoundConfig round;
  OptimConfig optim;
  LatencyRanges latency;
  double kappa = 100.0;
  std::string profiles_csv;
  Seeds seeds;
  TargetConfig target;
  int threads = 0;  // 0 = OpenMP default

  SplitModel split_model() const;
  void validate() const;
};

// Throws ConfigError whose message starts with the offending field path.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

// Hash of everything except the method-specific knobs; runs that share it are
// comparable.
std::string config_fingerprint(const ExperimentConfig& cfg);

struct RoundRecord {
  int round = 0;
  double accuracy = 0.0;
  double train_loss = 0.0;
  double device_s = 0.0;
  double server_s = 0.0;
  double comm_s = 0.0;
  double round_time_s = 0.0;
  double cum_time_s = 0.0;
  std::size_t cohort = 0;
  int max_steps = 0;
  double js_mean = 0.0;
};

struct RunSummary {
  std::string name;
  std::string method;
  std::string fingerprint;
  int rounds = 0;
  double initial_accuracy = 0.0;
  double best_accuracy = 0.0;
  double final_accuracy = 0.0;
  double total_time_s = 0.0;
  std::optional<double> target_accuracy;
  std::optional<int> rounds_to_target;
  std::optional<double> time_to_target_s;
  // Present when a baseline run defined the target.
  std::optional<std::string> baseline_method;
  std::optional<int> baseline_rounds_to_target;
  std::optional<double> baseline_time_to_target_s;
};

struct RunResult {
  std::vector<RoundRecord> records;
  RunSummary summary;
};

// Everything an experiment needs, built from the config's seed streams.
struct ExperimentSetup {
  Dataset train;
  Dataset test;
  std::vector<Shard> shards;
  std::vector<ClientProfile> profiles;
  ServerProfile server;
  SplitModel model;
};
ExperimentSetup build_setup(const ExperimentConfig& cfg);

// Runs cfg.round.rounds rounds of cfg.round.method. With an absolute target
// the summary carries R and T; otherwise those stay empty.
RunResult run_experiment(const ExperimentConfig& cfg);
// Resolves the target (running the baseline method first in baseline mode)
// and fills R, T and the baseline's R and T.
RunResult run_with_target(const ExperimentConfig& cfg);

std::optional<int> rounds_to_accuracy(std::span<const RoundRecord> records, double target);
std::optional<double> time_to_accuracy(std::span<const RoundRecord> records, double target);
void apply_target(RunSummary& summary, std::span<const RoundRecord> records, double target);

// "4.61×", or "—" when either side never reached the target.
std::string format_speedup(std::optional<double> baseline, std::optional<double> method);

// Table of R, T and speedups of each run against the first one.
std::string compare(std::span<const RunSummary> runs);

nlohmann::json to_json(const RunSummary& s);
RunSummary summary_from_json(const nlohmann::json& j);

enum class OutputFormat { csv, jsonl };

// Writes rounds.csv or rounds.jsonl plus summary.json into `dir`.
void emit(std::span<const RoundRecord> records, const RunSummary& summary,
          const std::filesystem::path& dir, OutputFormat format);
// round,accuracy,cum_time_s,cohort,js_mean
std::string records_csv(std::span<const RoundRecord> records);
std::string records_jsonl(std::span<const RoundRecord> records);

}  // namespace smofi
