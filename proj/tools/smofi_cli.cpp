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

// smofi-sim: run split-FL experiments, compare runs, inspect partitions.

#include <omp.h>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "smofi/error.hpp"
#include "smofi/experiment.hpp"

namespace {

struct SeedFlags {
  std::optional<std::uint64_t> data, init, selection, batching, profiles;

  void add(CLI::App* cmd) {
    cmd->add_option("--seed-data", data, "Seed for dataset synthesis and partitioning");
    cmd->add_option("--seed-init", init, "Seed for model initialisation");
    cmd->add_option("--seed-selection", selection, "Seed for client selection and SFLV2 order");
    cmd->add_option("--seed-batching", batching, "Seed for minibatch order");
    cmd->add_option("--seed-profiles", profiles, "Seed for device/bandwidth profiles");
  }
  void apply(smofi::Seeds& s) const {
    if (data) s.data = *data;
    if (init) s.init = *init;
    if (selection) s.selection = *selection;
    if (batching) s.batching = *batching;
    if (profiles) s.profiles = *profiles;
  }
};

int cmd_run(const std::string& config_path, const SeedFlags& seeds, const std::string& method,
            int threads, bool parallel, const std::string& out_dir, const std::string& format) {
  auto cfg = smofi::load_config(config_path);
  seeds.apply(cfg.seeds);
  if (!method.empty()) cfg.round.method = smofi::method_from_string(method);
  if (threads > 0) cfg.threads = threads;
  if (parallel) cfg.round.exec = smofi::Exec::parallel;
  cfg.validate();
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);

  const auto result = smofi::run_with_target(cfg);
  const auto fmt = format == "jsonl" ? smofi::OutputFormat::jsonl : smofi::OutputFormat::csv;
  smofi::emit(result.records, result.summary, out_dir, fmt);

  const auto& s = result.summary;
  std::cout << s.name << " [" << s.method << "] rounds=" << s.rounds
            << " best_acc=" << s.best_accuracy << " final_acc=" << s.final_accuracy;
  if (s.target_accuracy) {
    std::cout << " target=" << *s.target_accuracy << " R="
              << (s.rounds_to_target ? std::to_string(*s.rounds_to_target) : "—");
  }
  std::cout << "\nwrote " << out_dir << "\n";
  return 0;
}

int cmd_compare(const std::vector<std::string>& paths) {
  std::vector<smofi::RunSummary> runs;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw smofi::UsageError("compare: cannot open '" + p + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw smofi::UsageError("compare: '" + p + "': " + e.what());
    }
    runs.push_back(smofi::summary_from_json(j));
  }
  std::cout << smofi::compare(runs);
  return 0;
}

int cmd_partition_report(const std::string& config_path, const SeedFlags& seeds,
                         const std::string& out_path) {
  auto cfg = smofi::load_config(config_path);
  seeds.apply(cfg.seeds);
  const auto setup = smofi::build_setup(cfg);
  if (out_path.empty()) {
    smofi::write_histograms_csv(setup.train, setup.shards, std::cout);
    return 0;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
  smofi::write_histograms_csv(setup.train, setup.shards, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Split federated learning simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run one experiment");
  std::string config, out_dir = "out", format = "csv", method;
  int threads = 0;
  bool parallel = false;
  SeedFlags run_seeds;
  run->add_option("--config", config, "Experiment config (JSON)")->required();
  run_seeds.add(run);
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--format", format, "Per-round output format")->check(CLI::IsMember({"csv", "jsonl"}));
  run->add_option("--method", method, "Override training.method")
      ->check(CLI::IsMember({"smofi", "fedavg", "sflv1", "sflv2"}));
  run->add_option("--threads", threads, "OpenMP threads (0 = default)")->check(CLI::NonNegativeNumber);
  run->add_flag("--parallel", parallel, "Execute client steps in parallel");

  auto* cmp = app.add_subcommand("compare", "Tabulate R, T and speedups against the first run");
  std::vector<std::string> runs;
  cmp->add_option("--runs", runs, "summary.json files, baseline first")->required()->expected(1, -1);

  auto* rep = app.add_subcommand("partition-report", "Per-client class histograms and J-S divergence");
  std::string rep_config, rep_out;
  SeedFlags rep_seeds;
  rep->add_option("--config", rep_config, "Experiment config (JSON)")->required();
  rep_seeds.add(rep);
  rep->add_option("--out", rep_out, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(config, run_seeds, method, threads, parallel, out_dir, format);
    if (*cmp) return cmd_compare(runs);
    if (*rep) return cmd_partition_report(rep_config, rep_seeds, rep_out);
  } catch (const smofi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const smofi::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const smofi::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
