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

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "smofi/data.hpp"
#include "smofi/optim.hpp"
#include "smofi/split.hpp"
#include "smofi/tensor.hpp"

namespace smofi {

enum class Method { smofi, fedavg, sflv1, sflv2 };
enum class SelectionMode { bernoulli, fixed_fraction };

std::string to_string(Method m);
Method method_from_string(const std::string& name);
std::string to_string(SelectionMode m);
SelectionMode selection_mode_from_string(const std::string& name);

struct RoundConfig {
  int rounds = 100;
  int local_epochs = 5;
  int batch_size = 32;
  double selection_rate = 0.2;
  SelectionMode selection_mode = SelectionMode::fixed_fraction;
  double alpha = -0.1;  // staleness exponent
  double beta_g = 0.3;  // global momentum
  Method method = Method::smofi;
  int sflv1_period = 0;  // server-side aggregation period in steps; 0 = round end only
  double fedprox_mu = 0.0;
  bool persist_client_momentum = false;
  Exec exec = Exec::serial;

  void validate() const;
};

struct GlobalState {
  ParamVector params;    // W^n
  ParamVector momentum;  // m_g^n
  int round = 0;

  static GlobalState initial(ParamVector params);
};

struct RoundCohort {
  std::vector<int> clients;  // ascending
  std::vector<int> steps;    // T_j per client, all >= 1
};

// Per-round result of a protocol, before evaluation and latency accounting.
struct RoundOutcome {
  int round = 0;
  std::size_t cohort = 0;
  int max_steps = 0;
  double train_loss = 0.0;  // mean batch loss over every local step
  bool skipped = false;
};

struct RoundResult {
  GlobalState state;
  RoundOutcome outcome;
};

// Emitted after the momentum fusion that follows each SMoFi step.
struct FusionEvent {
  int round = 0;
  int tau = 0;  // steps completed when the fusion runs
  std::size_t active = 0;
  std::size_t history = 0;
  std::size_t cohort = 0;
  // (client, finish_step, staleness weight) per history entry
  struct Stale {
    int client;
    int finish_step;
    double weight;
  };
  std::vector<Stale> staleness;
  const ParamVector* fused = nullptr;
};

// What a client sees for one local step.
struct ClientStepEvent {
  int round = 0;
  int client = 0;
  int step = 0;
  std::span<const std::size_t> batch;
  const Matrix* client_input = nullptr;
  std::size_t cut_grad_rows = 0;
  std::size_t cut_grad_cols = 0;
  const ParamVector* server_params = nullptr;  // surrogate after the step
  const ParamVector* client_params = nullptr;  // client submodel after the step
};

class RoundObserver {
 public:
  virtual ~RoundObserver() = default;
  virtual void on_fusion(const FusionEvent&) {}
  virtual void on_client_step(const ClientStepEvent&) {}
};

// Elementwise sum_j p_j W_j; p must sum to 1 within 1e-12.
ParamVector aggregate_weighted(std::span<const ParamVector> models, std::span<const double> weights,
                               Exec exec = Exec::serial);

// m_g^n = beta_g m_g^{n-1} + W^{n-1} - aggregated; W^n = W^{n-1} - m_g^n.
GlobalState global_momentum_update(const GlobalState& state, const ParamVector& aggregated,
                                   double beta_g);

// mu * (local - anchor)
ParamVector fedprox_penalty_grad(const ParamVector& local, const ParamVector& anchor, double mu);

// Ascending client ids. Bernoulli mode redraws until nonempty.
std::vector<int> select_cohort(int client_count, double theta, SelectionMode mode,
                               std::uint64_t seed);

// Owns everything a round needs besides the global state: model, training
// data, shards and optimiser settings. Round methods are deterministic in
// (state, cohort, round index, seeds) regardless of cfg.exec.
class Federation {
 public:
  Federation(SplitModel model, const Dataset& train, std::vector<Shard> shards, OptimConfig optim,
             RoundConfig round, std::uint64_t batching_seed, std::uint64_t order_seed);

  const SplitModel& model() const { return model_; }
  const Network& network() const { return net_; }
  const std::vector<Shard>& shards() const { return shards_; }
  const OptimConfig& optim() const { return optim_; }
  const RoundConfig& round_config() const { return round_; }

  // Computes T_j for the selected clients and drops those with T_j = 0.
  RoundCohort make_cohort(std::span<const int> selected) const;

  // Batch order of client j in round n.
  BatchSchedule schedule(int client, int round) const;
  // Client visiting order for SFLV2 in round n.
  std::vector<int> sequential_order(const RoundCohort& cohort, int round) const;

  // Runs round state.round + 1 with the configured method.
  RoundResult run_round(const GlobalState& state, const RoundCohort& cohort,
                        RoundObserver* observer = nullptr);

  RoundResult run_smofi_round(const GlobalState& state, const RoundCohort& cohort,
                              RoundObserver* observer = nullptr);
  RoundResult run_fedavg_round(const GlobalState& state, const RoundCohort& cohort,
                               RoundObserver* observer = nullptr);
  RoundResult run_sflv1_round(const GlobalState& state, const RoundCohort& cohort, int period,
                              RoundObserver* observer = nullptr);
  RoundResult run_sflv2_round(const GlobalState& state, const RoundCohort& cohort,
                              RoundObserver* observer = nullptr);

 private:
  struct Worker;

  Worker make_worker(int client, int steps, int round, const GlobalState& state, bool full) const;
  void split_step(Worker& w, const ParamVector& server_prior, int tau, const OptimConfig& cfg,
                  const SubmodelPair& anchor) const;
  void full_step(Worker& w, int tau, const OptimConfig& cfg, const ParamVector& anchor) const;
  RoundResult finish_split_round(const GlobalState& state, const RoundCohort& cohort,
                                 std::vector<Worker>& workers, const ParamVector* server_override);
  RoundResult skipped_round(const GlobalState& state) const;
  void store_client_momentum(std::vector<Worker>& workers);
  std::vector<double> cohort_weights(const RoundCohort& cohort) const;
  void emit_client_step(RoundObserver* observer, int round, const Worker& w, int tau) const;

  SplitModel model_;
  Network net_;
  const Dataset* train_;
  std::vector<Shard> shards_;
  OptimConfig optim_;
  RoundConfig round_;
  std::uint64_t batching_seed_;
  std::uint64_t order_seed_;
  std::map<int, ParamVector> client_momentum_;  // used when persist_client_momentum is set
};

}  // namespace smofi
