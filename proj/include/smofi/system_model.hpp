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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "smofi/split.hpp"

namespace smofi {

struct ClientProfile {
  double p_d = 0.01;             // on-device inference speed, s/frame
  double bandwidth_kbps = 5000;  // b
};

struct ServerProfile {
  double kappa = 100.0;
  double p_s = 0.0;  // mean client p_d / kappa

  static ServerProfile from_clients(std::span<const ClientProfile> clients, double kappa);
};

// Stand-in sampling ranges (log-uniform).
struct LatencyRanges {
  double p_d_min = 0.001;
  double p_d_max = 0.1;
  double b_min_kbps = 1000.0;
  double b_max_kbps = 20000.0;

  void validate() const;
};

std::vector<ClientProfile> sample_profiles(int client_count, std::uint64_t seed,
                                           const LatencyRanges& ranges = {});

struct BatchLatency {
  double device_s = 0.0;
  double server_s = 0.0;
  double comm_s = 0.0;
  double total_s = 0.0;
};

// t_d = 3 B p_d O, t_s = 3 B p_s (1 - O), t_comm = 2 B S / b.
BatchLatency batch_latency(const ClientProfile& client, const ServerProfile& server,
                           double compute_ratio, double activation_kb, int batch_size);
BatchLatency batch_latency(const ClientProfile& client, const ServerProfile& server,
                           const SplitModel& model, int batch_size);

// Per-client time for one round.
struct ClientRoundLatency {
  int client = 0;
  double device_s = 0.0;
  double server_s = 0.0;
  double comm_s = 0.0;

  double total_s() const { return device_s + server_s + comm_s; }
};

// Split training: T_j batches executed back to back.
ClientRoundLatency split_round_latency(int client, const ClientProfile& profile,
                                       const ServerProfile& server, const SplitModel& model,
                                       int batch_size, int steps);
// Unsplit training: all compute on the device plus one full-model download
// and upload per round.
ClientRoundLatency fedavg_round_latency(int client, const ClientProfile& profile,
                                        const SplitModel& model, int batch_size, int steps);

enum class Composition { parallel, sequential };

struct RoundLatency {
  double device_s = 0.0;
  double server_s = 0.0;
  double comm_s = 0.0;
  double total_s = 0.0;
};

// Parallel: the slowest client sets the round time (its components are
// reported). Sequential: client times add up.
RoundLatency round_latency(std::span<const ClientRoundLatency> clients, Composition composition);

// client_id,p_d_s_per_frame,b_kbps
void write_profiles_csv(std::span<const ClientProfile> profiles, std::ostream& out);
std::vector<ClientProfile> read_profiles_csv(std::istream& in);
std::vector<ClientProfile> read_profiles_csv(const std::string& path);

}  // namespace smofi
