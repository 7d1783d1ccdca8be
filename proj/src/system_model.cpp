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

#include "smofi/system_model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "smofi/error.hpp"
#include "smofi/rng.hpp"

namespace smofi {

ServerProfile ServerProfile::from_clients(std::span<const ClientProfile> clients, double kappa) {
  if (clients.empty()) throw ConfigError("latency: no client profiles");
  if (!(kappa > 0.0)) throw ConfigError("latency.kappa: must be > 0");
  double sum = 0.0;
  for (const auto& c : clients) sum += c.p_d;
  return {kappa, sum / (kappa * static_cast<double>(clients.size()))};
}

void LatencyRanges::validate() const {
  if (!(p_d_min > 0.0) || !(p_d_max >= p_d_min))
    throw ConfigError("latency.p_d: need 0 < min <= max");
  if (!(b_min_kbps > 0.0) || !(b_max_kbps >= b_min_kbps))
    throw ConfigError("latency.bandwidth_kbps: need 0 < min <= max");
}

namespace {
double log_uniform(Rng& rng, double lo, double hi) {
  if (lo == hi) return lo;
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}
}  // namespace

std::vector<ClientProfile> sample_profiles(int client_count, std::uint64_t seed,
                                           const LatencyRanges& ranges) {
  ranges.validate();
  if (client_count < 1) throw ConfigError("latency: client count must be >= 1");
  Rng rng(seed);
  std::vector<ClientProfile> out(static_cast<std::size_t>(client_count));
  for (auto& p : out) {
    p.p_d = log_uniform(rng, ranges.p_d_min, ranges.p_d_max);
    p.bandwidth_kbps = log_uniform(rng, ranges.b_min_kbps, ranges.b_max_kbps);
  }
  return out;
}

BatchLatency batch_latency(const ClientProfile& client, const ServerProfile& server,
                           double compute_ratio, double activation_kb, int batch_size) {
  const double b = batch_size;
  BatchLatency t;
  t.device_s = 3.0 * b * client.p_d * compute_ratio;
  t.server_s = 3.0 * b * server.p_s * (1.0 - compute_ratio);
  t.comm_s = 2.0 * b * activation_kb / client.bandwidth_kbps;
  t.total_s = t.device_s + t.server_s + t.comm_s;
  return t;
}

BatchLatency batch_latency(const ClientProfile& client, const ServerProfile& server,
                           const SplitModel& model, int batch_size) {
  return batch_latency(client, server, compute_ratio(model), activation_size(model), batch_size);
}

ClientRoundLatency split_round_latency(int client, const ClientProfile& profile,
                                       const ServerProfile& server, const SplitModel& model,
                                       int batch_size, int steps) {
  const auto t = batch_latency(profile, server, model, batch_size);
  return {client, steps * t.device_s, steps * t.server_s, steps * t.comm_s};
}

ClientRoundLatency fedavg_round_latency(int client, const ClientProfile& profile,
                                        const SplitModel& model, int batch_size, int steps) {
  const double model_kb = static_cast<double>(model.param_count()) * kBytesPerValue / 1024.0;
  const double device = 3.0 * batch_size * profile.p_d;  // O = 1
  return {client, steps * device, 0.0, 2.0 * model_kb / profile.bandwidth_kbps};
}

RoundLatency round_latency(std::span<const ClientRoundLatency> clients, Composition composition) {
  RoundLatency r;
  if (clients.empty()) return r;
  if (composition == Composition::sequential) {
    for (const auto& c : clients) {
      r.device_s += c.device_s;
      r.server_s += c.server_s;
      r.comm_s += c.comm_s;
      r.total_s += c.total_s();
    }
    return r;
  }
  const ClientRoundLatency* slowest = &clients.front();
  for (const auto& c : clients)
    if (c.total_s() > slowest->total_s()) slowest = &c;
  r.device_s = slowest->device_s;
  r.server_s = slowest->server_s;
  r.comm_s = slowest->comm_s;
  r.total_s = slowest->total_s();
  return r;
}

void write_profiles_csv(std::span<const ClientProfile> profiles, std::ostream& out) {
  out << "client_id,p_d_s_per_frame,b_kbps\n";
  char buf[64];
  for (std::size_t j = 0; j < profiles.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", profiles[j].p_d, profiles[j].bandwidth_kbps);
    out << j << ',' << buf << '\n';
  }
}

std::vector<ClientProfile> read_profiles_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "client_id,p_d_s_per_frame,b_kbps")
    throw ConfigError("profiles: header must be client_id,p_d_s_per_frame,b_kbps");
  std::vector<ClientProfile> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, pd, b;
    if (!std::getline(ss, id, ',') || !std::getline(ss, pd, ',') || !std::getline(ss, b))
      throw ConfigError("profiles: malformed line " + std::to_string(line_no));
    ClientProfile p;
    try {
      if (std::stoul(id) != out.size())
        throw ConfigError("profiles: client ids must be 0..n-1 in order (line " +
                          std::to_string(line_no) + ")");
      p.p_d = std::stod(pd);
      p.bandwidth_kbps = std::stod(b);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("profiles: bad number on line " + std::to_string(line_no));
    }
    if (!(p.p_d > 0.0) || !(p.bandwidth_kbps > 0.0))
      throw ConfigError("profiles: values must be positive (line " + std::to_string(line_no) + ")");
    out.push_back(p);
  }
  return out;
}

std::vector<ClientProfile> read_profiles_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("profiles: cannot open '" + path + "'");
  return read_profiles_csv(in);
}

}  // namespace smofi
