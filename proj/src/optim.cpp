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

#include "smofi/optim.hpp"

#include <algorithm>
#include <cmath>

#include "smofi/error.hpp"
#include "smofi/kernels.hpp"

namespace smofi {

void OptimConfig::validate() const {
  if (!(eta > 0.0)) throw ConfigError("optim.eta: must be > 0");
  if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("optim.beta: must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("optim.weight_decay: must be >= 0");
  if (!(lr_decay_per_round > 0.0 && lr_decay_per_round <= 1.0))
    throw ConfigError("optim.lr_decay_per_round: must be in (0, 1]");
  if (schedule == LrSchedule::inverse && !(lr_shift > 0.0))
    throw ConfigError("optim.lr_shift: must be > 0");
}

double OptimConfig::lr_for_round(int round) const {
  const int k = std::max(round, 1) - 1;
  if (schedule == LrSchedule::inverse) return eta * lr_shift / (lr_shift + k);
  return eta * std::pow(lr_decay_per_round, k);
}

std::string to_string(OptimVariant v) { return v == OptimVariant::nag ? "nag" : "sgdm"; }

void momentum_update(ParamVector& params, ParamVector& buffer, const ParamVector& grads,
                     const OptimConfig& cfg) {
  require_same_shape(params, grads, "momentum_update(grads)");
  require_same_shape(params, buffer, "momentum_update(buffer)");
  auto p = params.values();
  auto m = buffer.values();
  auto g = grads.values();
  const double beta = cfg.beta;
  const double eta = cfg.eta;
  const double wd = cfg.weight_decay;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double d = g[i];
    if (wd != 0.0) d += wd * p[i];
    m[i] = beta * m[i] + d;
    p[i] -= eta * m[i];
  }
}

StepResult sgdm_step(const ParamVector& params, const ParamVector& grads,
                     const MomentumBuffer& buffer_in, const OptimConfig& cfg) {
  StepResult out{params, buffer_in};
  momentum_update(out.params, out.buffer.values, grads, cfg);
  out.buffer.step_created = buffer_in.step_created + 1;
  return out;
}

StepResult aligned_sgdm_step(const ParamVector& params, const ParamVector& grads,
                             const MomentumBuffer& aligned_buffer, const OptimConfig& cfg) {
  return sgdm_step(params, grads, aligned_buffer, cfg);
}

ParamVector nag_lookahead(const ParamVector& params, const ParamVector& buffer,
                          const OptimConfig& cfg) {
  ParamVector ahead = params;
  ahead.axpy(-cfg.eta * cfg.beta, buffer);
  return ahead;
}

StepResult nag_step(const ParamVector& params, const ParamVector& grads_at_lookahead,
                    const MomentumBuffer& buffer_in, const OptimConfig& cfg) {
  // With gradients taken at the lookahead point the recurrence is the same
  // as heavy-ball momentum.
  return sgdm_step(params, grads_at_lookahead, buffer_in, cfg);
}

double staleness(int tau, int finish_step, double alpha) {
  if (tau < finish_step)
    throw UsageError("staleness: step " + std::to_string(tau) + " precedes finish step " +
                     std::to_string(finish_step));
  if (!(alpha < 0.0)) throw UsageError("staleness: alpha must be negative");
  return std::pow(static_cast<double>(tau - finish_step + 1), alpha);
}

void fuse_terms(std::vector<FusionTerm> terms, ParamVector& out, Exec exec) {
  if (terms.empty()) throw UsageError("fuse_momentum: no buffers to fuse");
  for (const auto& t : terms) require_same_shape(*t.values, out, "fuse_momentum");
  std::stable_sort(terms.begin(), terms.end(),
                   [](const FusionTerm& a, const FusionTerm& b) { return a.owner < b.owner; });
  std::vector<std::span<const double>> inputs;
  std::vector<double> weights;
  inputs.reserve(terms.size());
  weights.reserve(terms.size());
  for (const auto& t : terms) {
    inputs.push_back(t.values->values());
    weights.push_back(t.weight);
  }
  if (exec == Exec::parallel)
    kernels::running_mean_omp(inputs, weights, out.values());
  else
    kernels::running_mean_serial(inputs, weights, out.values());
}

MomentumBuffer fuse_momentum(std::span<const MomentumBuffer> active,
                             std::span<const HistoryEntry> history, int tau, double alpha,
                             Exec exec) {
  if (active.empty() && history.empty()) throw UsageError("fuse_momentum: no buffers to fuse");
  std::vector<FusionTerm> terms;
  terms.reserve(active.size() + history.size());
  for (const auto& m : active) terms.push_back({m.owner, 1.0, &m.values});
  for (const auto& h : history)
    terms.push_back({h.buffer.owner, staleness(tau, h.finish_step, alpha), &h.buffer.values});
  const ParamVector& shape = active.empty() ? history.front().buffer.values : active.front().values;
  MomentumBuffer fused{ParamVector::zeros_like(shape), -1, tau};
  fuse_terms(std::move(terms), fused.values, exec);
  return fused;
}

}  // namespace smofi
