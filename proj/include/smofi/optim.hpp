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

#include <span>
#include <string>
#include <vector>

#include "smofi/tensor.hpp"

namespace smofi {

enum class OptimVariant { sgdm, nag };
enum class LrSchedule { exponential, inverse };

struct OptimConfig {
  double eta = 0.05;
  double beta = 0.9;
  double weight_decay = 0.0005;
  // Multiplicative decay per communication round (exponential schedule).
  double lr_decay_per_round = 0.998;
  OptimVariant variant = OptimVariant::sgdm;
  // inverse: eta_n = eta * shift / (shift + n - 1), i.e. proportional to 1/(shift + n).
  LrSchedule schedule = LrSchedule::exponential;
  double lr_shift = 10.0;

  void validate() const;
  // Learning rate in effect during round n (1-based).
  double lr_for_round(int round) const;
};

struct MomentumBuffer {
  ParamVector values;
  int owner = -1;
  int step_created = 0;
};

// Buffer of a client that finished its local steps in the current round.
struct HistoryEntry {
  MomentumBuffer buffer;
  int finish_step = 0;  // T_j of the finished client
};

struct StepResult {
  ParamVector params;
  MomentumBuffer buffer;
};

// buffer <- beta * buffer + grads (+ weight_decay * params); params <- params - eta * buffer.
// In-place core shared by every momentum update in the simulator.
void momentum_update(ParamVector& params, ParamVector& buffer, const ParamVector& grads,
                     const OptimConfig& cfg);

StepResult sgdm_step(const ParamVector& params, const ParamVector& grads,
                     const MomentumBuffer& buffer_in, const OptimConfig& cfg);

// Same recurrence, but the prior buffer is the fused buffer shared by every
// server-side optimizer at this step.
StepResult aligned_sgdm_step(const ParamVector& params, const ParamVector& grads,
                             const MomentumBuffer& aligned_buffer, const OptimConfig& cfg);

// Nesterov: the caller evaluates gradients at nag_lookahead(params, buffer_in).
ParamVector nag_lookahead(const ParamVector& params, const ParamVector& buffer, const OptimConfig& cfg);
StepResult nag_step(const ParamVector& params, const ParamVector& grads_at_lookahead,
                    const MomentumBuffer& buffer_in, const OptimConfig& cfg);

// Polynomial staleness (tau - finish_step + 1)^alpha, alpha < 0.
double staleness(int tau, int finish_step, double alpha);

// Averages current buffers (weight 1) and history buffers (staleness weight)
// over |active| + |history|. Contributions are summed in ascending owner id.
MomentumBuffer fuse_momentum(std::span<const MomentumBuffer> active,
                             std::span<const HistoryEntry> history, int tau, double alpha,
                             Exec exec = Exec::serial);

// Non-owning form used on the hot path.
struct FusionTerm {
  int owner = -1;
  double weight = 1.0;
  const ParamVector* values = nullptr;
};
// Writes (sum_k weight_k * values_k) / terms.size() into `out`.
void fuse_terms(std::vector<FusionTerm> terms, ParamVector& out, Exec exec = Exec::serial);

std::string to_string(OptimVariant v);

}  // namespace smofi
