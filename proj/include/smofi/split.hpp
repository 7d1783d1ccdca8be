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
#include <vector>

#include "smofi/tensor.hpp"

namespace smofi {

// Bytes per activation value; matches the simulator's real type.
inline constexpr double kBytesPerValue = sizeof(double);

// Layered model with a fixed cut: layers [0, cut) run on the client, layers
// [cut, n) on the server. The per-layer profile feeds the latency model.
struct SplitModel {
  std::vector<LayerSpec> layers;
  std::size_t cut = 0;
  std::vector<std::uint64_t> per_layer_macs;
  std::vector<double> per_layer_activation_kb;  // output size of each layer, kb per sample

  // Profile derived from the layer shapes: dense = in*out MACs, activation
  // layers 0; outputs at 8 bytes/value.
  static SplitModel analytic(std::vector<LayerSpec> layers, std::size_t cut);

  void validate() const;
  std::size_t layer_count() const { return layers.size(); }
  std::size_t param_count() const;
};

struct SubmodelPair {
  ParamVector client;  // layers [0, cut)
  ParamVector server;  // layers [cut, n)
};

SubmodelPair split(const ParamVector& full, const SplitModel& model);
ParamVector join(const SubmodelPair& pair, const SplitModel& model);

// Fraction of per-sample MACs executed client-side, O(L).
double compute_ratio(const SplitModel& model);
// Size of the cut-layer activation per sample in kb, S(L). At cut 0 this is
// the raw input size.
double activation_size(const SplitModel& model);

}  // namespace smofi
