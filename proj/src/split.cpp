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

#include "smofi/split.hpp"

#include <numeric>
#include <string>

#include "smofi/error.hpp"

namespace smofi {

namespace {
double kb_for(std::size_t values) { return static_cast<double>(values) * kBytesPerValue / 1024.0; }
}  // namespace

SplitModel SplitModel::analytic(std::vector<LayerSpec> layers, std::size_t cut) {
  SplitModel m;
  m.layers = std::move(layers);
  m.cut = cut;
  for (const auto& l : m.layers) {
    m.per_layer_macs.push_back(l.macs());
    m.per_layer_activation_kb.push_back(kb_for(l.out_dim));
  }
  m.validate();
  return m;
}

void SplitModel::validate() const {
  if (layers.empty()) throw ConfigError("model.layers: at least one layer required");
  if (cut >= layers.size())
    throw ConfigError("model.cut: " + std::to_string(cut) + " out of range [0, " +
                      std::to_string(layers.size()) + ")");
  if (per_layer_macs.size() != layers.size())
    throw ConfigError("model.macs: need one entry per layer");
  if (per_layer_activation_kb.size() != layers.size())
    throw ConfigError("model.activation_kb: need one entry per layer");
  for (double kb : per_layer_activation_kb)
    if (!(kb >= 0.0)) throw ConfigError("model.activation_kb: entries must be >= 0");
}

std::size_t SplitModel::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.param_count();
  return n;
}

SubmodelPair split(const ParamVector& full, const SplitModel& model) {
  if (model.cut >= model.layers.size()) throw ConfigError("split: cut layer out of range");
  if (full.first_layer() != 0 || full.layer_count() != model.layers.size() ||
      full.size() != model.param_count())
    throw UsageError("split: parameters do not match the model");
  return {full.slice_layers(0, model.cut), full.slice_layers(model.cut, model.layers.size())};
}

ParamVector join(const SubmodelPair& pair, const SplitModel& model) {
  if (pair.client.first_layer() != 0 || pair.client.layer_count() != model.cut ||
      pair.server.first_layer() != model.cut || pair.server.end_layer() != model.layers.size())
    throw UsageError("join: submodels were not split at the model's cut layer");
  ParamVector full = ParamVector::concat(pair.client, pair.server);
  if (full.size() != model.param_count()) throw UsageError("join: parameter count mismatch");
  return full;
}

double compute_ratio(const SplitModel& model) {
  const auto& macs = model.per_layer_macs;
  const std::uint64_t total = std::accumulate(macs.begin(), macs.end(), std::uint64_t{0});
  if (total == 0) throw ConfigError("model.macs: total MAC count is zero");
  const std::uint64_t client =
      std::accumulate(macs.begin(), macs.begin() + static_cast<long>(model.cut), std::uint64_t{0});
  return static_cast<double>(client) / static_cast<double>(total);
}

double activation_size(const SplitModel& model) {
  if (model.cut >= model.layers.size()) throw ConfigError("activation_size: cut layer out of range");
  if (model.cut == 0) return kb_for(model.layers.front().in_dim);
  return model.per_layer_activation_kb[model.cut - 1];
}

}  // namespace smofi
