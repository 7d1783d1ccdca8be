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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "smofi/tensor.hpp"

namespace smofi {

// Samples plus either class labels (classification) or real targets (regression).
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  Matrix targets;
  int classes = 0;  // 0 for regression data

  std::size_t size() const { return features.rows(); }
  std::size_t dims() const { return features.cols(); }
  bool is_classification() const { return classes > 0; }

  Batch gather(std::span<const std::size_t> indices) const;
  Batch all() const;
  // Per-class sample counts over `indices`.
  std::vector<double> class_histogram(std::span<const std::size_t> indices) const;
};

// Gaussian clusters, one per class. Class k is centred at
// separation * (e_{k mod dims} + (k / dims) * e_{(k+1) mod dims}).
Dataset make_blobs(int classes, int dims, int per_class, double spread, std::uint64_t seed,
                   double separation = 1.0);

// CSV with header f0..f{d-1},label. The class count is max(label) + 1 unless
// `classes` is given.
Dataset load_csv(const std::string& path, int classes = 0);
void write_csv(const Dataset& ds, std::ostream& out);

struct PartitionSpec {
  int client_count = 1;
  double gamma = 0.2;
  std::uint64_t seed = 0;
};

struct Shard {
  int owner = 0;
  std::vector<std::size_t> indices;  // ascending
};

// Per class, draws client proportions from Dir(gamma) and hands out that
// class's shuffled samples accordingly. Empty shards are repaired by moving
// one sample from the largest shard.
std::vector<Shard> partition_dirichlet(const Dataset& ds, const PartitionSpec& spec);

// Jensen-Shannon divergence with log base 2; inputs are normalised internally.
double js_divergence(std::span<const double> q, std::span<const double> q_ref);
// Divergence of a shard's class distribution from the balanced distribution.
double js_from_balanced(const Dataset& ds, const Shard& shard);

// E * floor(shard_size / B).
int local_steps(std::size_t shard_size, int epochs, int batch_size);

// p_j = |D_j| / sum_k |D_k|.
std::vector<double> aggregation_weights(std::span<const std::size_t> shard_sizes);

// Batch order for one client in one round: the shard is reshuffled at every
// epoch and the trailing partial batch is dropped.
class BatchSchedule {
 public:
  BatchSchedule(std::span<const std::size_t> shard, int epochs, int batch_size, std::uint64_t seed);

  int steps() const { return steps_; }
  std::span<const std::size_t> batch(int step) const;

 private:
  int batch_size_;
  int batches_per_epoch_;
  int steps_;
  std::vector<std::size_t> order_;  // epochs * batches_per_epoch * batch_size indices
};

// Top-1 accuracy of the full model on a classification dataset.
double evaluate(const Network& net, const ParamVector& params, const Dataset& ds);

// client_id,size,c0..c{k-1},js
void write_histograms_csv(const Dataset& ds, std::span<const Shard> shards, std::ostream& out);

}  // namespace smofi
