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

#include "smofi/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "smofi/error.hpp"
#include "smofi/rng.hpp"

namespace smofi {

Batch Dataset::gather(std::span<const std::size_t> indices) const {
  Batch b;
  const std::size_t d = dims();
  b.inputs = Matrix(indices.size(), d);
  if (is_classification()) b.labels.reserve(indices.size());
  if (!targets.empty()) b.targets = Matrix(indices.size(), targets.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t i = indices[r];
    if (i >= size()) throw UsageError("Dataset::gather: index out of range");
    auto src = features.row(i);
    std::copy(src.begin(), src.end(), b.inputs.row(r).begin());
    if (is_classification()) b.labels.push_back(labels[i]);
    if (!targets.empty()) {
      auto t = targets.row(i);
      std::copy(t.begin(), t.end(), b.targets.row(r).begin());
    }
  }
  return b;
}

Batch Dataset::all() const {
  std::vector<std::size_t> idx(size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return gather(idx);
}

std::vector<double> Dataset::class_histogram(std::span<const std::size_t> indices) const {
  std::vector<double> h(static_cast<std::size_t>(std::max(classes, 1)), 0.0);
  for (auto i : indices) h[is_classification() ? static_cast<std::size_t>(labels[i]) : 0] += 1.0;
  return h;
}

Dataset make_blobs(int classes, int dims, int per_class, double spread, std::uint64_t seed,
                   double separation) {
  if (classes < 2) throw ConfigError("dataset.classes: must be >= 2");
  if (dims < 1) throw ConfigError("dataset.dims: must be >= 1");
  if (per_class < 1) throw ConfigError("dataset.per_class: must be >= 1");
  if (!(spread >= 0.0)) throw ConfigError("dataset.spread: must be >= 0");

  const auto d = static_cast<std::size_t>(dims);
  Dataset ds;
  ds.classes = classes;
  ds.features = Matrix(static_cast<std::size_t>(classes) * static_cast<std::size_t>(per_class), d);
  ds.labels.reserve(ds.features.rows());
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::size_t row = 0;
  for (int k = 0; k < classes; ++k) {
    std::vector<double> mean(d, 0.0);
    mean[static_cast<std::size_t>(k % dims)] += separation;
    mean[static_cast<std::size_t>((k + 1) % dims)] += separation * (k / dims);
    for (int s = 0; s < per_class; ++s, ++row) {
      auto x = ds.features.row(row);
      for (std::size_t j = 0; j < d; ++j) x[j] = mean[j] + spread * noise(rng);
      ds.labels.push_back(k);
    }
  }
  return ds;
}

Dataset load_csv(const std::string& path, int classes) {
  std::ifstream in(path);
  if (!in) throw ConfigError("dataset: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset: '" + path + "' is empty");
  std::size_t dims = 0;
  {
    std::stringstream ss(line);
    std::string col;
    std::vector<std::string> cols;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() < 2 || cols.back() != "label")
      throw ConfigError("dataset: header must be f0..f{d-1},label");
    dims = cols.size() - 1;
    for (std::size_t j = 0; j < dims; ++j)
      if (cols[j] != "f" + std::to_string(j))
        throw ConfigError("dataset: header must be f0..f{d-1},label");
  }
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t j = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        if (j < dims)
          values.push_back(std::stod(cell));
        else if (j == dims)
          labels.push_back(std::stoi(cell));
      } catch (const std::exception&) {
        throw ConfigError("dataset: bad value on line " + std::to_string(line_no));
      }
      ++j;
    }
    if (j != dims + 1) throw ConfigError("dataset: wrong column count on line " + std::to_string(line_no));
  }
  if (labels.empty()) throw ConfigError("dataset: '" + path + "' has no samples");
  const int max_label = *std::max_element(labels.begin(), labels.end());
  if (*std::min_element(labels.begin(), labels.end()) < 0) throw ConfigError("dataset: negative label");
  Dataset ds;
  ds.classes = classes > 0 ? classes : max_label + 1;
  if (max_label >= ds.classes) throw ConfigError("dataset: label exceeds class count");
  ds.features = Matrix(labels.size(), dims, std::move(values));
  ds.labels = std::move(labels);
  return ds;
}

void write_csv(const Dataset& ds, std::ostream& out) {
  for (std::size_t j = 0; j < ds.dims(); ++j) out << 'f' << j << ',';
  out << "label\n";
  char buf[32];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.features.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << ds.labels[i] << '\n';
  }
}

std::vector<Shard> partition_dirichlet(const Dataset& ds, const PartitionSpec& spec) {
  if (spec.client_count < 1) throw ConfigError("partition.clients: must be >= 1");
  if (!(spec.gamma > 0.0)) throw ConfigError("partition.gamma: must be > 0");
  const auto clients = static_cast<std::size_t>(spec.client_count);
  if (ds.size() < clients)
    throw ConfigError("partition: " + std::to_string(ds.size()) + " samples cannot cover " +
                      std::to_string(clients) + " clients");

  Rng rng(spec.seed);
  std::gamma_distribution<double> gamma(spec.gamma, 1.0);
  const std::size_t classes = static_cast<std::size_t>(std::max(ds.classes, 1));
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < ds.size(); ++i)
    by_class[ds.is_classification() ? static_cast<std::size_t>(ds.labels[i]) : 0].push_back(i);

  std::vector<Shard> shards(clients);
  for (std::size_t j = 0; j < clients; ++j) shards[j].owner = static_cast<int>(j);

  std::vector<double> q(clients);
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    double total = 0.0;
    for (auto& v : q) total += (v = gamma(rng));
    if (!(total > 0.0)) {
      // Every draw underflowed (tiny gamma): the class goes to one client.
      std::fill(q.begin(), q.end(), 0.0);
      q[std::uniform_int_distribution<std::size_t>(0, clients - 1)(rng)] = 1.0;
      total = 1.0;
    }
    const double n = static_cast<double>(members.size());
    double cum = 0.0;
    std::size_t start = 0;
    for (std::size_t j = 0; j < clients; ++j) {
      cum += q[j] / total;
      std::size_t end = j + 1 == clients
                            ? members.size()
                            : std::min(members.size(), static_cast<std::size_t>(std::floor(cum * n)));
      end = std::max(end, start);
      shards[j].indices.insert(shards[j].indices.end(), members.begin() + static_cast<long>(start),
                               members.begin() + static_cast<long>(end));
      start = end;
    }
  }

  for (auto& s : shards) std::sort(s.indices.begin(), s.indices.end());
  for (auto& s : shards) {
    if (!s.indices.empty()) continue;
    auto largest = std::max_element(shards.begin(), shards.end(), [](const Shard& a, const Shard& b) {
      return a.indices.size() < b.indices.size();
    });
    s.indices.push_back(largest->indices.back());
    largest->indices.pop_back();
  }
  return shards;
}

double js_divergence(std::span<const double> q, std::span<const double> q_ref) {
  if (q.size() != q_ref.size()) throw UsageError("js_divergence: size mismatch");
  const double sq = std::accumulate(q.begin(), q.end(), 0.0);
  const double sr = std::accumulate(q_ref.begin(), q_ref.end(), 0.0);
  if (!(sq > 0.0) || !(sr > 0.0)) throw UsageError("js_divergence: zero-total distribution");
  double kl_q = 0.0;
  double kl_r = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] < 0.0 || q_ref[i] < 0.0) throw UsageError("js_divergence: negative mass");
    const double a = q[i] / sq;
    const double b = q_ref[i] / sr;
    const double m = 0.5 * (a + b);
    if (a > 0.0) kl_q += a * std::log2(a / m);
    if (b > 0.0) kl_r += b * std::log2(b / m);
  }
  return std::clamp(0.5 * (kl_q + kl_r), 0.0, 1.0);
}

double js_from_balanced(const Dataset& ds, const Shard& shard) {
  const auto h = ds.class_histogram(shard.indices);
  const std::vector<double> balanced(h.size(), 1.0);
  return js_divergence(h, balanced);
}

int local_steps(std::size_t shard_size, int epochs, int batch_size) {
  if (epochs < 1) throw UsageError("local_steps: epochs must be >= 1");
  if (batch_size < 1) throw UsageError("local_steps: batch size must be >= 1");
  return epochs * static_cast<int>(shard_size / static_cast<std::size_t>(batch_size));
}

std::vector<double> aggregation_weights(std::span<const std::size_t> shard_sizes) {
  const double total = static_cast<double>(
      std::accumulate(shard_sizes.begin(), shard_sizes.end(), std::size_t{0}));
  if (!(total > 0.0)) throw UsageError("aggregation_weights: empty cohort");
  std::vector<double> p;
  p.reserve(shard_sizes.size());
  for (auto s : shard_sizes) p.push_back(static_cast<double>(s) / total);
  return p;
}

BatchSchedule::BatchSchedule(std::span<const std::size_t> shard, int epochs, int batch_size,
                             std::uint64_t seed)
    : batch_size_(batch_size),
      batches_per_epoch_(static_cast<int>(shard.size() / static_cast<std::size_t>(batch_size))),
      steps_(local_steps(shard.size(), epochs, batch_size)) {
  Rng rng(seed);
  std::vector<std::size_t> perm(shard.begin(), shard.end());
  const auto used = static_cast<std::size_t>(batches_per_epoch_) * static_cast<std::size_t>(batch_size);
  order_.reserve(used * static_cast<std::size_t>(epochs));
  for (int e = 0; e < epochs && used > 0; ++e) {
    std::shuffle(perm.begin(), perm.end(), rng);
    order_.insert(order_.end(), perm.begin(), perm.begin() + static_cast<long>(used));
  }
}

std::span<const std::size_t> BatchSchedule::batch(int step) const {
  if (step < 0 || step >= steps_) throw UsageError("BatchSchedule: step out of range");
  return {order_.data() + static_cast<std::size_t>(step) * static_cast<std::size_t>(batch_size_),
          static_cast<std::size_t>(batch_size_)};
}

double evaluate(const Network& net, const ParamVector& params, const Dataset& ds) {
  if (ds.size() == 0) throw UsageError("evaluate: empty dataset");
  if (!ds.is_classification()) throw UsageError("evaluate: accuracy needs a classification dataset");
  return accuracy(net, params, ds.features, ds.labels);
}

void write_histograms_csv(const Dataset& ds, std::span<const Shard> shards, std::ostream& out) {
  const std::size_t classes = static_cast<std::size_t>(std::max(ds.classes, 1));
  out << "client_id,size";
  for (std::size_t c = 0; c < classes; ++c) out << ",c" << c;
  out << ",js\n";
  char buf[32];
  for (const auto& s : shards) {
    out << s.owner << ',' << s.indices.size();
    for (double v : ds.class_histogram(s.indices)) out << ',' << static_cast<long long>(v);
    std::snprintf(buf, sizeof buf, "%.6f", js_from_balanced(ds, s));
    out << ',' << buf << '\n';
  }
}

}  // namespace smofi
