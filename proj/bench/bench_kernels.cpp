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

// Serial vs OpenMP timings for the hot kernels and a full SMoFi round.

#include <benchmark/benchmark.h>

#include <random>
#include <span>
#include <vector>

#include "smofi/data.hpp"
#include "smofi/kernels.hpp"
#include "smofi/protocols.hpp"
#include "smofi/split.hpp"

namespace {

using namespace smofi;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = nd(rng);
  return m;
}

template <bool Omp>
void BM_DenseForward(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Matrix x = random_matrix(64, n, 1);
  const Matrix w = random_matrix(n, n, 2);
  const std::vector<double> b(n, 0.1);
  Matrix y(64, n);
  for (auto _ : st) {
    if constexpr (Omp)
      kernels::dense_forward_omp(x, w.data(), b, y);
    else
      kernels::dense_forward_serial(x, w.data(), b, y);
    benchmark::DoNotOptimize(y.data().data());
  }
  st.SetItemsProcessed(st.iterations() * 64 * static_cast<std::int64_t>(n * n));
}

template <bool Omp>
void BM_DenseBackward(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Matrix x = random_matrix(64, n, 1);
  const Matrix w = random_matrix(n, n, 2);
  const Matrix dy = random_matrix(64, n, 3);
  std::vector<double> dw(n * n), db(n);
  Matrix dx(64, n);
  for (auto _ : st) {
    if constexpr (Omp)
      kernels::dense_backward_omp(x, w.data(), dy, dw, db, &dx);
    else
      kernels::dense_backward_serial(x, w.data(), dy, dw, db, &dx);
    benchmark::DoNotOptimize(dw.data());
  }
}

template <bool Omp>
void BM_Reduction(benchmark::State& st) {
  const std::size_t len = 1 << 16;
  const auto count = static_cast<std::size_t>(st.range(0));
  std::vector<Matrix> data;
  std::vector<std::span<const double>> inputs;
  for (std::size_t k = 0; k < count; ++k) data.push_back(random_matrix(1, len, k));
  for (const auto& m : data) inputs.push_back(m.data());
  const std::vector<double> weights(count, 1.0 / static_cast<double>(count));
  std::vector<double> out(len);
  for (auto _ : st) {
    if constexpr (Omp)
      kernels::running_mean_omp(inputs, weights, out);
    else
      kernels::running_mean_serial(inputs, weights, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_SmofiRound(benchmark::State& st) {
  const Exec exec = st.range(0) ? Exec::parallel : Exec::serial;
  const Dataset train = make_blobs(10, 16, 200, 1.0, 1, 3.0);
  const auto shards = partition_dirichlet(train, {20, 0.2, 2});
  const std::vector<LayerSpec> layers{LayerSpec::dense(16, 64),  LayerSpec::relu(64),
                                      LayerSpec::dense(64, 64),  LayerSpec::relu(64),
                                      LayerSpec::dense(64, 10),  LayerSpec::softmax_xent(10)};
  RoundConfig r;
  r.local_epochs = 1;
  r.batch_size = 16;
  r.exec = exec;
  Federation fed(SplitModel::analytic(layers, 1), train, shards, OptimConfig{}, r, 3, 4);
  std::vector<int> all(20);
  for (int j = 0; j < 20; ++j) all[static_cast<std::size_t>(j)] = j;
  const RoundCohort cohort = fed.make_cohort(all);
  const GlobalState s = GlobalState::initial(Network(layers).init_params(5));
  for (auto _ : st) benchmark::DoNotOptimize(fed.run_round(s, cohort).state.params.size());
}

BENCHMARK(BM_DenseForward<false>)->Arg(64)->Arg(256);
BENCHMARK(BM_DenseForward<true>)->Arg(64)->Arg(256);
BENCHMARK(BM_DenseBackward<false>)->Arg(64)->Arg(256);
BENCHMARK(BM_DenseBackward<true>)->Arg(64)->Arg(256);
BENCHMARK(BM_Reduction<false>)->Arg(10);
BENCHMARK(BM_Reduction<true>)->Arg(10);
BENCHMARK(BM_SmofiRound)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
