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
#include <span>

#include "smofi/tensor.hpp"

namespace smofi {

// Dense kernels come in two flavours: a plain serial reference and an
// OpenMP version that parallelises over independent output rows. Both
// accumulate every output element in the same order, so their results are
// bit-identical and the serial path doubles as the test oracle.
namespace kernels {

// y[b, o] = sum_i x[b, i] * w[o, i] + bias[o]; w is out x in row-major.
void dense_forward_serial(const Matrix& x, std::span<const double> w, std::span<const double> bias,
                          Matrix& y);
void dense_forward_omp(const Matrix& x, std::span<const double> w, std::span<const double> bias,
                       Matrix& y);

// dw = dy^T x, dbias = column sums of dy, dx = dy w. dbias may be empty
// (layer without bias); dx may be null when the input gradient is not needed.
void dense_backward_serial(const Matrix& x, std::span<const double> w, const Matrix& dy,
                           std::span<double> dw, std::span<double> dbias, Matrix* dx);
void dense_backward_omp(const Matrix& x, std::span<const double> w, const Matrix& dy,
                        std::span<double> dw, std::span<double> dbias, Matrix* dx);

// out = x_0 + sum_{j>=1} w_j (x_j - x_0). Equals sum_j w_j x_j when the
// weights sum to one, and returns identical inputs unchanged.
void affine_combination_serial(std::span<const std::span<const double>> inputs,
                               std::span<const double> weights, std::span<double> out);
void affine_combination_omp(std::span<const std::span<const double>> inputs,
                            std::span<const double> weights, std::span<double> out);

// Mean of w_j x_j over j, accumulated incrementally in j order, so equal
// terms come out exactly.
void running_mean_serial(std::span<const std::span<const double>> inputs,
                         std::span<const double> weights, std::span<double> out);
void running_mean_omp(std::span<const std::span<const double>> inputs,
                      std::span<const double> weights, std::span<double> out);

}  // namespace kernels
}  // namespace smofi
