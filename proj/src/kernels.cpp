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

#include "smofi/kernels.hpp"

#include <algorithm>

namespace smofi::kernels {

namespace {

inline void forward_row(const Matrix& x, std::span<const double> w, std::span<const double> bias,
                        Matrix& y, std::size_t r) {
  const std::size_t in = x.cols();
  const std::size_t out = y.cols();
  auto xr = x.row(r);
  auto yr = y.row(r);
  for (std::size_t o = 0; o < out; ++o) {
    const double* wo = w.data() + o * in;
    double acc = 0.0;
    for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wo[i];
    yr[o] = bias.empty() ? acc : acc + bias[o];
  }
}

inline void weight_grad_row(const Matrix& x, const Matrix& dy, std::span<double> dw,
                            std::span<double> dbias, std::size_t o) {
  const std::size_t in = x.cols();
  double* dwo = dw.data() + o * in;
  std::fill(dwo, dwo + in, 0.0);
  double db = 0.0;
  for (std::size_t b = 0; b < x.rows(); ++b) {
    const double g = dy(b, o);
    auto xb = x.row(b);
    for (std::size_t i = 0; i < in; ++i) dwo[i] += g * xb[i];
    db += g;
  }
  if (!dbias.empty()) dbias[o] = db;
}

inline void input_grad_row(std::span<const double> w, const Matrix& dy, Matrix& dx, std::size_t b) {
  const std::size_t in = dx.cols();
  const std::size_t out = dy.cols();
  auto dxb = dx.row(b);
  std::fill(dxb.begin(), dxb.end(), 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    const double g = dy(b, o);
    const double* wo = w.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) dxb[i] += g * wo[i];
  }
}

}  // namespace

void dense_forward_serial(const Matrix& x, std::span<const double> w, std::span<const double> bias,
                          Matrix& y) {
  for (std::size_t r = 0; r < x.rows(); ++r) forward_row(x, w, bias, y, r);
}

void dense_forward_omp(const Matrix& x, std::span<const double> w, std::span<const double> bias,
                       Matrix& y) {
  const auto rows = static_cast<long>(x.rows());
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r) forward_row(x, w, bias, y, static_cast<std::size_t>(r));
}

void dense_backward_serial(const Matrix& x, std::span<const double> w, const Matrix& dy,
                           std::span<double> dw, std::span<double> dbias, Matrix* dx) {
  for (std::size_t o = 0; o < dy.cols(); ++o) weight_grad_row(x, dy, dw, dbias, o);
  if (dx)
    for (std::size_t b = 0; b < dy.rows(); ++b) input_grad_row(w, dy, *dx, b);
}

void dense_backward_omp(const Matrix& x, std::span<const double> w, const Matrix& dy,
                        std::span<double> dw, std::span<double> dbias, Matrix* dx) {
  const auto outs = static_cast<long>(dy.cols());
  const auto rows = static_cast<long>(dy.rows());
#pragma omp parallel
  {
#pragma omp for schedule(static) nowait
    for (long o = 0; o < outs; ++o) weight_grad_row(x, dy, dw, dbias, static_cast<std::size_t>(o));
    if (dx) {
#pragma omp for schedule(static)
      for (long b = 0; b < rows; ++b) input_grad_row(w, dy, *dx, static_cast<std::size_t>(b));
    }
  }
}

void affine_combination_serial(std::span<const std::span<const double>> inputs,
                               std::span<const double> weights, std::span<double> out) {
  auto base = inputs[0];
  std::copy(base.begin(), base.end(), out.begin());
  for (std::size_t j = 1; j < inputs.size(); ++j) {
    const double wj = weights[j];
    auto in = inputs[j];
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += wj * (in[k] - base[k]);
  }
}

void affine_combination_omp(std::span<const std::span<const double>> inputs,
                            std::span<const double> weights, std::span<double> out) {
  const auto n = static_cast<long>(out.size());
  auto base = inputs[0];
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    double acc = base[k];
    for (std::size_t j = 1; j < inputs.size(); ++j) acc += weights[j] * (inputs[j][k] - base[k]);
    out[k] = acc;
  }
}

void running_mean_serial(std::span<const std::span<const double>> inputs,
                         std::span<const double> weights, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    const double wj = weights[j];
    const double n = static_cast<double>(j + 1);
    auto in = inputs[j];
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += (wj * in[k] - out[k]) / n;
  }
}

void running_mean_omp(std::span<const std::span<const double>> inputs,
                      std::span<const double> weights, std::span<double> out) {
  const auto n = static_cast<long>(out.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < inputs.size(); ++j)
      acc += (weights[j] * inputs[j][k] - acc) / static_cast<double>(j + 1);
    out[k] = acc;
  }
}

}  // namespace smofi::kernels
