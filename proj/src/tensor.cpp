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

#include "smofi/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "smofi/error.hpp"
#include "smofi/kernels.hpp"
#include "smofi/rng.hpp"

namespace smofi {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::relu: return "relu";
    case LayerKind::softmax_xent: return "softmax_xent";
    case LayerKind::mse: return "mse";
  }
  return "?";
}

LayerKind layer_kind_from_string(const std::string& name) {
  if (name == "dense") return LayerKind::dense;
  if (name == "relu") return LayerKind::relu;
  if (name == "softmax_xent") return LayerKind::softmax_xent;
  if (name == "mse") return LayerKind::mse;
  throw ConfigError("unknown layer kind '" + name + "'");
}

std::size_t LayerSpec::param_count() const {
  if (kind != LayerKind::dense) return 0;
  return in_dim * out_dim + (bias ? out_dim : 0);
}

std::uint64_t LayerSpec::macs() const {
  return kind == LayerKind::dense ? static_cast<std::uint64_t>(in_dim) * out_dim : 0;
}

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out, bool bias) {
  return {LayerKind::dense, in, out, bias};
}
LayerSpec LayerSpec::relu(std::size_t dim) { return {LayerKind::relu, dim, dim, false}; }
LayerSpec LayerSpec::softmax_xent(std::size_t classes) {
  return {LayerKind::softmax_xent, classes, classes, false};
}
LayerSpec LayerSpec::mse(std::size_t dim) { return {LayerKind::mse, dim, dim, false}; }

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw UsageError("Matrix: data size does not match shape");
}

// ---------------------------------------------------------------------------
// ParamVector

ParamVector::ParamVector(std::vector<double> values, std::vector<std::size_t> offsets,
                         std::size_t first_layer)
    : values_(std::move(values)), offsets_(std::move(offsets)), first_layer_(first_layer) {
  if (offsets_.empty() || offsets_.front() != 0)
    throw UsageError("ParamVector: offsets must start at 0");
  if (!std::is_sorted(offsets_.begin(), offsets_.end()))
    throw UsageError("ParamVector: offsets must be non-decreasing");
  if (offsets_.back() != values_.size())
    throw UsageError("ParamVector: last offset must equal the value count");
}

ParamVector ParamVector::zeros(std::vector<std::size_t> offsets, std::size_t first_layer) {
  const std::size_t n = offsets.empty() ? 0 : offsets.back();
  return ParamVector(std::vector<double>(n, 0.0), std::move(offsets), first_layer);
}

ParamVector ParamVector::zeros_like(const ParamVector& other) {
  return zeros(other.offsets_, other.first_layer_);
}

std::span<double> ParamVector::layer(std::size_t model_layer) {
  if (model_layer < first_layer_ || model_layer >= end_layer())
    throw UsageError("ParamVector: layer out of range");
  const std::size_t i = model_layer - first_layer_;
  return {values_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

std::span<const double> ParamVector::layer(std::size_t model_layer) const {
  if (model_layer < first_layer_ || model_layer >= end_layer())
    throw UsageError("ParamVector: layer out of range");
  const std::size_t i = model_layer - first_layer_;
  return {values_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

bool ParamVector::same_shape(const ParamVector& other) const {
  return first_layer_ == other.first_layer_ && offsets_ == other.offsets_;
}

ParamVector ParamVector::slice_layers(std::size_t from, std::size_t to) const {
  if (from < first_layer_ || to > end_layer() || from > to)
    throw UsageError("ParamVector::slice_layers: range outside stored layers");
  const std::size_t lo = offsets_[from - first_layer_];
  const std::size_t hi = offsets_[to - first_layer_];
  std::vector<std::size_t> off;
  off.reserve(to - from + 1);
  for (std::size_t l = from; l <= to; ++l) off.push_back(offsets_[l - first_layer_] - lo);
  return ParamVector(std::vector<double>(values_.begin() + lo, values_.begin() + hi),
                     std::move(off), from);
}

ParamVector ParamVector::concat(const ParamVector& lower, const ParamVector& upper) {
  if (lower.end_layer() != upper.first_layer())
    throw UsageError("ParamVector::concat: ranges are not adjacent");
  std::vector<double> values(lower.values_);
  values.insert(values.end(), upper.values_.begin(), upper.values_.end());
  std::vector<std::size_t> off(lower.offsets_);
  for (std::size_t i = 1; i < upper.offsets_.size(); ++i)
    off.push_back(lower.size() + upper.offsets_[i]);
  return ParamVector(std::move(values), std::move(off), lower.first_layer_);
}

void require_same_shape(const ParamVector& a, const ParamVector& b, const char* what) {
  if (!a.same_shape(b)) throw UsageError(std::string(what) + ": parameter shape mismatch");
}

ParamVector& ParamVector::operator+=(const ParamVector& rhs) {
  require_same_shape(*this, rhs, "ParamVector::operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += rhs.values_[i];
  return *this;
}

ParamVector& ParamVector::operator-=(const ParamVector& rhs) {
  require_same_shape(*this, rhs, "ParamVector::operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= rhs.values_[i];
  return *this;
}

ParamVector& ParamVector::operator*=(double s) {
  for (auto& v : values_) v *= s;
  return *this;
}

ParamVector& ParamVector::axpy(double a, const ParamVector& x) {
  require_same_shape(*this, x, "ParamVector::axpy");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += a * x.values_[i];
  return *this;
}

void ParamVector::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

bool ParamVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double ParamVector::norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

ParamVector operator+(ParamVector lhs, const ParamVector& rhs) { return lhs += rhs; }
ParamVector operator-(ParamVector lhs, const ParamVector& rhs) { return lhs -= rhs; }
ParamVector operator*(double s, ParamVector v) { return v *= s; }

// ---------------------------------------------------------------------------
// Network

Network::Network(std::vector<LayerSpec> layers, Exec exec) : layers_(std::move(layers)), exec_(exec) {
  if (layers_.empty()) throw ConfigError("model: at least one layer required");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    const std::string where = "model.layers[" + std::to_string(i) + "]";
    if (l.in_dim == 0 || l.out_dim == 0) throw ConfigError(where + ": dimensions must be positive");
    if (l.kind != LayerKind::dense && l.in_dim != l.out_dim)
      throw ConfigError(where + ": activation and head layers keep their dimension");
    if (i > 0 && layers_[i - 1].out_dim != l.in_dim)
      throw ConfigError(where + ": in_dim " + std::to_string(l.in_dim) +
                        " does not match previous out_dim " + std::to_string(layers_[i - 1].out_dim));
    if (l.is_head() && i + 1 != layers_.size())
      throw ConfigError(where + ": the loss head must be the last layer");
  }
  if (!layers_.back().is_head()) throw ConfigError("model.layers: last layer must be a loss head");
  if (layers_.back().kind == LayerKind::softmax_xent && layers_.back().in_dim < 2)
    throw ConfigError("model.layers: softmax head needs at least two classes");

  offsets_.reserve(layers_.size() + 1);
  offsets_.push_back(0);
  for (const auto& l : layers_) offsets_.push_back(offsets_.back() + l.param_count());
}

std::vector<std::size_t> Network::range_offsets(std::size_t from, std::size_t to) const {
  if (from > to || to > layers_.size()) throw UsageError("Network: layer range out of bounds");
  std::vector<std::size_t> off;
  off.reserve(to - from + 1);
  for (std::size_t l = from; l <= to; ++l) off.push_back(offsets_[l] - offsets_[from]);
  return off;
}

ParamVector Network::zeros(std::size_t from, std::size_t to) const {
  return ParamVector::zeros(range_offsets(from, to), from);
}

ParamVector Network::init_params(std::uint64_t seed) const {
  ParamVector p = zeros();
  Rng rng(seed);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.kind != LayerKind::dense) continue;
    const double limit = std::sqrt(6.0 / static_cast<double>(l.in_dim + l.out_dim));
    std::uniform_real_distribution<double> dist(-limit, limit);
    auto slice = p.layer(i);
    for (std::size_t k = 0; k < l.in_dim * l.out_dim; ++k) slice[k] = dist(rng);
  }
  return p;
}

void Network::check_params(const ParamVector& params, std::size_t from, std::size_t to) const {
  if (from > to || to > layers_.size()) throw UsageError("Network: layer range out of bounds");
  if (params.first_layer() > from || params.end_layer() < to)
    throw UsageError("Network: parameters do not cover the requested layers");
  for (std::size_t l = from; l < to; ++l) {
    if (params.layer(l).size() != layers_[l].param_count())
      throw UsageError("Network: parameter layout does not match layer " + std::to_string(l));
  }
}

namespace {

void softmax_rows(const Matrix& logits, Matrix& probs) {
  probs = Matrix(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    auto out = probs.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      out[c] = std::exp(in[c] - mx);
      z += out[c];
    }
    for (auto& v : out) v /= z;
  }
}

// Mean cross-entropy from logits via log-sum-exp.
double xent_from_logits(const Matrix& logits, std::span<const int> labels) {
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (double v : in) z += std::exp(v - mx);
    total += mx + std::log(z) - in[static_cast<std::size_t>(labels[r])];
  }
  return total / static_cast<double>(logits.rows());
}

double mse_loss(const Matrix& pred, const Matrix& targets) {
  double total = 0.0;
  for (std::size_t r = 0; r < pred.rows(); ++r)
    for (std::size_t c = 0; c < pred.cols(); ++c) {
      const double d = pred(r, c) - targets(r, c);
      total += 0.5 * d * d;
    }
  return total / static_cast<double>(pred.rows());
}

}  // namespace

ForwardResult Network::forward(const ParamVector& params, const Matrix& input, std::size_t from,
                               std::size_t to) const {
  check_params(params, from, to);
  const std::size_t expected = from < layers_.size() ? layers_[from].in_dim
                                                     : layers_.back().out_dim;
  if (input.cols() != expected)
    throw ConfigError("forward: input width " + std::to_string(input.cols()) +
                      " does not match layer input " + std::to_string(expected));

  ForwardResult res;
  res.cache.from = from;
  res.cache.to = to;
  res.cache.valid = true;
  res.cache.layer_inputs.reserve(to - from);

  Matrix cur = input;
  for (std::size_t l = from; l < to; ++l) {
    const auto& spec = layers_[l];
    res.cache.layer_inputs.push_back(cur);
    Matrix next;
    switch (spec.kind) {
      case LayerKind::dense: {
        auto slice = params.layer(l);
        const std::size_t nw = spec.in_dim * spec.out_dim;
        auto w = slice.subspan(0, nw);
        auto b = slice.subspan(nw);
        next = Matrix(cur.rows(), spec.out_dim);
        if (exec_ == Exec::parallel)
          kernels::dense_forward_omp(cur, w, b, next);
        else
          kernels::dense_forward_serial(cur, w, b, next);
        break;
      }
      case LayerKind::relu:
        next = cur;
        for (auto& v : next.data()) v = v > 0.0 ? v : 0.0;
        break;
      case LayerKind::softmax_xent:
        softmax_rows(cur, next);
        break;
      case LayerKind::mse:
        next = cur;
        break;
    }
    cur = std::move(next);
  }
  res.cache.output = cur;
  res.activations = std::move(cur);
  return res;
}

BackwardResult Network::backward(const ParamVector& params, const ForwardCache& cache,
                                 const Matrix& upstream) const {
  if (!cache.valid) throw UsageError("backward called without a matching forward pass");
  if (cache.to == cache.from) return {zeros(cache.from, cache.to), upstream, 0.0};
  if (layers_[cache.to - 1].is_head())
    throw UsageError("backward: cache ends at the loss head; pass the batch labels instead");
  if (upstream.rows() != cache.output.rows() || upstream.cols() != cache.output.cols())
    throw UsageError("backward: upstream gradient shape does not match the cached output");
  return backward_impl(params, cache, upstream, 0.0);
}

BackwardResult Network::backward(const ParamVector& params, const ForwardCache& cache,
                                 const Batch& batch) const {
  if (!cache.valid) throw UsageError("backward called without a matching forward pass");
  if (cache.to != layers_.size() || cache.from == cache.to)
    throw UsageError("backward: loss gradients require a cache that ends at the loss head");
  const auto& head = layers_.back();
  const Matrix& out = cache.output;
  const std::size_t rows = out.rows();
  const double inv_b = 1.0 / static_cast<double>(rows);
  Matrix grad(rows, out.cols());
  double loss = 0.0;
  if (head.kind == LayerKind::softmax_xent) {
    if (batch.labels.size() != rows) throw UsageError("backward: label count does not match batch");
    for (std::size_t r = 0; r < rows; ++r) {
      const int y = batch.labels[r];
      if (y < 0 || static_cast<std::size_t>(y) >= out.cols())
        throw UsageError("backward: label out of range");
      for (std::size_t c = 0; c < out.cols(); ++c) grad(r, c) = out(r, c) * inv_b;
      grad(r, static_cast<std::size_t>(y)) -= inv_b;
    }
    loss = xent_from_logits(cache.layer_inputs.back(), batch.labels);
  } else {
    if (batch.targets.rows() != rows || batch.targets.cols() != out.cols())
      throw UsageError("backward: target shape does not match batch");
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < out.cols(); ++c)
        grad(r, c) = (out(r, c) - batch.targets(r, c)) * inv_b;
    loss = mse_loss(out, batch.targets);
  }
  // The head's own backward is folded into `grad` above; skip it below.
  ForwardCache body = cache;
  body.to -= 1;
  body.layer_inputs.pop_back();
  if (body.to == body.from) {
    BackwardResult res{zeros(cache.from, cache.to), std::move(grad), loss};
    return res;
  }
  BackwardResult res = backward_impl(params, body, std::move(grad), loss);
  res.grads = ParamVector::concat(res.grads, zeros(cache.to - 1, cache.to));
  return res;
}

BackwardResult Network::backward_impl(const ParamVector& params, const ForwardCache& cache,
                                      Matrix grad, double loss) const {
  check_params(params, cache.from, cache.to);
  ParamVector grads = zeros(cache.from, cache.to);
  for (std::size_t l = cache.to; l-- > cache.from;) {
    const auto& spec = layers_[l];
    const Matrix& x = cache.layer_inputs[l - cache.from];
    switch (spec.kind) {
      case LayerKind::dense: {
        auto slice = params.layer(l);
        const std::size_t nw = spec.in_dim * spec.out_dim;
        auto gslice = grads.layer(l);
        Matrix dx(x.rows(), x.cols());
        if (exec_ == Exec::parallel)
          kernels::dense_backward_omp(x, slice.subspan(0, nw), grad, gslice.subspan(0, nw),
                                      gslice.subspan(nw), &dx);
        else
          kernels::dense_backward_serial(x, slice.subspan(0, nw), grad, gslice.subspan(0, nw),
                                         gslice.subspan(nw), &dx);
        grad = std::move(dx);
        break;
      }
      case LayerKind::relu: {
        auto g = grad.data();
        auto in = x.data();
        for (std::size_t k = 0; k < g.size(); ++k)
          if (!(in[k] > 0.0)) g[k] = 0.0;
        break;
      }
      case LayerKind::softmax_xent:
      case LayerKind::mse:
        throw UsageError("backward: loss head can only be the last layer");
    }
  }
  return {std::move(grads), std::move(grad), loss};
}

double Network::loss(const ParamVector& params, const Batch& batch) const {
  if (batch.size() == 0) throw UsageError("loss: empty batch");
  const std::size_t n = layers_.size();
  auto fwd = forward(params, batch.inputs, 0, n - 1);
  if (head_kind() == LayerKind::softmax_xent) return xent_from_logits(fwd.activations, batch.labels);
  return mse_loss(fwd.activations, batch.targets);
}

std::vector<int> Network::predict(const ParamVector& params, const Matrix& inputs) const {
  auto fwd = forward(params, inputs, 0, layers_.size());
  const Matrix& out = fwd.activations;
  std::vector<int> pred(out.rows());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    // max_element returns the first maximum, i.e. the lowest class index.
    pred[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return pred;
}

double accuracy(const Network& net, const ParamVector& params, const Matrix& inputs,
                std::span<const int> labels) {
  if (inputs.rows() == 0) throw UsageError("accuracy: empty dataset");
  if (labels.size() != inputs.rows()) throw UsageError("accuracy: label count mismatch");
  const auto pred = net.predict(params, inputs);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace smofi
