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
#include <span>
#include <string>
#include <vector>

namespace smofi {

enum class Exec { serial, parallel };

enum class LayerKind { dense, relu, softmax_xent, mse };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  bool bias = true;  // dense only

  std::size_t param_count() const;
  // Multiply-accumulate count per sample; zero for non-dense layers.
  std::uint64_t macs() const;
  bool is_head() const { return kind == LayerKind::softmax_xent || kind == LayerKind::mse; }

  static LayerSpec dense(std::size_t in, std::size_t out, bool bias = true);
  static LayerSpec relu(std::size_t dim);
  static LayerSpec softmax_xent(std::size_t classes);
  static LayerSpec mse(std::size_t dim);
};

// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Flat parameter (or gradient, or momentum) storage for a contiguous range of
// layers [first_layer, first_layer + layer_count()). offsets() has one entry
// per layer plus a trailing total; layers without parameters occupy an empty
// slice, so offsets are non-decreasing rather than strictly increasing.
class ParamVector {
 public:
  ParamVector() : offsets_{0} {}
  ParamVector(std::vector<double> values, std::vector<std::size_t> offsets,
              std::size_t first_layer = 0);

  static ParamVector zeros(std::vector<std::size_t> offsets, std::size_t first_layer = 0);
  static ParamVector zeros_like(const ParamVector& other);

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  std::size_t first_layer() const { return first_layer_; }
  std::size_t layer_count() const { return offsets_.size() - 1; }
  std::size_t end_layer() const { return first_layer_ + layer_count(); }
  const std::vector<std::size_t>& offsets() const { return offsets_; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // Slice for a layer, addressed by its index in the full model.
  std::span<double> layer(std::size_t model_layer);
  std::span<const double> layer(std::size_t model_layer) const;

  bool same_shape(const ParamVector& other) const;

  // Copy of the sub-range [from, to) of model layers.
  ParamVector slice_layers(std::size_t from, std::size_t to) const;
  // Concatenates two adjacent ranges; lower.end_layer() must equal upper.first_layer().
  static ParamVector concat(const ParamVector& lower, const ParamVector& upper);

  ParamVector& operator+=(const ParamVector& rhs);
  ParamVector& operator-=(const ParamVector& rhs);
  ParamVector& operator*=(double s);
  // this += a * x
  ParamVector& axpy(double a, const ParamVector& x);
  void set_zero();

  bool all_finite() const;
  double norm() const;

  // Bit-level equality of values and layout.
  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
  std::vector<std::size_t> offsets_;
  std::size_t first_layer_ = 0;
};

ParamVector operator+(ParamVector lhs, const ParamVector& rhs);
ParamVector operator-(ParamVector lhs, const ParamVector& rhs);
ParamVector operator*(double s, ParamVector v);

// Throws UsageError naming `what` when shapes differ.
void require_same_shape(const ParamVector& a, const ParamVector& b, const char* what);

// Inputs plus supervision: integer labels for a softmax head, real targets
// (B x out_dim) for a squared-error head.
struct Batch {
  Matrix inputs;
  std::vector<int> labels;
  Matrix targets;

  std::size_t size() const { return inputs.rows(); }
};

// Values saved by forward() for the matching backward() call.
struct ForwardCache {
  std::size_t from = 0;
  std::size_t to = 0;
  bool valid = false;
  std::vector<Matrix> layer_inputs;  // input of every layer in [from, to)
  Matrix output;                     // output of layer to-1 (probabilities at a softmax head)
};

struct ForwardResult {
  Matrix activations;
  ForwardCache cache;
};

struct BackwardResult {
  ParamVector grads;   // covers layers [cache.from, cache.to)
  Matrix input_grad;   // gradient w.r.t. the input of layer cache.from
  double loss = 0.0;   // mean batch loss when the head was included, else 0
};

class Network {
 public:
  explicit Network(std::vector<LayerSpec> layers, Exec exec = Exec::serial);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::size_t layer_count() const { return layers_.size(); }
  std::size_t param_count() const { return offsets_.back(); }
  const std::vector<std::size_t>& offsets() const { return offsets_; }
  std::size_t input_dim() const { return layers_.front().in_dim; }
  std::size_t output_dim() const { return layers_.back().out_dim; }
  LayerKind head_kind() const { return layers_.back().kind; }
  Exec exec() const { return exec_; }

  // Layout for the layer range [from, to), relative offsets.
  std::vector<std::size_t> range_offsets(std::size_t from, std::size_t to) const;
  ParamVector zeros(std::size_t from, std::size_t to) const;
  ParamVector zeros() const { return zeros(0, layer_count()); }

  // Glorot-uniform weights, zero biases.
  ParamVector init_params(std::uint64_t seed) const;

  // Runs layers [from, to). `params` may cover a wider range than [from, to).
  ForwardResult forward(const ParamVector& params, const Matrix& input, std::size_t from,
                        std::size_t to) const;

  // Backpropagates an upstream gradient w.r.t. the output of layer cache.to-1.
  BackwardResult backward(const ParamVector& params, const ForwardCache& cache,
                          const Matrix& upstream) const;
  // Backpropagates the mean batch loss; the cache must end at the loss head.
  BackwardResult backward(const ParamVector& params, const ForwardCache& cache,
                          const Batch& batch) const;

  // Mean batch loss of the full model.
  double loss(const ParamVector& params, const Batch& batch) const;

  // Argmax class per row, ties to the lowest index.
  std::vector<int> predict(const ParamVector& params, const Matrix& inputs) const;

 private:
  void check_params(const ParamVector& params, std::size_t from, std::size_t to) const;
  BackwardResult backward_impl(const ParamVector& params, const ForwardCache& cache,
                               Matrix grad, double loss) const;

  std::vector<LayerSpec> layers_;
  std::vector<std::size_t> offsets_;
  Exec exec_;
};

// Fraction of rows whose argmax prediction equals the label.
double accuracy(const Network& net, const ParamVector& params, const Matrix& inputs,
                std::span<const int> labels);

}  // namespace smofi
