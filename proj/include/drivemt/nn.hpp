/* Copyright 2026 The drivemt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "drivemt/image.hpp"

namespace drivemt::nn {

// Planar channels x height x width tensor in double precision.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
  double& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::string shape_string(const Tensor& t);

// HWC float image <-> CHW double tensor.
Tensor to_tensor(const Image& image);
Image to_image(const Tensor& tensor);

enum class LayerKind {
  Conv,           // weight [out][in][k][k]
  ConvTranspose,  // weight [in][out][k][k]
  Dense,          // weight [out][in], input flattened
  Reshape,        // (C*H*W) -> (channels, height, width)
  GlobalAvgPool,  // (C, H, W) -> (C, 1, 1)
  LeakyRelu,
  Sigmoid,
  Tanh,
  ShiftClamp,  // clamp(x + 0.5, 0, 1)
};

std::string to_string(LayerKind kind);

struct Layer {
  LayerKind kind = LayerKind::LeakyRelu;
  int in_channels = 0;   // Dense: input features
  int out_channels = 0;  // Dense: output features
  int kernel = 0;
  int stride = 1;
  int padding = 0;
  int reshape_c = 0, reshape_h = 0, reshape_w = 0;
  double slope = 0.2;
  std::vector<double> weight;
  std::vector<double> bias;

  bool has_params() const {
    return kind == LayerKind::Conv || kind == LayerKind::ConvTranspose || kind == LayerKind::Dense;
  }
  // Hyper-parameters only, e.g. "conv 3 8 4 2 1".
  std::string descriptor() const;
  friend bool operator==(const Layer&, const Layer&) = default;
};

Layer conv(int in, int out, int kernel, int stride, int padding);
Layer conv_transpose(int in, int out, int kernel, int stride, int padding);
Layer dense(int in, int out);
Layer reshape(int c, int h, int w);
Layer global_avg_pool();
Layer leaky_relu(double slope = 0.2);
Layer sigmoid();
Layer tanh_layer();
Layer shift_clamp();

Layer parse_layer(const std::string& descriptor);

using Stack = std::vector<Layer>;

struct Shape {
  int channels, height, width;
  friend bool operator==(const Shape&, const Shape&) = default;
};

// Throws DimensionError when the stack cannot consume `input`.
Shape output_shape(const Stack& stack, Shape input);

std::size_t parameter_count(const Stack& stack);

// Activations of one forward pass: acts[0] is the input, acts[i + 1] the
// output of layer i.
using Trace = std::vector<Tensor>;

Tensor forward(const Stack& stack, const Tensor& input, Trace* trace = nullptr);

// Back-propagates `grad_output` through a recorded pass. Parameter gradients
// are accumulated into `param_grads` (same structure as `stack`) when it is
// not null. Returns the gradient with respect to the stack input.
Tensor backward(const Stack& stack, const Trace& trace, const Tensor& grad_output,
                Stack* param_grads);

// Copy of `stack` with every parameter set to zero.
Stack zeros_like(const Stack& stack);

// Scaled normal initialization, std = gain / sqrt(fan_in); biases zero.
void initialize(Stack& stack, std::mt19937_64& rng, double gain = 1.0);

// Flat views over all parameter buffers, weight then bias per layer.
std::vector<std::span<double>> parameter_views(Stack& stack);
std::vector<std::span<const double>> parameter_views(const Stack& stack);

// Adaptive-moment optimizer over a fixed list of parameter buffers.
class Adam {
 public:
  Adam(double beta1 = 0.5, double beta2 = 0.999, double epsilon = 1e-8)
      : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

  // params[i] and grads[i] must keep identical sizes across calls.
  void step(std::span<const std::span<double>> params,
            std::span<const std::span<const double>> grads, double learning_rate);

  std::int64_t steps() const { return t_; }

  void save(std::ostream& out) const;
  void load(std::istream& in);

  friend bool operator==(const Adam&, const Adam&) = default;

 private:
  double beta1_, beta2_, epsilon_;
  std::int64_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

// Binary serialization helpers (little-endian host assumed).
void write_u64(std::ostream& out, std::uint64_t v);
std::uint64_t read_u64(std::istream& in);
void write_doubles(std::ostream& out, std::span<const double> values);
std::vector<double> read_doubles(std::istream& in);
void write_string(std::ostream& out, const std::string& s);
std::string read_string(std::istream& in);

// Numerically stable log(1 + exp(x)).
double softplus(double x);
double sigmoid_value(double x);

}  // namespace drivemt::nn
