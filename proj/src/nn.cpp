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

#include "drivemt/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "drivemt/error.hpp"

namespace drivemt::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

std::string shape_string(const Tensor& t) {
  return std::to_string(t.channels) + "x" + std::to_string(t.height) + "x" +
         std::to_string(t.width);
}

Tensor to_tensor(const Image& image) {
  Tensor t(image.channels(), image.height(), image.width());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < image.channels(); ++c) t.at(c, y, x) = image.at(y, x, c);
  return t;
}

Image to_image(const Tensor& tensor) {
  Image image(tensor.height, tensor.width, tensor.channels);
  for (int y = 0; y < tensor.height; ++y)
    for (int x = 0; x < tensor.width; ++x)
      for (int c = 0; c < tensor.channels; ++c)
        image.at(y, x, c) = static_cast<float>(tensor.at(c, y, x));
  return image;
}

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::ConvTranspose: return "deconv";
    case LayerKind::Dense: return "dense";
    case LayerKind::Reshape: return "reshape";
    case LayerKind::GlobalAvgPool: return "gap";
    case LayerKind::LeakyRelu: return "lrelu";
    case LayerKind::Sigmoid: return "sigmoid";
    case LayerKind::Tanh: return "tanh";
    case LayerKind::ShiftClamp: return "shiftclamp";
  }
  return "?";
}

namespace {

Layer make(LayerKind kind) {
  Layer l;
  l.kind = kind;
  return l;
}

void allocate(Layer& l) {
  switch (l.kind) {
    case LayerKind::Conv:
    case LayerKind::ConvTranspose:
      l.weight.assign(static_cast<std::size_t>(l.in_channels) * l.out_channels * l.kernel * l.kernel,
                      0.0);
      l.bias.assign(l.out_channels, 0.0);
      break;
    case LayerKind::Dense:
      l.weight.assign(static_cast<std::size_t>(l.in_channels) * l.out_channels, 0.0);
      l.bias.assign(l.out_channels, 0.0);
      break;
    default: break;
  }
}

// Range of source indices i in [0, n_src) whose target i*stride + k - pad
// lands in [0, n_dst). Empty when lo > hi.
struct Range {
  int lo, hi;
};

Range valid_range(int n_src, int n_dst, int stride, int k, int pad) {
  // i*stride >= pad - k
  const int num_lo = pad - k;
  int lo = num_lo <= 0 ? 0 : (num_lo + stride - 1) / stride;
  // i*stride <= n_dst - 1 + pad - k
  const int num_hi = n_dst - 1 + pad - k;
  int hi = num_hi < 0 ? -1 : num_hi / stride;
  lo = std::max(lo, 0);
  hi = std::min(hi, n_src - 1);
  return {lo, hi};
}

Shape layer_output(const Layer& l, Shape in) {
  auto fail = [&](const std::string& why) {
    throw DimensionError("layer '" + l.descriptor() + "' cannot take input " +
                         std::to_string(in.channels) + "x" + std::to_string(in.height) + "x" +
                         std::to_string(in.width) + ": " + why);
  };
  switch (l.kind) {
    case LayerKind::Conv: {
      if (in.channels != l.in_channels) fail("channel mismatch");
      const int h = (in.height + 2 * l.padding - l.kernel) / l.stride + 1;
      const int w = (in.width + 2 * l.padding - l.kernel) / l.stride + 1;
      if (h <= 0 || w <= 0) fail("input smaller than kernel");
      return {l.out_channels, h, w};
    }
    case LayerKind::ConvTranspose: {
      if (in.channels != l.in_channels) fail("channel mismatch");
      const int h = (in.height - 1) * l.stride - 2 * l.padding + l.kernel;
      const int w = (in.width - 1) * l.stride - 2 * l.padding + l.kernel;
      if (h <= 0 || w <= 0) fail("empty output");
      return {l.out_channels, h, w};
    }
    case LayerKind::Dense:
      if (in.channels * in.height * in.width != l.in_channels) fail("feature count mismatch");
      return {l.out_channels, 1, 1};
    case LayerKind::Reshape:
      if (in.channels * in.height * in.width != l.reshape_c * l.reshape_h * l.reshape_w) {
        fail("element count mismatch");
      }
      return {l.reshape_c, l.reshape_h, l.reshape_w};
    case LayerKind::GlobalAvgPool: return {in.channels, 1, 1};
    default: return in;
  }
}

void conv_forward(const Layer& l, const Tensor& in, Tensor& out) {
  const int k = l.kernel, s = l.stride, p = l.padding;
  for (int o = 0; o < l.out_channels; ++o) {
    double* out_plane = &out.data[static_cast<std::size_t>(o) * out.height * out.width];
    std::fill(out_plane, out_plane + out.height * out.width, l.bias[o]);
    for (int c = 0; c < l.in_channels; ++c) {
      const double* in_plane = &in.data[static_cast<std::size_t>(c) * in.height * in.width];
      for (int ky = 0; ky < k; ++ky) {
        const Range ry = valid_range(out.height, in.height, s, ky, p);
        for (int kx = 0; kx < k; ++kx) {
          const Range rx = valid_range(out.width, in.width, s, kx, p);
          const double w = l.weight[((static_cast<std::size_t>(o) * l.in_channels + c) * k + ky) * k + kx];
          for (int y = ry.lo; y <= ry.hi; ++y) {
            const double* src = in_plane + static_cast<std::size_t>(y * s + ky - p) * in.width;
            double* dst = out_plane + static_cast<std::size_t>(y) * out.width;
            for (int x = rx.lo; x <= rx.hi; ++x) dst[x] += w * src[x * s + kx - p];
          }
        }
      }
    }
  }
}

void conv_backward(const Layer& l, const Tensor& in, const Tensor& g_out, Tensor& g_in,
                   Layer* g_layer) {
  const int k = l.kernel, s = l.stride, p = l.padding;
  for (int o = 0; o < l.out_channels; ++o) {
    const double* g_plane = &g_out.data[static_cast<std::size_t>(o) * g_out.height * g_out.width];
    if (g_layer) {
      double sum = 0.0;
      for (int i = 0; i < g_out.height * g_out.width; ++i) sum += g_plane[i];
      g_layer->bias[o] += sum;
    }
    for (int c = 0; c < l.in_channels; ++c) {
      const double* in_plane = &in.data[static_cast<std::size_t>(c) * in.height * in.width];
      double* gin_plane = &g_in.data[static_cast<std::size_t>(c) * in.height * in.width];
      for (int ky = 0; ky < k; ++ky) {
        const Range ry = valid_range(g_out.height, in.height, s, ky, p);
        for (int kx = 0; kx < k; ++kx) {
          const Range rx = valid_range(g_out.width, in.width, s, kx, p);
          const std::size_t wi = ((static_cast<std::size_t>(o) * l.in_channels + c) * k + ky) * k + kx;
          const double w = l.weight[wi];
          double gw = 0.0;
          for (int y = ry.lo; y <= ry.hi; ++y) {
            const std::size_t row = static_cast<std::size_t>(y * s + ky - p) * in.width;
            const double* src = in_plane + row;
            double* gsrc = gin_plane + row;
            const double* g = g_plane + static_cast<std::size_t>(y) * g_out.width;
            for (int x = rx.lo; x <= rx.hi; ++x) {
              const int ix = x * s + kx - p;
              gw += src[ix] * g[x];
              gsrc[ix] += w * g[x];
            }
          }
          if (g_layer) g_layer->weight[wi] += gw;
        }
      }
    }
  }
}

void deconv_forward(const Layer& l, const Tensor& in, Tensor& out) {
  const int k = l.kernel, s = l.stride, p = l.padding;
  for (int o = 0; o < l.out_channels; ++o) {
    double* out_plane = &out.data[static_cast<std::size_t>(o) * out.height * out.width];
    std::fill(out_plane, out_plane + out.height * out.width, l.bias[o]);
  }
  for (int c = 0; c < l.in_channels; ++c) {
    const double* in_plane = &in.data[static_cast<std::size_t>(c) * in.height * in.width];
    for (int o = 0; o < l.out_channels; ++o) {
      double* out_plane = &out.data[static_cast<std::size_t>(o) * out.height * out.width];
      for (int ky = 0; ky < k; ++ky) {
        const Range ry = valid_range(in.height, out.height, s, ky, p);
        for (int kx = 0; kx < k; ++kx) {
          const Range rx = valid_range(in.width, out.width, s, kx, p);
          const double w = l.weight[((static_cast<std::size_t>(c) * l.out_channels + o) * k + ky) * k + kx];
          for (int y = ry.lo; y <= ry.hi; ++y) {
            const double* src = in_plane + static_cast<std::size_t>(y) * in.width;
            double* dst = out_plane + static_cast<std::size_t>(y * s + ky - p) * out.width;
            for (int x = rx.lo; x <= rx.hi; ++x) dst[x * s + kx - p] += w * src[x];
          }
        }
      }
    }
  }
}

void deconv_backward(const Layer& l, const Tensor& in, const Tensor& g_out, Tensor& g_in,
                     Layer* g_layer) {
  const int k = l.kernel, s = l.stride, p = l.padding;
  if (g_layer) {
    for (int o = 0; o < l.out_channels; ++o) {
      const double* g_plane = &g_out.data[static_cast<std::size_t>(o) * g_out.height * g_out.width];
      double sum = 0.0;
      for (int i = 0; i < g_out.height * g_out.width; ++i) sum += g_plane[i];
      g_layer->bias[o] += sum;
    }
  }
  for (int c = 0; c < l.in_channels; ++c) {
    const double* in_plane = &in.data[static_cast<std::size_t>(c) * in.height * in.width];
    double* gin_plane = &g_in.data[static_cast<std::size_t>(c) * in.height * in.width];
    for (int o = 0; o < l.out_channels; ++o) {
      const double* g_plane = &g_out.data[static_cast<std::size_t>(o) * g_out.height * g_out.width];
      for (int ky = 0; ky < k; ++ky) {
        const Range ry = valid_range(in.height, g_out.height, s, ky, p);
        for (int kx = 0; kx < k; ++kx) {
          const Range rx = valid_range(in.width, g_out.width, s, kx, p);
          const std::size_t wi = ((static_cast<std::size_t>(c) * l.out_channels + o) * k + ky) * k + kx;
          const double w = l.weight[wi];
          double gw = 0.0;
          for (int y = ry.lo; y <= ry.hi; ++y) {
            const std::size_t row = static_cast<std::size_t>(y) * in.width;
            const double* src = in_plane + row;
            double* gsrc = gin_plane + row;
            const double* g = g_plane + static_cast<std::size_t>(y * s + ky - p) * g_out.width;
            for (int x = rx.lo; x <= rx.hi; ++x) {
              const double gv = g[x * s + kx - p];
              gw += src[x] * gv;
              gsrc[x] += w * gv;
            }
          }
          if (g_layer) g_layer->weight[wi] += gw;
        }
      }
    }
  }
}

Tensor apply(const Layer& l, const Tensor& in) {
  const Shape s = layer_output(l, {in.channels, in.height, in.width});
  Tensor out(s.channels, s.height, s.width);
  switch (l.kind) {
    case LayerKind::Conv: conv_forward(l, in, out); break;
    case LayerKind::ConvTranspose: deconv_forward(l, in, out); break;
    case LayerKind::Dense:
      for (int o = 0; o < l.out_channels; ++o) {
        const double* row = &l.weight[static_cast<std::size_t>(o) * l.in_channels];
        double acc = l.bias[o];
        for (int i = 0; i < l.in_channels; ++i) acc += row[i] * in.data[i];
        out.data[o] = acc;
      }
      break;
    case LayerKind::Reshape: out.data = in.data; break;
    case LayerKind::GlobalAvgPool: {
      const int n = in.height * in.width;
      for (int c = 0; c < in.channels; ++c) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += in.data[static_cast<std::size_t>(c) * n + i];
        out.data[c] = acc / n;
      }
      break;
    }
    case LayerKind::LeakyRelu:
      for (std::size_t i = 0; i < in.size(); ++i) {
        const double v = in.data[i];
        out.data[i] = v > 0.0 ? v : l.slope * v;
      }
      break;
    case LayerKind::Sigmoid:
      for (std::size_t i = 0; i < in.size(); ++i) out.data[i] = sigmoid_value(in.data[i]);
      break;
    case LayerKind::Tanh:
      for (std::size_t i = 0; i < in.size(); ++i) out.data[i] = std::tanh(in.data[i]);
      break;
    case LayerKind::ShiftClamp:
      for (std::size_t i = 0; i < in.size(); ++i) out.data[i] = std::clamp(in.data[i] + 0.5, 0.0, 1.0);
      break;
  }
  return out;
}

Tensor apply_backward(const Layer& l, const Tensor& in, const Tensor& out, const Tensor& g_out,
                      Layer* g_layer) {
  Tensor g_in(in.channels, in.height, in.width);
  switch (l.kind) {
    case LayerKind::Conv: conv_backward(l, in, g_out, g_in, g_layer); break;
    case LayerKind::ConvTranspose: deconv_backward(l, in, g_out, g_in, g_layer); break;
    case LayerKind::Dense:
      for (int o = 0; o < l.out_channels; ++o) {
        const double g = g_out.data[o];
        if (g == 0.0) continue;
        const std::size_t base = static_cast<std::size_t>(o) * l.in_channels;
        for (int i = 0; i < l.in_channels; ++i) g_in.data[i] += l.weight[base + i] * g;
        if (g_layer) {
          for (int i = 0; i < l.in_channels; ++i) g_layer->weight[base + i] += in.data[i] * g;
          g_layer->bias[o] += g;
        }
      }
      break;
    case LayerKind::Reshape: g_in.data = g_out.data; break;
    case LayerKind::GlobalAvgPool: {
      const int n = in.height * in.width;
      for (int c = 0; c < in.channels; ++c) {
        const double g = g_out.data[c] / n;
        for (int i = 0; i < n; ++i) g_in.data[static_cast<std::size_t>(c) * n + i] = g;
      }
      break;
    }
    case LayerKind::LeakyRelu:
      for (std::size_t i = 0; i < in.size(); ++i)
        g_in.data[i] = in.data[i] > 0.0 ? g_out.data[i] : l.slope * g_out.data[i];
      break;
    case LayerKind::Sigmoid:
      for (std::size_t i = 0; i < in.size(); ++i)
        g_in.data[i] = g_out.data[i] * out.data[i] * (1.0 - out.data[i]);
      break;
    case LayerKind::Tanh:
      for (std::size_t i = 0; i < in.size(); ++i)
        g_in.data[i] = g_out.data[i] * (1.0 - out.data[i] * out.data[i]);
      break;
    case LayerKind::ShiftClamp:
      for (std::size_t i = 0; i < in.size(); ++i) {
        const double v = in.data[i] + 0.5;
        g_in.data[i] = (v > 0.0 && v < 1.0) ? g_out.data[i] : 0.0;
      }
      break;
  }
  return g_in;
}

}  // namespace

std::string Layer::descriptor() const {
  std::ostringstream out;
  out << to_string(kind);
  switch (kind) {
    case LayerKind::Conv:
    case LayerKind::ConvTranspose:
      out << ' ' << in_channels << ' ' << out_channels << ' ' << kernel << ' ' << stride << ' '
          << padding;
      break;
    case LayerKind::Dense: out << ' ' << in_channels << ' ' << out_channels; break;
    case LayerKind::Reshape: out << ' ' << reshape_c << ' ' << reshape_h << ' ' << reshape_w; break;
    case LayerKind::LeakyRelu: out << ' ' << slope; break;
    default: break;
  }
  return out.str();
}

Layer conv(int in, int out, int kernel, int stride, int padding) {
  Layer l = make(LayerKind::Conv);
  l.in_channels = in;
  l.out_channels = out;
  l.kernel = kernel;
  l.stride = stride;
  l.padding = padding;
  allocate(l);
  return l;
}

Layer conv_transpose(int in, int out, int kernel, int stride, int padding) {
  Layer l = conv(in, out, kernel, stride, padding);
  l.kind = LayerKind::ConvTranspose;
  return l;
}

Layer dense(int in, int out) {
  Layer l = make(LayerKind::Dense);
  l.in_channels = in;
  l.out_channels = out;
  allocate(l);
  return l;
}

Layer reshape(int c, int h, int w) {
  Layer l = make(LayerKind::Reshape);
  l.reshape_c = c;
  l.reshape_h = h;
  l.reshape_w = w;
  return l;
}

Layer global_avg_pool() { return make(LayerKind::GlobalAvgPool); }

Layer leaky_relu(double slope) {
  Layer l = make(LayerKind::LeakyRelu);
  l.slope = slope;
  return l;
}

Layer sigmoid() { return make(LayerKind::Sigmoid); }
Layer tanh_layer() { return make(LayerKind::Tanh); }
Layer shift_clamp() { return make(LayerKind::ShiftClamp); }

Layer parse_layer(const std::string& descriptor) {
  std::istringstream in(descriptor);
  std::string name;
  in >> name;
  auto ints = [&](int n) {
    std::vector<int> v(n);
    for (auto& x : v) {
      if (!(in >> x)) throw FormatError("bad layer descriptor '" + descriptor + "'");
    }
    return v;
  };
  if (name == "conv" || name == "deconv") {
    const auto v = ints(5);
    return name == "conv" ? conv(v[0], v[1], v[2], v[3], v[4])
                          : conv_transpose(v[0], v[1], v[2], v[3], v[4]);
  }
  if (name == "dense") {
    const auto v = ints(2);
    return dense(v[0], v[1]);
  }
  if (name == "reshape") {
    const auto v = ints(3);
    return reshape(v[0], v[1], v[2]);
  }
  if (name == "gap") return global_avg_pool();
  if (name == "lrelu") {
    double slope = 0.0;
    if (!(in >> slope)) throw FormatError("bad layer descriptor '" + descriptor + "'");
    return leaky_relu(slope);
  }
  if (name == "sigmoid") return sigmoid();
  if (name == "tanh") return tanh_layer();
  if (name == "shiftclamp") return shift_clamp();
  throw FormatError("unknown layer '" + name + "'");
}

Shape output_shape(const Stack& stack, Shape input) {
  for (const auto& l : stack) input = layer_output(l, input);
  return input;
}

std::size_t parameter_count(const Stack& stack) {
  std::size_t n = 0;
  for (const auto& l : stack) n += l.weight.size() + l.bias.size();
  return n;
}

Tensor forward(const Stack& stack, const Tensor& input, Trace* trace) {
  if (trace) {
    trace->clear();
    trace->reserve(stack.size() + 1);
    trace->push_back(input);
    for (const auto& l : stack) trace->push_back(apply(l, trace->back()));
    return trace->back();
  }
  Tensor x = input;
  for (const auto& l : stack) x = apply(l, x);
  return x;
}

Tensor backward(const Stack& stack, const Trace& trace, const Tensor& grad_output,
                Stack* param_grads) {
  if (trace.size() != stack.size() + 1) throw DimensionError("trace does not match stack");
  if (!grad_output.same_shape(trace.back())) {
    throw DimensionError("gradient shape " + shape_string(grad_output) + " != output shape " +
                         shape_string(trace.back()));
  }
  Tensor g = grad_output;
  for (std::size_t i = stack.size(); i-- > 0;) {
    Layer* gl = param_grads ? &(*param_grads)[i] : nullptr;
    g = apply_backward(stack[i], trace[i], trace[i + 1], g, gl);
  }
  return g;
}

Stack zeros_like(const Stack& stack) {
  Stack out = stack;
  for (auto& l : out) {
    std::fill(l.weight.begin(), l.weight.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return out;
}

void initialize(Stack& stack, std::mt19937_64& rng, double gain) {
  for (auto& l : stack) {
    if (!l.has_params()) continue;
    double fan_in = l.in_channels;
    if (l.kind == LayerKind::Conv) fan_in = double(l.in_channels) * l.kernel * l.kernel;
    if (l.kind == LayerKind::ConvTranspose)
      fan_in = double(l.in_channels) * l.kernel * l.kernel / (double(l.stride) * l.stride);
    std::normal_distribution<double> dist(0.0, gain / std::sqrt(std::max(1.0, fan_in)));
    for (auto& w : l.weight) w = dist(rng);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
}

std::vector<std::span<double>> parameter_views(Stack& stack) {
  std::vector<std::span<double>> views;
  for (auto& l : stack) {
    if (!l.has_params()) continue;
    views.emplace_back(l.weight);
    views.emplace_back(l.bias);
  }
  return views;
}

std::vector<std::span<const double>> parameter_views(const Stack& stack) {
  std::vector<std::span<const double>> views;
  for (const auto& l : stack) {
    if (!l.has_params()) continue;
    views.emplace_back(l.weight);
    views.emplace_back(l.bias);
  }
  return views;
}

void Adam::step(std::span<const std::span<double>> params,
                std::span<const std::span<const double>> grads, double learning_rate) {
  if (params.size() != grads.size()) throw DimensionError("parameter/gradient count mismatch");
  std::size_t total = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size()) throw DimensionError("parameter/gradient size mismatch");
    total += params[i].size();
  }
  if (m_.empty()) {
    m_.assign(total, 0.0);
    v_.assign(total, 0.0);
  } else if (m_.size() != total) {
    throw DimensionError("optimizer state does not match parameter count");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  std::size_t j = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t k = 0; k < params[i].size(); ++k, ++j) {
      const double g = grads[i][k];
      m_[j] = beta1_ * m_[j] + (1.0 - beta1_) * g;
      v_[j] = beta2_ * v_[j] + (1.0 - beta2_) * g * g;
      if (learning_rate == 0.0) continue;
      params[i][k] -= learning_rate * (m_[j] / c1) / (std::sqrt(v_[j] / c2) + epsilon_);
    }
  }
}

void Adam::save(std::ostream& out) const {
  write_doubles(out, std::vector<double>{beta1_, beta2_, epsilon_});
  write_u64(out, static_cast<std::uint64_t>(t_));
  write_doubles(out, m_);
  write_doubles(out, v_);
}

void Adam::load(std::istream& in) {
  const auto hyper = read_doubles(in);
  if (hyper.size() != 3) throw CheckpointError("corrupt optimizer state");
  beta1_ = hyper[0];
  beta2_ = hyper[1];
  epsilon_ = hyper[2];
  t_ = static_cast<std::int64_t>(read_u64(in));
  m_ = read_doubles(in);
  v_ = read_doubles(in);
  if (m_.size() != v_.size()) throw CheckpointError("corrupt optimizer moments");
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw CheckpointError("truncated file");
  return v;
}

void write_doubles(std::ostream& out, std::span<const double> values) {
  write_u64(out, values.size());
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
}

std::vector<double> read_doubles(std::istream& in) {
  const auto n = read_u64(in);
  if (n > (std::uint64_t{1} << 34)) throw CheckpointError("implausible array length");
  std::vector<double> v(n);
  if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)))) {
    throw CheckpointError("truncated file");
  }
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const auto n = read_u64(in);
  if (n > (std::uint64_t{1} << 30)) throw CheckpointError("implausible string length");
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw CheckpointError("truncated file");
  return s;
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace drivemt::nn
