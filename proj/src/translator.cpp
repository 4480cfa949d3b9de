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

#include "drivemt/translator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "text_util.hpp"

namespace drivemt {

using nn::Stack;
using nn::Tensor;

namespace {

bool has_dense(const Stack& stack) {
  return std::any_of(stack.begin(), stack.end(), [](const nn::Layer& l) {
    return l.kind == nn::LayerKind::Dense || l.kind == nn::LayerKind::Reshape;
  });
}

template <typename P, typename F>
void for_each_stack(P& p, F&& f) {
  f(p.encoder_private[0]);
  f(p.encoder_private[1]);
  f(p.encoder_shared);
  f(p.generator_shared);
  f(p.generator_private[0]);
  f(p.generator_private[1]);
  f(p.discriminator[0]);
  f(p.discriminator[1]);
}

void append(std::vector<std::span<double>>& out, Stack& stack) {
  for (auto v : nn::parameter_views(stack)) out.push_back(v);
}

std::vector<std::span<const double>> const_views(const std::vector<std::span<double>>& views) {
  return {views.begin(), views.end()};
}

}  // namespace

std::string TranslatorParams::descriptor() const {
  std::ostringstream out;
  out << "preset " << preset << '\n'
      << "input " << channels << ' ' << height << ' ' << width << '\n';
  auto stack = [&](const char* name, const Stack& s) {
    out << name << ' ' << s.size() << '\n';
    for (const auto& l : s) out << "  " << l.descriptor() << '\n';
  };
  stack("encoder_private_1", encoder_private[0]);
  stack("encoder_private_2", encoder_private[1]);
  stack("encoder_shared", encoder_shared);
  stack("generator_shared", generator_shared);
  stack("generator_private_1", generator_private[0]);
  stack("generator_private_2", generator_private[1]);
  stack("discriminator_1", discriminator[0]);
  stack("discriminator_2", discriminator[1]);
  return out.str();
}

std::size_t TranslatorParams::parameter_count() const {
  std::size_t n = 0;
  for_each_stack(*this, [&](const Stack& s) { n += nn::parameter_count(s); });
  return n;
}

nn::Shape TranslatorParams::latent_shape() const {
  return nn::output_shape(encoder_shared, nn::output_shape(encoder_private[0], input_shape()));
}

bool TranslatorParams::size_agnostic() const {
  return !has_dense(encoder_private[0]) && !has_dense(encoder_private[1]) &&
         !has_dense(encoder_shared) && !has_dense(generator_shared) &&
         !has_dense(generator_private[0]) && !has_dense(generator_private[1]);
}

void TranslatorParams::validate() const {
  const nn::Shape in = input_shape();
  const nn::Shape latent = latent_shape();
  for (int i = 0; i < 2; ++i) {
    const auto z = nn::output_shape(encoder_shared, nn::output_shape(encoder_private[i], in));
    if (!(z == latent)) throw DimensionError("encoders disagree on the latent shape");
    const auto out = nn::output_shape(generator_private[i], nn::output_shape(generator_shared, latent));
    if (!(out == in)) throw DimensionError("generator output shape differs from the input shape");
    const auto d = nn::output_shape(discriminator[i], in);
    if (!(d == nn::Shape{1, 1, 1})) throw DimensionError("discriminator must produce one logit");
  }
}

namespace {

TranslatorParams build_preset(const ArchitectureOptions& o) {
  using namespace nn;
  TranslatorParams p;
  p.preset = o.preset;
  p.channels = 3;
  auto size = [&](int h, int w) {
    p.height = o.height > 0 ? o.height : h;
    p.width = o.width > 0 ? o.width : w;
  };

  if (o.preset == "tiny") {
    size(4, 4);
    for (int i = 0; i < 2; ++i) {
      p.encoder_private[i] = {conv(3, 2, 3, 1, 1), leaky_relu()};
      p.generator_private[i] = {conv(2, 3, 3, 1, 1), sigmoid()};
      const int cells = ((p.height + 1) / 2) * ((p.width + 1) / 2);
      p.discriminator[i] = {conv(3, 2, 3, 2, 1), leaky_relu(), dense(2 * cells, 1)};
    }
    p.encoder_shared = {conv(2, 2, 3, 2, 1)};
    p.generator_shared = {conv_transpose(2, 2, 4, 2, 1), leaky_relu()};
  } else if (o.preset == "toy8") {
    size(8, 8);
    const int latent = o.latent_dim > 0 ? o.latent_dim : 4;
    const int fh = p.height / 2, fw = p.width / 2;
    for (int i = 0; i < 2; ++i) {
      p.encoder_private[i] = {conv(3, 8, 4, 2, 1), leaky_relu()};
      p.generator_private[i] = {conv_transpose(8, 3, 4, 2, 1), sigmoid()};
      p.discriminator[i] = {conv(3, 8, 4, 2, 1), leaky_relu(), dense(8 * fh * fw, 1)};
    }
    p.encoder_shared = {dense(8 * fh * fw, latent)};
    p.generator_shared = {dense(latent, 8 * fh * fw), reshape(8, fh, fw), leaky_relu()};
  } else if (o.preset == "toy32") {
    size(32, 32);
    for (int i = 0; i < 2; ++i) {
      p.encoder_private[i] = {conv(3, 16, 4, 2, 1), leaky_relu(), conv(16, 32, 4, 2, 1), leaky_relu()};
      p.generator_private[i] = {conv_transpose(32, 16, 4, 2, 1), leaky_relu(),
                                conv_transpose(16, 3, 4, 2, 1), sigmoid()};
      p.discriminator[i] = {conv(3, 8, 4, 2, 1), leaky_relu(), conv(8, 16, 4, 2, 1), leaky_relu(),
                            conv(16, 1, 3, 1, 1), global_avg_pool()};
    }
    p.encoder_shared = {conv(32, 32, 3, 1, 1)};
    p.generator_shared = {conv(32, 32, 3, 1, 1), leaky_relu()};
  } else if (o.preset == "full") {
    size(kFrameHeight, kFrameWidth);
    for (int i = 0; i < 2; ++i) {
      p.encoder_private[i] = {conv(3, 16, 4, 2, 1), leaky_relu(), conv(16, 32, 4, 2, 1),
                              leaky_relu(), conv(32, 64, 4, 2, 1), leaky_relu()};
      p.generator_private[i] = {conv_transpose(64, 32, 4, 2, 1), leaky_relu(),
                                conv_transpose(32, 16, 4, 2, 1), leaky_relu(),
                                conv_transpose(16, 3, 4, 2, 1), sigmoid()};
      p.discriminator[i] = {conv(3, 16, 4, 2, 1),  leaky_relu(), conv(16, 32, 4, 2, 1),
                            leaky_relu(),          conv(32, 64, 4, 2, 1), leaky_relu(),
                            conv(64, 1, 3, 1, 1), global_avg_pool()};
    }
    p.encoder_shared = {conv(64, 64, 3, 1, 1)};
    p.generator_shared = {conv(64, 64, 3, 1, 1), leaky_relu()};
  } else if (o.preset == "linear") {
    size(4, 4);
    const int features = p.channels * p.height * p.width;
    const int latent = o.latent_dim > 0 ? o.latent_dim : features;
    for (int i = 0; i < 2; ++i) {
      p.encoder_private[i] = {dense(features, latent)};
      p.generator_private[i] = {dense(latent, features), reshape(p.channels, p.height, p.width),
                                shift_clamp()};
      p.discriminator[i] = {dense(features, 1)};
    }
  } else {
    throw ConfigError("unknown translator preset '" + o.preset + "'");
  }
  return p;
}

}  // namespace

TranslatorParams make_translator(const ArchitectureOptions& options, std::uint64_t seed) {
  TranslatorParams p = build_preset(options);
  p.validate();
  std::mt19937_64 rng(seed);
  for_each_stack(p, [&](Stack& s) { nn::initialize(s, rng); });
  return p;
}

TranslatorParams zeros_like(const TranslatorParams& params) {
  TranslatorParams z = params;
  for_each_stack(z, [](Stack& s) { s = nn::zeros_like(s); });
  return z;
}

TranslatorParams make_identity_translator(int height, int width, int channels) {
  if (channels != 3) throw DimensionError("identity translator expects 3 channels");
  ArchitectureOptions o{"linear", height, width, 0};
  TranslatorParams p = zeros_like(build_preset(o));
  const int n = channels * height * width;
  for (int i = 0; i < 2; ++i) {
    auto& enc = p.encoder_private[i][0];
    auto& gen = p.generator_private[i][0];
    for (int k = 0; k < n; ++k) {
      enc.weight[static_cast<std::size_t>(k) * n + k] = 1.0;
      gen.weight[static_cast<std::size_t>(k) * n + k] = 1.0;
      gen.bias[k] = -0.5;
    }
  }
  return p;
}

std::vector<std::span<double>> generator_side_views(TranslatorParams& p) {
  std::vector<std::span<double>> v;
  append(v, p.encoder_private[0]);
  append(v, p.encoder_private[1]);
  append(v, p.encoder_shared);
  append(v, p.generator_shared);
  append(v, p.generator_private[0]);
  append(v, p.generator_private[1]);
  return v;
}

std::vector<std::span<double>> discriminator_side_views(TranslatorParams& p) {
  std::vector<std::span<double>> v;
  append(v, p.discriminator[0]);
  append(v, p.discriminator[1]);
  return v;
}

std::vector<std::span<double>> all_parameter_views(TranslatorParams& p) {
  auto v = generator_side_views(p);
  for (auto d : discriminator_side_views(p)) v.push_back(d);
  return v;
}

// ---------------------------------------------------------------------------
// Forward/backward building blocks.

namespace {

struct EncoderTrace {
  nn::Trace priv, shared;
};
struct GeneratorTrace {
  nn::Trace shared, priv;
};

void check_input(const TranslatorParams& p, const Tensor& x) {
  if (x.channels != p.channels) {
    throw DimensionError("input has " + std::to_string(x.channels) + " channels, translator expects " +
                         std::to_string(p.channels));
  }
  if (!p.size_agnostic() && (x.height != p.height || x.width != p.width)) {
    throw DimensionError("input " + nn::shape_string(x) + " does not match translator input " +
                         std::to_string(p.channels) + "x" + std::to_string(p.height) + "x" +
                         std::to_string(p.width));
  }
}

Tensor run_encoder(const TranslatorParams& p, Domain d, const Tensor& x, EncoderTrace* t) {
  const Tensor h = nn::forward(p.encoder_private[index_of(d)], x, t ? &t->priv : nullptr);
  return nn::forward(p.encoder_shared, h, t ? &t->shared : nullptr);
}

Tensor encoder_backward(const TranslatorParams& p, Domain d, const EncoderTrace& t, const Tensor& g,
                        TranslatorParams* grads) {
  const Tensor gh = nn::backward(p.encoder_shared, t.shared, g, grads ? &grads->encoder_shared : nullptr);
  return nn::backward(p.encoder_private[index_of(d)], t.priv, gh,
                      grads ? &grads->encoder_private[index_of(d)] : nullptr);
}

Tensor run_generator(const TranslatorParams& p, Domain d, const Tensor& z, GeneratorTrace* t) {
  const Tensor h = nn::forward(p.generator_shared, z, t ? &t->shared : nullptr);
  return nn::forward(p.generator_private[index_of(d)], h, t ? &t->priv : nullptr);
}

Tensor generator_backward(const TranslatorParams& p, Domain d, const GeneratorTrace& t,
                          const Tensor& g, TranslatorParams* grads) {
  const Tensor gh = nn::backward(p.generator_private[index_of(d)], t.priv, g,
                                 grads ? &grads->generator_private[index_of(d)] : nullptr);
  return nn::backward(p.generator_shared, t.shared, gh, grads ? &grads->generator_shared : nullptr);
}

double run_discriminator(const TranslatorParams& p, Domain d, const Tensor& x, nn::Trace* t) {
  const Tensor out = nn::forward(p.discriminator[index_of(d)], x, t);
  if (out.size() != 1) throw DimensionError("discriminator must produce one logit");
  return out.data[0];
}

Tensor discriminator_backward(const TranslatorParams& p, Domain d, const nn::Trace& t,
                              double g_logit, TranslatorParams* grads) {
  Tensor g(1, 1, 1, g_logit);
  return nn::backward(p.discriminator[index_of(d)], t, g,
                      grads ? &grads->discriminator[index_of(d)] : nullptr);
}

void add_noise(Tensor& z, NoiseSource noise) {
  if (!noise) return;
  std::normal_distribution<double> dist(0.0, 1.0);
  for (double& v : z.data) v += dist(*noise.rng);
}

// d distance / d a, scaled by `scale`.
Tensor distance_gradient(const Tensor& a, const Tensor& b, Distance distance, double scale) {
  Tensor g(a.channels, a.height, a.width);
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = a.data[i] - b.data[i];
    if (distance == Distance::MeanAbsolute) {
      g.data[i] = scale * ((r > 0.0) - (r < 0.0)) / n;
    } else {
      g.data[i] = scale * 2.0 * r / n;
    }
  }
  return g;
}

void add_into(Tensor& acc, const Tensor& g) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += g.data[i];
}

}  // namespace

LatentCode encode(const TranslatorParams& params, const Tensor& x, Domain domain, NoiseSource noise) {
  check_input(params, x);
  LatentCode code{run_encoder(params, domain, x, nullptr)};
  add_noise(code.z, noise);
  return code;
}

Tensor generate(const TranslatorParams& params, const LatentCode& z, Domain domain) {
  const auto expected = params.size_agnostic() ? nn::Shape{} : params.latent_shape();
  if (!params.size_agnostic() &&
      !(nn::Shape{z.z.channels, z.z.height, z.z.width} == expected)) {
    throw DimensionError("latent " + nn::shape_string(z.z) + " does not match the translator latent");
  }
  if (z.z.size() == 0) throw DimensionError("empty latent code");
  return run_generator(params, domain, z.z, nullptr);
}

Translation translate(const TranslatorParams& params, const Tensor& x, Domain from, Domain to) {
  Translation t;
  t.same_domain = from == to;
  t.image = generate(params, encode(params, x, from), to);
  return t;
}

Image translate_frame(const TranslatorParams& params, const Image& frame, Domain from, Domain to) {
  if (frame.channels() != params.channels) {
    throw DimensionError("frame has " + std::to_string(frame.channels()) + " channels");
  }
  bool native = frame.height() == params.height && frame.width() == params.width;
  if (!native && params.size_agnostic()) {
    try {
      const nn::Shape in{frame.channels(), frame.height(), frame.width()};
      const auto z = nn::output_shape(params.encoder_shared,
                                      nn::output_shape(params.encoder_private[index_of(from)], in));
      const auto out = nn::output_shape(params.generator_private[index_of(to)],
                                        nn::output_shape(params.generator_shared, z));
      native = out == in;
    } catch (const DimensionError&) {
      native = false;
    }
  }
  if (native) return nn::to_image(translate(params, nn::to_tensor(frame), from, to).image);
  const Image small = resize_bilinear(frame, params.height, params.width);
  Image out = nn::to_image(translate(params, nn::to_tensor(small), from, to).image);
  out = resize_bilinear(out, frame.height(), frame.width());
  clamp_unit(out);
  return out;
}

double reconstruction_distance(const Tensor& a, const Tensor& b, Distance distance) {
  if (!a.same_shape(b)) {
    throw DimensionError("cannot compare " + nn::shape_string(a) + " with " + nn::shape_string(b));
  }
  if (a.size() == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = a.data[i] - b.data[i];
    acc += distance == Distance::MeanAbsolute ? std::abs(r) : r * r;
  }
  return acc / static_cast<double>(a.size());
}

double unit_gaussian_kl(const Tensor& mu) {
  if (mu.size() == 0) return 0.0;
  double acc = 0.0;
  for (double m : mu.data) acc += m * m;
  return 0.5 * acc / static_cast<double>(mu.size());
}

VaeTerms vae_loss(const TranslatorParams& params, const Tensor& x, Domain domain, Distance distance) {
  const LatentCode z = encode(params, x, domain);
  const Tensor rec = generate(params, z, domain);
  return {reconstruction_distance(rec, x, distance), unit_gaussian_kl(z.z)};
}

GanLosses bce_gan_losses(std::span<const double> real, std::span<const double> fake) {
  if (real.empty() || fake.empty()) throw std::invalid_argument("GAN loss needs non-empty batches");
  double real_term = 0.0, fake_term = 0.0, gen_term = 0.0;
  for (double p : real) real_term -= std::log(p);
  for (double p : fake) {
    fake_term -= std::log1p(-p);
    gen_term -= std::log(p);
  }
  const double nr = static_cast<double>(real.size());
  const double nf = static_cast<double>(fake.size());
  return {real_term / nr + fake_term / nf, gen_term / nf};
}

double discriminate(const TranslatorParams& params, const Tensor& x, Domain domain) {
  check_input(params, x);
  return nn::sigmoid_value(run_discriminator(params, domain, x, nullptr));
}

GanLosses gan_loss(const TranslatorParams& params, std::span<const Tensor> real_batch,
                   std::span<const Tensor> fake_batch, Domain domain) {
  if (real_batch.empty() || fake_batch.empty()) {
    throw std::invalid_argument("GAN loss needs non-empty batches");
  }
  // Logit form of the BCE terms: -ln sigmoid(l) = softplus(-l).
  double real_term = 0.0, fake_term = 0.0, gen_term = 0.0;
  for (const auto& x : real_batch) {
    check_input(params, x);
    real_term += nn::softplus(-run_discriminator(params, domain, x, nullptr));
  }
  for (const auto& x : fake_batch) {
    check_input(params, x);
    const double l = run_discriminator(params, domain, x, nullptr);
    fake_term += nn::softplus(l);
    gen_term += nn::softplus(-l);
  }
  const double nr = static_cast<double>(real_batch.size());
  const double nf = static_cast<double>(fake_batch.size());
  return {real_term / nr + fake_term / nf, gen_term / nf};
}

double cycle_loss(const TranslatorParams& params, const Tensor& x, Domain from, Distance distance) {
  const Domain to = other(from);
  const Tensor there = translate(params, x, from, to).image;
  const Tensor back = translate(params, there, to, from).image;
  return reconstruction_distance(back, x, distance);
}

bool LossBreakdown::finite() const {
  for (double v : {vae_1, vae_2, gan_1, gan_2, cc_1, cc_2, total}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Objective evaluation with gradients.

namespace {

struct Accumulator {
  std::array<double, 2> recon{}, prior{}, gan{}, cc{};
};

// Contribution of one sample x from domain `a` (batch size n).
void sample_terms(const TranslatorParams& p, const Tensor& x, Domain a, double n,
                  const LossWeights& w, ObjectiveMode mode, NoiseSource noise, Accumulator& acc,
                  TranslatorParams* grads) {
  const Domain b = other(a);
  const int ia = index_of(a), ib = index_of(b);
  const bool want = grads != nullptr;

  if (mode == ObjectiveMode::Discriminator) {
    Tensor z = run_encoder(p, a, x, nullptr);
    add_noise(z, noise);
    const Tensor fake = run_generator(p, b, z, nullptr);
    nn::Trace t_fake, t_real;
    const double lf = run_discriminator(p, b, fake, want ? &t_fake : nullptr);
    const double lr = run_discriminator(p, a, x, want ? &t_real : nullptr);
    acc.gan[ib] += nn::softplus(lf) / n;
    acc.gan[ia] += nn::softplus(-lr) / n;
    if (want) {
      discriminator_backward(p, b, t_fake, w.gan * nn::sigmoid_value(lf) / n, grads);
      discriminator_backward(p, a, t_real, -w.gan * nn::sigmoid_value(-lr) / n, grads);
    }
    return;
  }

  EncoderTrace te_a, te_b;
  GeneratorTrace tg_rec, tg_fake, tg_cyc;
  nn::Trace td_fake, td_real;

  const Tensor mu = run_encoder(p, a, x, want ? &te_a : nullptr);
  Tensor z = mu;
  add_noise(z, noise);
  const Tensor rec = run_generator(p, a, z, want ? &tg_rec : nullptr);
  const Tensor fake = run_generator(p, b, z, want ? &tg_fake : nullptr);
  const Tensor mu_b = run_encoder(p, b, fake, want ? &te_b : nullptr);
  Tensor z_b = mu_b;
  add_noise(z_b, noise);
  const Tensor cyc = run_generator(p, a, z_b, want ? &tg_cyc : nullptr);
  const double lf = run_discriminator(p, b, fake, want ? &td_fake : nullptr);

  acc.recon[ia] += reconstruction_distance(rec, x, w.distance) / n;
  acc.prior[ia] += unit_gaussian_kl(mu) / n;
  acc.cc[ia] += reconstruction_distance(cyc, x, w.distance) / n;

  double g_lf = 0.0;
  if (mode == ObjectiveMode::Full) {
    acc.gan[ib] += nn::softplus(lf) / n;
    g_lf = w.gan * nn::sigmoid_value(lf) / n;
    nn::Trace t_real;
    const double lr = run_discriminator(p, a, x, want ? &td_real : nullptr);
    acc.gan[ia] += nn::softplus(-lr) / n;
    if (want) discriminator_backward(p, a, td_real, -w.gan * nn::sigmoid_value(-lr) / n, grads);
  } else {
    acc.gan[ib] += nn::softplus(-lf) / n;
    g_lf = -w.gan * nn::sigmoid_value(-lf) / n;
  }
  if (!want) return;

  // Discriminator parameters only receive gradient from the full objective.
  TranslatorParams* d_grads = mode == ObjectiveMode::Full ? grads : nullptr;
  Tensor g_fake = discriminator_backward(p, b, td_fake, g_lf, d_grads);

  const Tensor g_cyc = distance_gradient(cyc, x, w.distance, w.cc / n);
  const Tensor g_zb = generator_backward(p, a, tg_cyc, g_cyc, grads);
  add_into(g_fake, encoder_backward(p, b, te_b, g_zb, grads));

  Tensor g_z = generator_backward(p, b, tg_fake, g_fake, grads);
  const Tensor g_rec = distance_gradient(rec, x, w.distance, w.vae / n);
  add_into(g_z, generator_backward(p, a, tg_rec, g_rec, grads));

  const double prior_scale = w.vae * w.prior / n / static_cast<double>(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) g_z.data[i] += prior_scale * mu.data[i];
  encoder_backward(p, a, te_a, g_z, grads);
}

ObjectiveGradient evaluate(const TranslatorParams& params, std::span<const Tensor> b1,
                           std::span<const Tensor> b2, const LossWeights& w, ObjectiveMode mode,
                           NoiseSource noise, bool want_gradient) {
  if (b1.empty() || b2.empty()) throw std::invalid_argument("objective needs non-empty batches");
  for (const auto& x : b1) check_input(params, x);
  for (const auto& x : b2) check_input(params, x);

  ObjectiveGradient result;
  TranslatorParams* grads = nullptr;
  if (want_gradient) {
    result.gradient = zeros_like(params);
    grads = &result.gradient;
  }
  Accumulator acc;
  for (const auto& x : b1)
    sample_terms(params, x, Domain::S1, double(b1.size()), w, mode, noise, acc, grads);
  for (const auto& x : b2)
    sample_terms(params, x, Domain::S2, double(b2.size()), w, mode, noise, acc, grads);

  auto& l = result.losses;
  l.weights = w;
  l.vae_1 = acc.recon[0] + w.prior * acc.prior[0];
  l.vae_2 = acc.recon[1] + w.prior * acc.prior[1];
  l.gan_1 = acc.gan[0];
  l.gan_2 = acc.gan[1];
  l.cc_1 = acc.cc[0];
  l.cc_2 = acc.cc[1];
  if (mode == ObjectiveMode::Discriminator) {
    l.vae_1 = l.vae_2 = l.cc_1 = l.cc_2 = 0.0;
  }
  l.total = l.weighted_sum();
  return result;
}

}  // namespace

LossBreakdown total_objective(const TranslatorParams& params, std::span<const Tensor> batch_s1,
                              std::span<const Tensor> batch_s2, const LossWeights& weights) {
  return evaluate(params, batch_s1, batch_s2, weights, ObjectiveMode::Full, {}, false).losses;
}

ObjectiveGradient objective_gradient(const TranslatorParams& params, std::span<const Tensor> batch_s1,
                                     std::span<const Tensor> batch_s2, const LossWeights& weights,
                                     ObjectiveMode mode, NoiseSource noise) {
  return evaluate(params, batch_s1, batch_s2, weights, mode, noise, true);
}

// ---------------------------------------------------------------------------
// Training.

void TrainConfig::validate() const {
  if (steps < 0) throw ConfigError("steps must be non-negative");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (!(lr_generator >= 0.0) || !(lr_discriminator >= 0.0)) {
    throw ConfigError("learning rates must be non-negative");
  }
  if (weights.vae < 0 || weights.gan < 0 || weights.cc < 0 || weights.prior < 0) {
    throw ConfigError("loss weights must be non-negative");
  }
  if (checkpoint_interval < 0) throw ConfigError("checkpoint_interval must be non-negative");
}

TrainingState start_training(TranslatorParams params, const TrainConfig& config) {
  config.validate();
  params.validate();
  TrainingState s{std::move(params), nn::Adam(config.beta1, config.beta2),
                  nn::Adam(config.beta1, config.beta2), std::mt19937_64(config.seed), 0};
  // Decorrelate the training stream from the initialization stream.
  s.rng.discard(1024);
  return s;
}

namespace {
std::string divergence_message(std::int64_t step, const LossBreakdown& l) {
  std::ostringstream out;
  out << "training diverged at step " << step << ": vae=(" << l.vae_1 << "," << l.vae_2 << ") gan=("
      << l.gan_1 << "," << l.gan_2 << ") cc=(" << l.cc_1 << "," << l.cc_2 << ") total=" << l.total;
  return out.str();
}
}  // namespace

TrainingDivergence::TrainingDivergence(std::int64_t step, LossBreakdown losses)
    : Error(divergence_message(step, losses)), step_(step), losses_(losses) {}

LossBreakdown train_step(TrainingState& state, std::span<const Tensor> batch_s1,
                         std::span<const Tensor> batch_s2, const TrainConfig& config) {
  TrainingState next = state;
  NoiseSource noise{config.latent_noise ? &next.rng : nullptr};
  const std::int64_t step = state.step + 1;

  auto d = evaluate(next.params, batch_s1, batch_s2, config.weights, ObjectiveMode::Discriminator,
                    noise, true);
  LossBreakdown report = d.losses;
  if (!report.finite()) throw TrainingDivergence(step, report);
  next.discriminator_optimizer.step(discriminator_side_views(next.params),
                                    const_views(discriminator_side_views(d.gradient)),
                                    config.lr_discriminator);

  auto g = evaluate(next.params, batch_s1, batch_s2, config.weights, ObjectiveMode::Generator, noise,
                    true);
  report.vae_1 = g.losses.vae_1;
  report.vae_2 = g.losses.vae_2;
  report.cc_1 = g.losses.cc_1;
  report.cc_2 = g.losses.cc_2;
  report.total = report.weighted_sum();
  if (!report.finite() || !std::isfinite(g.losses.total)) throw TrainingDivergence(step, report);
  next.generator_optimizer.step(generator_side_views(next.params),
                                const_views(generator_side_views(g.gradient)), config.lr_generator);

  for (auto view : all_parameter_views(next.params)) {
    for (double v : view) {
      if (!std::isfinite(v)) throw TrainingDivergence(step, report);
    }
  }
  next.step = step;
  state = std::move(next);
  return report;
}

TrainResult train(TrainingState state, std::span<const Tensor> corpus_s1,
                  std::span<const Tensor> corpus_s2, const TrainConfig& config,
                  const TrainCallbacks& callbacks) {
  config.validate();
  if (corpus_s1.empty() || corpus_s2.empty()) throw EmptyInputError("training corpus is empty");

  TrainResult result{std::move(state), {}};
  auto& s = result.state;
  std::vector<Tensor> b1(config.batch_size), b2(config.batch_size);
  while (s.step < config.steps) {
    std::uniform_int_distribution<std::size_t> pick1(0, corpus_s1.size() - 1);
    std::uniform_int_distribution<std::size_t> pick2(0, corpus_s2.size() - 1);
    for (auto& x : b1) x = corpus_s1[pick1(s.rng)];
    for (auto& x : b2) x = corpus_s2[pick2(s.rng)];
    const LossBreakdown losses = train_step(s, b1, b2, config);
    result.log.push_back({s.step, losses});
    if (callbacks.on_step) callbacks.on_step(result.log.back());
    const bool periodic = config.checkpoint_interval > 0 && s.step % config.checkpoint_interval == 0;
    if (callbacks.on_checkpoint && (periodic || s.step == config.steps)) callbacks.on_checkpoint(s);
  }
  return result;
}

std::vector<Tensor> load_corpus(const DatasetManifest& manifest, int height, int width) {
  FrameStream stream(manifest);
  if (stream.size() == 0) {
    throw EmptyInputError("manifest '" + manifest.dataset_id + "' has no included frames");
  }
  std::vector<Tensor> corpus;
  corpus.reserve(stream.size());
  for (const auto& record : stream) {
    corpus.push_back(nn::to_tensor(resize_bilinear(record.image, height, width)));
  }
  return corpus;
}

TrainResult train(const DatasetManifest& manifest_s1, const DatasetManifest& manifest_s2,
                  const ArchitectureOptions& architecture, const TrainConfig& config,
                  const TrainCallbacks& callbacks) {
  if (manifest_s1.domain.value == manifest_s2.domain.value) {
    throw ConfigError("training manifests must come from distinct domains");
  }
  const DatasetManifest& m1 = manifest_s1.domain.value == Domain::S1 ? manifest_s1 : manifest_s2;
  const DatasetManifest& m2 = manifest_s1.domain.value == Domain::S1 ? manifest_s2 : manifest_s1;
  TranslatorParams params = make_translator(architecture, config.seed);
  const auto c1 = load_corpus(m1, params.height, params.width);
  const auto c2 = load_corpus(m2, params.height, params.width);
  return train(start_training(std::move(params), config), c1, c2, config, callbacks);
}

void write_training_log(std::ostream& out, std::span<const TrainLogRow> log) {
  out << "step,vae_1,vae_2,gan_1,gan_2,cc_1,cc_2,total\n";
  using detail::format_double;
  for (const auto& row : log) {
    const auto& l = row.losses;
    out << row.step << ',' << format_double(l.vae_1) << ',' << format_double(l.vae_2) << ','
        << format_double(l.gan_1) << ',' << format_double(l.gan_2) << ',' << format_double(l.cc_1)
        << ',' << format_double(l.cc_2) << ',' << format_double(l.total) << '\n';
  }
}

void write_training_log(const std::filesystem::path& path, std::span<const TrainLogRow> log) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write training log: " + path.string());
  write_training_log(out, log);
}

// ---------------------------------------------------------------------------
// Checkpoints.

namespace {

constexpr char kMagic[8] = {'D', 'R', 'V', 'M', 'T', 'C', 'K', 'P'};
constexpr std::uint64_t kVersion = 1;

TranslatorParams parse_descriptor(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  TranslatorParams p;
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw CheckpointError("truncated architecture descriptor");
    return detail::trim(line);
  };
  {
    std::istringstream l(next_line());
    std::string key;
    l >> key >> p.preset;
    if (key != "preset") throw CheckpointError("descriptor: expected preset");
  }
  {
    std::istringstream l(next_line());
    std::string key;
    l >> key >> p.channels >> p.height >> p.width;
    if (key != "input" || !l) throw CheckpointError("descriptor: expected input size");
  }
  auto stack = [&](const char* name, Stack& s) {
    std::istringstream l(next_line());
    std::string key;
    std::size_t n = 0;
    l >> key >> n;
    if (key != name || !l) throw CheckpointError(std::string("descriptor: expected ") + name);
    s.clear();
    for (std::size_t i = 0; i < n; ++i) {
      try {
        s.push_back(nn::parse_layer(next_line()));
      } catch (const FormatError& e) {
        throw CheckpointError(std::string("descriptor: ") + e.what());
      }
    }
  };
  stack("encoder_private_1", p.encoder_private[0]);
  stack("encoder_private_2", p.encoder_private[1]);
  stack("encoder_shared", p.encoder_shared);
  stack("generator_shared", p.generator_shared);
  stack("generator_private_1", p.generator_private[0]);
  stack("generator_private_2", p.generator_private[1]);
  stack("discriminator_1", p.discriminator[0]);
  stack("discriminator_2", p.discriminator[1]);
  return p;
}

}  // namespace

void save_checkpoint(std::ostream& out, const Checkpoint& ck) {
  out.write(kMagic, sizeof kMagic);
  nn::write_u64(out, kVersion);
  const auto& s = ck.state;
  nn::write_string(out, s.params.descriptor());
  std::ostringstream meta;
  meta << "seed=" << ck.seed << "\nstep=" << s.step << "\nalias_s1=" << ck.alias_s1
       << "\nalias_s2=" << ck.alias_s2 << '\n';
  nn::write_string(out, meta.str());
  TranslatorParams copy = s.params;
  for (auto view : all_parameter_views(copy)) nn::write_doubles(out, view);
  s.generator_optimizer.save(out);
  s.discriminator_optimizer.save(out);
  std::ostringstream rng;
  rng << s.rng;
  nn::write_string(out, rng.str());
  if (!out) throw IngestionError("checkpoint write failed");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IngestionError("cannot write checkpoint: " + path.string());
    save_checkpoint(out, ck);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(std::istream& in) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kMagic)) {
    throw CheckpointError("not a translator checkpoint");
  }
  const auto version = nn::read_u64(in);
  if (version != kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  auto& s = ck.state;
  s.params = parse_descriptor(nn::read_string(in));
  try {
    s.params.validate();
  } catch (const DimensionError& e) {
    throw CheckpointError(std::string("inconsistent architecture: ") + e.what());
  }

  std::istringstream meta(nn::read_string(in));
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const auto key = line.substr(0, eq);
    const auto value = line.substr(eq + 1);
    if (key == "seed") ck.seed = std::stoull(value);
    else if (key == "step") s.step = std::stoll(value);
    else if (key == "alias_s1") ck.alias_s1 = value;
    else if (key == "alias_s2") ck.alias_s2 = value;
  }

  for (auto view : all_parameter_views(s.params)) {
    const auto values = nn::read_doubles(in);
    if (values.size() != view.size()) {
      throw CheckpointError("parameter block of " + std::to_string(values.size()) +
                            " values does not match the architecture (" +
                            std::to_string(view.size()) + ")");
    }
    std::copy(values.begin(), values.end(), view.begin());
  }
  s.generator_optimizer.load(in);
  s.discriminator_optimizer.load(in);
  std::istringstream rng(nn::read_string(in));
  rng >> s.rng;
  if (!rng) throw CheckpointError("corrupt RNG state");
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
  try {
    return load_checkpoint(in);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::string& expected) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.state.params.descriptor() != expected) {
    throw CheckpointError(path.string() + ": architecture mismatch\nstored:\n" +
                          ck.state.params.descriptor() + "expected:\n" + expected);
  }
  return ck;
}

}  // namespace drivemt
