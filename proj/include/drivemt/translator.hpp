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

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "drivemt/dataset.hpp"
#include "drivemt/error.hpp"
#include "drivemt/image.hpp"
#include "drivemt/nn.hpp"

namespace drivemt {

// Parameters of the six networks of a two-domain shared-latent translator.
//
//   E_i = encoder_private[i] then encoder_shared
//   G_i = generator_shared then generator_private[i]
//   D_i = discriminator[i], producing a single logit
//
// The shared blocks tie the last encoder layer and the first generator layer
// across domains, so every G_j accepts the output of every E_i.
struct TranslatorParams {
  std::string preset;
  int height = 0;
  int width = 0;
  int channels = 3;

  std::array<nn::Stack, 2> encoder_private;
  nn::Stack encoder_shared;
  nn::Stack generator_shared;
  std::array<nn::Stack, 2> generator_private;
  std::array<nn::Stack, 2> discriminator;

  // Layer hyper-parameters and input size, one line per item. Two parameter
  // sets with equal descriptors are interchangeable.
  std::string descriptor() const;
  std::size_t parameter_count() const;
  nn::Shape input_shape() const { return {channels, height, width}; }
  nn::Shape latent_shape() const;
  // True when encoders and generators are fully convolutional and accept any
  // input whose sides are multiples of the total downsampling factor.
  bool size_agnostic() const;
  // Checks E/G/D shape compatibility for the configured input size; throws
  // DimensionError otherwise.
  void validate() const;

  friend bool operator==(const TranslatorParams&, const TranslatorParams&) = default;
};

struct ArchitectureOptions {
  // One of "tiny", "toy8", "toy32", "full", "linear".
  std::string preset = "toy32";
  // 0 selects the preset default size.
  int height = 0;
  int width = 0;
  // Latent vector length for the dense presets ("toy8", "linear").
  int latent_dim = 0;
};

// Builds a preset and initializes it from `seed`.
TranslatorParams make_translator(const ArchitectureOptions& options, std::uint64_t seed);

// Same structure as `params` with every weight zero.
TranslatorParams zeros_like(const TranslatorParams& params);

// "linear" preset whose encoders and generators are exact identities
// (latent_dim = height * width * channels) and whose discriminators output 0.5.
TranslatorParams make_identity_translator(int height, int width, int channels);

// Gradient buffers for the encoder/generator side and the discriminator side,
// in a fixed order shared with the optimizers.
std::vector<std::span<double>> generator_side_views(TranslatorParams& params);
std::vector<std::span<double>> discriminator_side_views(TranslatorParams& params);
std::vector<std::span<double>> all_parameter_views(TranslatorParams& params);

struct LatentCode {
  nn::Tensor z;
  std::size_t dimension() const { return z.size(); }
};

// Optional source of reparameterization noise. A null generator disables
// sampling, so encoding returns the latent mean.
struct NoiseSource {
  std::mt19937_64* rng = nullptr;
  explicit operator bool() const { return rng != nullptr; }
};

LatentCode encode(const TranslatorParams& params, const nn::Tensor& x, Domain domain,
                  NoiseSource noise = {});
nn::Tensor generate(const TranslatorParams& params, const LatentCode& z, Domain domain);

struct Translation {
  nn::Tensor image;
  // Set when from == to; the image is then the reconstruction G(E(x)).
  bool same_domain = false;
};

Translation translate(const TranslatorParams& params, const nn::Tensor& x, Domain from, Domain to);

// Translates a frame of any size. Frames the networks can consume directly
// are processed at native resolution; others are resized to the training
// size and back.
Image translate_frame(const TranslatorParams& params, const Image& frame, Domain from, Domain to);

enum class Distance { MeanAbsolute, MeanSquared };

double reconstruction_distance(const nn::Tensor& a, const nn::Tensor& b, Distance distance);

// KL divergence of N(mu, I) from N(0, I), averaged over latent entries.
double unit_gaussian_kl(const nn::Tensor& mu);

struct LossWeights {
  double vae = 10.0;
  double gan = 1.0;
  double cc = 10.0;
  // Weight of the latent prior term inside each VAE term.
  double prior = 0.01;
  Distance distance = Distance::MeanAbsolute;
};

struct VaeTerms {
  double reconstruction = 0.0;
  double prior = 0.0;
  double value(double prior_weight) const { return reconstruction + prior_weight * prior; }
};

VaeTerms vae_loss(const TranslatorParams& params, const nn::Tensor& x, Domain domain,
                  Distance distance = Distance::MeanAbsolute);

struct GanLosses {
  double discriminator = 0.0;
  double generator = 0.0;
};

// Binary cross-entropy losses from discriminator probabilities:
//   discriminator = -mean ln D(real) - mean ln(1 - D(fake))
//   generator     = -mean ln D(fake)
// Throws std::invalid_argument on an empty batch.
GanLosses bce_gan_losses(std::span<const double> real_probabilities,
                         std::span<const double> fake_probabilities);

double discriminate(const TranslatorParams& params, const nn::Tensor& x, Domain domain);

GanLosses gan_loss(const TranslatorParams& params, std::span<const nn::Tensor> real_batch,
                   std::span<const nn::Tensor> fake_batch, Domain domain);

// Distance between x and G_from(E_to(G_to(E_from(x)))).
double cycle_loss(const TranslatorParams& params, const nn::Tensor& x, Domain from,
                  Distance distance = Distance::MeanAbsolute);

struct LossBreakdown {
  double vae_1 = 0.0, vae_2 = 0.0;
  double gan_1 = 0.0, gan_2 = 0.0;
  double cc_1 = 0.0, cc_2 = 0.0;
  double total = 0.0;
  LossWeights weights;

  double weighted_sum() const {
    return weights.vae * (vae_1 + vae_2) + weights.gan * (gan_1 + gan_2) +
           weights.cc * (cc_1 + cc_2);
  }
  bool finite() const;
};

// gan_i holds the discriminator loss of D_i (fakes are G_i(E_j(x_j))).
LossBreakdown total_objective(const TranslatorParams& params, std::span<const nn::Tensor> batch_s1,
                              std::span<const nn::Tensor> batch_s2, const LossWeights& weights);

enum class ObjectiveMode {
  // Gradient of LossBreakdown::total with respect to every parameter.
  Full,
  // Encoder/generator update: vae + non-saturating generator loss + cycle.
  Generator,
  // Discriminator update: discriminator losses only, fakes held fixed.
  Discriminator,
};

struct ObjectiveGradient {
  LossBreakdown losses;
  // Same structure as the parameters. Entries not touched by the mode are 0.
  TranslatorParams gradient;
};

ObjectiveGradient objective_gradient(const TranslatorParams& params,
                                     std::span<const nn::Tensor> batch_s1,
                                     std::span<const nn::Tensor> batch_s2,
                                     const LossWeights& weights, ObjectiveMode mode,
                                     NoiseSource noise = {});

struct TrainConfig {
  std::int64_t steps = 500;
  int batch_size = 8;
  double lr_generator = 1e-4;
  double lr_discriminator = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  LossWeights weights;
  std::uint64_t seed = 0;
  // 0 disables periodic checkpoints.
  std::int64_t checkpoint_interval = 0;
  // Sample the latent around the encoder mean during training.
  bool latent_noise = true;

  void validate() const;
};

// Everything that determines the continuation of a training run.
struct TrainingState {
  TranslatorParams params;
  nn::Adam generator_optimizer;
  nn::Adam discriminator_optimizer;
  std::mt19937_64 rng;
  std::int64_t step = 0;

  friend bool operator==(const TrainingState&, const TrainingState&) = default;
};

TrainingState start_training(TranslatorParams params, const TrainConfig& config);

class TrainingDivergence : public Error {
 public:
  TrainingDivergence(std::int64_t step, LossBreakdown losses);
  std::int64_t step() const { return step_; }
  const LossBreakdown& losses() const { return losses_; }

 private:
  std::int64_t step_;
  LossBreakdown losses_;
};

// One alternating update: a discriminator step on the GAN terms, then an
// encoder/generator step against the updated discriminators. Throws
// TrainingDivergence (leaving `state` untouched) on a non-finite loss.
LossBreakdown train_step(TrainingState& state, std::span<const nn::Tensor> batch_s1,
                         std::span<const nn::Tensor> batch_s2, const TrainConfig& config);

struct TrainLogRow {
  std::int64_t step = 0;
  LossBreakdown losses;
};

struct TrainCallbacks {
  // Called every config.checkpoint_interval steps and after the final step.
  std::function<void(const TrainingState&)> on_checkpoint;
  std::function<void(const TrainLogRow&)> on_step;
};

struct TrainResult {
  TrainingState state;
  std::vector<TrainLogRow> log;
};

// Runs train steps from state.step + 1 to config.steps over batches drawn
// uniformly (with replacement, from state.rng) from each corpus.
TrainResult train(TrainingState state, std::span<const nn::Tensor> corpus_s1,
                  std::span<const nn::Tensor> corpus_s2, const TrainConfig& config,
                  const TrainCallbacks& callbacks = {});

// Loads both manifests, resizes frames to the translator input size and
// trains from freshly initialized parameters.
TrainResult train(const DatasetManifest& manifest_s1, const DatasetManifest& manifest_s2,
                  const ArchitectureOptions& architecture, const TrainConfig& config,
                  const TrainCallbacks& callbacks = {});

std::vector<nn::Tensor> load_corpus(const DatasetManifest& manifest, int height, int width);

void write_training_log(std::ostream& out, std::span<const TrainLogRow> log);
void write_training_log(const std::filesystem::path& path, std::span<const TrainLogRow> log);

struct Checkpoint {
  TrainingState state;
  std::uint64_t seed = 0;
  std::string alias_s1;
  std::string alias_s2;
};

// Versioned single-file container: magic, version, architecture descriptor,
// metadata, raw little-endian parameters and optimizer/RNG state.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
void save_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint load_checkpoint(std::istream& in);
// Throws CheckpointError unless the stored architecture equals `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const std::string& expected_descriptor);

}  // namespace drivemt
