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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "drivemt/synthetic.hpp"
#include "drivemt/translator.hpp"
#include "test_support.hpp"

using namespace drivemt;
using drivemt::testing::random_tensor;
using drivemt::testing::TempDir;
using nn::Tensor;

namespace {

constexpr double kTwoLn2 = 1.3862943611198906;

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

std::vector<Tensor> random_batch(std::size_t n, int h, int w, std::mt19937_64& rng) {
  std::vector<Tensor> b;
  for (std::size_t i = 0; i < n; ++i) b.push_back(random_tensor(3, h, w, rng));
  return b;
}

double gradient_check(TranslatorParams params, std::span<const Tensor> b1,
                      std::span<const Tensor> b2, const LossWeights& w, ObjectiveMode mode) {
  const auto analytic = objective_gradient(params, b1, b2, w, mode);
  auto grads = analytic.gradient;
  auto gviews = all_parameter_views(grads);
  auto pviews = all_parameter_views(params);
  const auto views_for_mode = [&] {
    if (mode == ObjectiveMode::Generator) return generator_side_views(params).size();
    return pviews.size();
  }();
  const std::size_t first = mode == ObjectiveMode::Discriminator ? generator_side_views(params).size() : 0;
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t v = first; v < views_for_mode; ++v) {
    for (std::size_t i = 0; i < pviews[v].size(); ++i) {
      const double saved = pviews[v][i];
      pviews[v][i] = saved + h;
      const double up = objective_gradient(params, b1, b2, w, mode).losses.total;
      pviews[v][i] = saved - h;
      const double down = objective_gradient(params, b1, b2, w, mode).losses.total;
      pviews[v][i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = gviews[v][i];
      const double rel = std::abs(a - numeric) / std::max(1e-6, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

// Linear translator with E_i = 2 P_i and G_i = (2 P_i)^-1 for random
// permutations P_i.
TranslatorParams permutation_translator(int h, int w, std::uint64_t seed) {
  auto p = make_identity_translator(h, w, 3);
  const int n = 3 * h * w;
  std::mt19937_64 rng(seed);
  const double scale[2] = {2.0, 2.0};
  for (int d = 0; d < 2; ++d) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto& enc = p.encoder_private[d][0];
    auto& gen = p.generator_private[d][0];
    std::fill(enc.weight.begin(), enc.weight.end(), 0.0);
    std::fill(gen.weight.begin(), gen.weight.end(), 0.0);
    for (int k = 0; k < n; ++k) {
      enc.weight[static_cast<std::size_t>(perm[k]) * n + k] = scale[d];
      gen.weight[static_cast<std::size_t>(k) * n + perm[k]] = 1.0 / scale[d];
    }
  }
  return p;
}

std::vector<Tensor> style_corpus(std::size_t n, int size, const SceneStyle& style, std::uint64_t seed) {
  std::vector<Tensor> out;
  for (const auto& f : make_drive(size, size, n, style, seed)) out.push_back(nn::to_tensor(f.image));
  return out;
}

double mean_total(std::span<const TrainLogRow> rows) {
  double s = 0.0;
  for (const auto& r : rows) s += r.losses.total;
  return s / static_cast<double>(rows.size());
}

}  // namespace

TEST_CASE("tiny preset gradient matches central differences") {
  auto params = make_translator({"tiny"}, 3);
  CHECK(params.parameter_count() <= 500);
  std::mt19937_64 rng(11);
  const auto b1 = random_batch(2, 4, 4, rng);
  const auto b2 = random_batch(1, 4, 4, rng);
  LossWeights w;
  w.distance = Distance::MeanSquared;
  CHECK(gradient_check(params, b1, b2, w, ObjectiveMode::Full) < 1e-3);
}

TEST_CASE("generator and discriminator step gradients match central differences") {
  auto params = make_translator({"tiny"}, 5);
  std::mt19937_64 rng(12);
  const auto b1 = random_batch(2, 4, 4, rng);
  const auto b2 = random_batch(2, 4, 4, rng);
  LossWeights w;
  w.distance = Distance::MeanSquared;
  CHECK(gradient_check(params, b1, b2, w, ObjectiveMode::Generator) < 1e-3);
  CHECK(gradient_check(params, b1, b2, w, ObjectiveMode::Discriminator) < 1e-3);
}

TEST_CASE("encode and generate shapes") {
  std::mt19937_64 rng(1);
  SUBCASE("zero encoder maps zero image to zero latent") {
    auto p = zeros_like(make_translator({"toy8"}, 1));
    const auto z = encode(p, Tensor(3, 8, 8), Domain::S1);
    CHECK(z.dimension() == 4);
    for (double v : z.z.data) CHECK(v == 0.0);
  }
  SUBCASE("encoding is deterministic without noise") {
    auto p = make_translator({"toy8"}, 2);
    const auto x = random_tensor(3, 8, 8, rng);
    CHECK(encode(p, x, Domain::S2).z == encode(p, x, Domain::S2).z);
  }
  SUBCASE("toy8 latent has the configured length") {
    auto p = make_translator({"toy8", 0, 0, 6}, 2);
    CHECK(encode(p, random_tensor(3, 8, 8, rng), Domain::S1).dimension() == 6);
  }
  SUBCASE("zero generator outputs mid grey") {
    auto p = zeros_like(make_translator({"toy8"}, 1));
    LatentCode z{Tensor(4, 1, 1)};
    const auto img = generate(p, z, Domain::S2);
    CHECK(img.channels == 3);
    CHECK(img.height == 8);
    CHECK(img.width == 8);
    for (double v : img.data) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("wrong input size is a dimension error") {
    auto p = make_translator({"toy8"}, 1);
    CHECK_THROWS_AS(encode(p, Tensor(3, 9, 8), Domain::S1), DimensionError);
  }
}

TEST_CASE("translation has the input shape for every domain pair") {
  std::mt19937_64 rng(4);
  for (const char* preset : {"tiny", "toy8", "toy32", "linear"}) {
    auto p = make_translator({preset}, 9);
    const auto x = random_tensor(3, p.height, p.width, rng);
    for (Domain from : {Domain::S1, Domain::S2}) {
      for (Domain to : {Domain::S1, Domain::S2}) {
        const auto t = translate(p, x, from, to);
        CHECK(t.image.same_shape(x));
        CHECK(t.same_domain == (from == to));
        for (double v : t.image.data) {
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
        }
      }
    }
  }
  auto full = make_translator({"full"}, 9);
  CHECK(full.height == kFrameHeight);
  CHECK(full.width == kFrameWidth);
  const auto x = random_tensor(3, full.height, full.width, rng);
  CHECK(translate(full, x, Domain::S1, Domain::S2).image.same_shape(x));
}

TEST_CASE("identity translator reproduces its input") {
  std::mt19937_64 rng(3);
  const auto p = make_identity_translator(4, 4, 3);
  const auto x = random_tensor(3, 4, 4, rng);
  CHECK(max_abs_diff(translate(p, x, Domain::S1, Domain::S2).image, x) < 1e-6);
  CHECK(max_abs_diff(translate(p, x, Domain::S2, Domain::S2).image, x) < 1e-6);
  CHECK(discriminate(p, x, Domain::S1) == doctest::Approx(0.5));
}

TEST_CASE("translate_frame keeps the frame size") {
  std::mt19937_64 rng(8);
  auto p = make_translator({"toy32"}, 4);
  const auto frame = drivemt::testing::random_image(48, 64, 3, rng);
  const auto out = translate_frame(p, frame, Domain::S1, Domain::S2);
  CHECK(out.same_shape(frame));
  auto dense = make_translator({"toy8"}, 4);
  const auto odd = drivemt::testing::random_image(30, 50, 3, rng);
  CHECK(translate_frame(dense, odd, Domain::S2, Domain::S1).same_shape(odd));
}

TEST_CASE("reconstruction distances") {
  Tensor a(3, 4, 4, 0.3), b(3, 4, 4, 0.4), c(3, 4, 4, 0.5);
  CHECK(reconstruction_distance(a, b, Distance::MeanSquared) == doctest::Approx(0.01));
  CHECK(reconstruction_distance(a, c, Distance::MeanAbsolute) == doctest::Approx(0.2));
  CHECK(reconstruction_distance(a, a, Distance::MeanAbsolute) == 0.0);
  CHECK_THROWS_AS(reconstruction_distance(a, Tensor(3, 4, 5), Distance::MeanAbsolute), DimensionError);

  std::mt19937_64 rng(2);
  const auto x = random_tensor(3, 4, 4, rng, 0.1, 0.9);
  auto y = x, nx = x, ny = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = (i % 3 == 0 ? 0.05 : -0.07);
    y.data[i] = x.data[i] + d;
    nx.data[i] = 1.0 - x.data[i];
    ny.data[i] = 1.0 - y.data[i];
  }
  for (Distance dist : {Distance::MeanAbsolute, Distance::MeanSquared}) {
    CHECK(reconstruction_distance(x, y, dist) == doctest::Approx(reconstruction_distance(y, x, dist)));
    CHECK(reconstruction_distance(x, y, dist) == doctest::Approx(reconstruction_distance(nx, ny, dist)));
  }
}

TEST_CASE("vae loss terms") {
  const auto p = make_identity_translator(4, 4, 3);
  const Tensor x(3, 4, 4, 0.25);
  const auto t = vae_loss(p, x, Domain::S1);
  CHECK(t.reconstruction == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(t.prior == doctest::Approx(0.5 * 0.0625));
  CHECK(unit_gaussian_kl(Tensor(4, 1, 1)) == 0.0);
}

TEST_CASE("gan losses") {
  const std::vector<double> half{0.5, 0.5, 0.5};
  const auto l = bce_gan_losses(half, half);
  CHECK(l.discriminator == doctest::Approx(kTwoLn2));
  CHECK(l.generator == doctest::Approx(std::log(2.0)));

  const std::vector<double> sure_real{1.0 - 1e-9}, sure_fake{1e-9};
  CHECK(bce_gan_losses(sure_real, sure_fake).discriminator < 1e-8);
  CHECK(bce_gan_losses(sure_fake, sure_real).discriminator > 40.0);
  CHECK_THROWS_AS(bce_gan_losses({}, half), std::invalid_argument);
  CHECK_THROWS_AS(bce_gan_losses(half, {}), std::invalid_argument);

  const auto p = make_identity_translator(4, 4, 3);
  std::mt19937_64 rng(5);
  const auto real = random_batch(3, 4, 4, rng);
  const auto fake = random_batch(2, 4, 4, rng);
  CHECK(gan_loss(p, real, fake, Domain::S2).discriminator == doctest::Approx(kTwoLn2));
}

TEST_CASE("cycle loss") {
  std::mt19937_64 rng(6);
  const auto x = random_tensor(3, 4, 4, rng, 0.05, 0.95);
  CHECK(cycle_loss(make_identity_translator(4, 4, 3), x, Domain::S1) < 1e-9);
  const auto p = permutation_translator(4, 4, 77);
  CHECK(max_abs_diff(translate(p, x, Domain::S1, Domain::S1).image, x) < 1e-6);
  CHECK(cycle_loss(p, x, Domain::S1) < 1e-6);
  CHECK(cycle_loss(p, x, Domain::S2, Distance::MeanSquared) < 1e-6);
}

TEST_CASE("total objective") {
  std::mt19937_64 rng(7);
  SUBCASE("zero weights give zero") {
    const auto p = make_translator({"tiny"}, 1);
    LossWeights w{0.0, 0.0, 0.0, 0.01, Distance::MeanAbsolute};
    const auto b = random_batch(2, 4, 4, rng);
    CHECK(total_objective(p, b, b, w).total == 0.0);
  }
  SUBCASE("identity nets on constant images") {
    const auto p = make_identity_translator(4, 4, 3);
    const std::vector<Tensor> b{Tensor(3, 4, 4, 0.25), Tensor(3, 4, 4, 0.25)};
    LossWeights w{1.0, 1.0, 1.0, 0.01, Distance::MeanAbsolute};
    const auto l = total_objective(p, b, b, w);
    CHECK(l.total == doctest::Approx(2.773213722239781).epsilon(1e-9));
    CHECK(l.gan_1 == doctest::Approx(kTwoLn2));
    CHECK(l.cc_2 == doctest::Approx(0.0));
  }
  SUBCASE("total is the weighted sum of the terms") {
    const auto p = make_translator({"toy8"}, 3);
    const auto b1 = random_batch(3, 8, 8, rng);
    const auto b2 = random_batch(2, 8, 8, rng);
    const auto l = total_objective(p, b1, b2, LossWeights{});
    CHECK(std::abs(l.total - l.weighted_sum()) < 1e-9);
    CHECK(l.finite());
  }
  SUBCASE("empty batch is rejected") {
    const auto p = make_translator({"tiny"}, 1);
    const auto b = random_batch(2, 4, 4, rng);
    CHECK_THROWS_AS(total_objective(p, b, {}, LossWeights{}), std::invalid_argument);
  }
}

TEST_CASE("train step") {
  std::mt19937_64 rng(9);
  const auto b1 = random_batch(4, 8, 8, rng);
  const auto b2 = random_batch(4, 8, 8, rng);
  TrainConfig cfg;
  cfg.batch_size = 4;
  SUBCASE("zero learning rate leaves parameters unchanged") {
    cfg.lr_generator = 0.0;
    cfg.lr_discriminator = 0.0;
    auto state = start_training(make_translator({"toy8"}, 1), cfg);
    const auto before = state.params;
    train_step(state, b1, b2, cfg);
    CHECK(state.params == before);
  }
  SUBCASE("a step changes both sides") {
    auto state = start_training(make_translator({"toy8"}, 1), cfg);
    const auto before = state.params;
    train_step(state, b1, b2, cfg);
    CHECK(state.params.discriminator[0] != before.discriminator[0]);
    CHECK(state.params.generator_private[1] != before.generator_private[1]);
  }
  SUBCASE("non-finite loss raises divergence and keeps the state") {
    auto state = start_training(make_translator({"toy8"}, 1), cfg);
    const auto before = state;
    auto bad = b1;
    bad[0].data[3] = std::nan("");
    CHECK_THROWS_AS(train_step(state, bad, b2, cfg), TrainingDivergence);
    CHECK(state == before);
  }
}

TEST_CASE("training loop") {
  const auto s1 = style_corpus(64, 8, fine_style(), 1);
  const auto s2 = style_corpus(64, 8, snowy_style(), 2);
  TrainConfig cfg;
  cfg.steps = 40;
  cfg.seed = 21;
  const auto params = make_translator({"toy8"}, 21);

  SUBCASE("same seed gives identical runs") {
    const auto a = train(start_training(params, cfg), s1, s2, cfg);
    const auto b = train(start_training(params, cfg), s1, s2, cfg);
    CHECK(a.state == b.state);
    REQUIRE(a.log.size() == 40);
    CHECK(a.log.back().step == 40);
  }
  SUBCASE("zero steps returns the initial parameters") {
    cfg.steps = 0;
    const auto r = train(start_training(params, cfg), s1, s2, cfg);
    CHECK(r.log.empty());
    CHECK(r.state.params == params);
  }
  SUBCASE("resuming from a checkpoint matches an uninterrupted run") {
    cfg.checkpoint_interval = 15;
    std::vector<TrainingState> saved;
    TrainCallbacks cb;
    cb.on_checkpoint = [&](const TrainingState& s) { saved.push_back(s); };
    const auto full = train(start_training(params, cfg), s1, s2, cfg, cb);
    REQUIRE(saved.size() == 3);
    CHECK(saved[0].step == 15);
    CHECK(saved.back() == full.state);

    std::stringstream buf;
    save_checkpoint(buf, Checkpoint{saved[0], cfg.seed, "fine", "snowy"});
    auto loaded = load_checkpoint(buf);
    const auto resumed = train(std::move(loaded.state), s1, s2, cfg);
    CHECK(resumed.state == full.state);
    CHECK(resumed.log.front().step == 16);
  }
  SUBCASE("empty corpus is rejected") {
    CHECK_THROWS_AS(train(start_training(params, cfg), {}, s2, cfg), EmptyInputError);
  }
}

TEST_CASE("toy corpus loss decreases over 500 steps") {
  const auto s1 = style_corpus(64, 8, fine_style(), 3);
  const auto s2 = style_corpus(64, 8, snowy_style(), 4);
  TrainConfig cfg;
  cfg.steps = 500;
  cfg.lr_generator = 1e-3;
  cfg.lr_discriminator = 1e-3;
  cfg.seed = 5;
  const auto r = train(start_training(make_translator({"toy8"}, 5), cfg), s1, s2, cfg);
  REQUIRE(r.log.size() == 500);
  const std::span<const TrainLogRow> log(r.log);
  CHECK(mean_total(log.subspan(450)) < mean_total(log.first(50)));
}

TEST_CASE("training log") {
  std::vector<TrainLogRow> rows(2);
  rows[0].step = 1;
  rows[1].step = 2;
  rows[1].losses.total = 3.5;
  std::ostringstream out;
  write_training_log(out, rows);
  const auto text = out.str();
  CHECK(text.rfind("step,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("checkpoints") {
  TempDir dir("ckpt");
  TrainConfig cfg;
  cfg.seed = 4;
  auto state = start_training(make_translator({"toy32"}, 4), cfg);
  state.step = 12;
  const Checkpoint ck{state, 4, "fine", "snowy"};
  const auto path = dir / "t.ckpt";
  save_checkpoint(path, ck);
  CHECK_FALSE(std::filesystem::exists(dir / "t.ckpt.tmp"));

  SUBCASE("round trip is exact") {
    const auto back = load_checkpoint(path);
    CHECK(back.state == state);
    CHECK(back.seed == 4);
    CHECK(back.alias_s1 == "fine");
    CHECK(back.alias_s2 == "snowy");
  }
  SUBCASE("architecture mismatch is reported") {
    const auto other = make_translator({"toy8"}, 1).descriptor();
    CHECK_THROWS_AS(load_checkpoint(path, other), CheckpointError);
    CHECK_NOTHROW(load_checkpoint(path, state.params.descriptor()));
  }
  SUBCASE("corrupt files are reported") {
    auto bytes = drivemt::testing::slurp(path);
    std::istringstream truncated(bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(load_checkpoint(truncated), CheckpointError);
    bytes[0] = 'X';
    std::istringstream bad_magic(bytes);
    CHECK_THROWS_AS(load_checkpoint(bad_magic), CheckpointError);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), CheckpointError);
  }
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.lr_generator = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(make_translator({"huge"}, 1), ConfigError);
}
