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

#include <cmath>
#include <random>

#include "doctest.h"
#include "drivemt/harness.hpp"
#include "drivemt/models.hpp"
#include "test_support.hpp"

using namespace drivemt;
using drivemt::testing::random_image;
using drivemt::testing::TempDir;

namespace {

const std::string kStub = std::string(DRIVEMT_TEST_DATA) + "/stub_model.sh";

std::vector<FrameRecord> drive_stream(std::size_t n, std::uint64_t seed, int h = 48, int w = 64) {
  std::vector<FrameRecord> s;
  const auto frames = make_drive(h, w, n, fine_style(), seed);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    FrameRecord r;
    r.frame_id = "d" + std::to_string(i);
    r.image = frames[i].image;
    r.steering_degrees = frames[i].steering_degrees;
    r.sequence_index = i;
    s.push_back(std::move(r));
  }
  return s;
}

FrameRecord flat_frame(float value) {
  FrameRecord r;
  r.frame_id = "flat";
  r.image = Image(6, 8, 3, value);
  return r;
}

// Predicts the values it is given, in order.
class ScriptedModel : public SteeringModel {
 public:
  explicit ScriptedModel(std::vector<double> values) : values_(std::move(values)) {}
  std::string id() const override { return "scripted"; }
  double predict(const FrameRecord&) override { return values_[next_++ % values_.size()]; }
  void reset() override { next_ = 0; }

 private:
  std::vector<double> values_;
  std::size_t next_ = 0;
};

std::unique_ptr<SteeringModel> stub(const std::string& args, long timeout_ms = 10000) {
  ExternalModelOptions o;
  o.command = kStub + " " + args;
  o.model_id = "stub";
  o.timeout = std::chrono::milliseconds(timeout_ms);
  return external_model(o);
}

}  // namespace

TEST_CASE("constant model") {
  std::mt19937_64 rng(1);
  auto m = constant_model(0.0);
  const auto stream = drive_stream(20, 1);
  for (const auto& p : run_model(*m, stream)) CHECK(p.degrees == 0.0);
  auto fogged = apply_relation(baseline_transform(BaselineKind::Fog, {}), stream);
  const auto pairs = pair_predictions(run_model(*m, stream), run_model(*m, fogged));
  for (const auto& r : sweep_bounds(pairs, default_bounds())) CHECK(r.count == 0);
  CHECK(m->window_size() == 1);
  m->reset();
  CHECK(m->predict(stream[0]) == 0.0);
}

TEST_CASE("brightness model") {
  auto m = brightness_model(100.0);
  CHECK(m->predict(flat_frame(0.5f)) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(m->predict(flat_frame(0.7f)) == doctest::Approx(20.0).epsilon(1e-5));

  std::mt19937_64 rng(2);
  FrameRecord r;
  r.image = random_image(10, 10, 3, rng);
  for (float& v : r.image.data()) v = 0.1f + 0.5f * v;
  const double base = m->predict(r);
  for (float& v : r.image.data()) v += 0.25f;
  CHECK(m->predict(r) - base == doctest::Approx(25.0).epsilon(1e-5));
}

TEST_CASE("fog above the brightness threshold flags every frame") {
  auto m = brightness_model(100.0);
  const auto stream = drive_stream(40, 3);
  BaselineParams p;
  p.fog_weight = 0.5;
  const auto fogged = apply_relation(baseline_transform(BaselineKind::Fog, p), stream);
  const auto pairs = pair_predictions(run_model(*m, stream), run_model(*m, fogged));
  CHECK(inconsistency_count(pairs, ErrorBound(10)) == stream.size());
}

TEST_CASE("toy cnn") {
  ToyCnnConfig cfg;
  cfg.seed = 4;
  SUBCASE("loss decreases on 200 frames") {
    cfg.epochs = 15;
    const auto frames = drive_stream(200, 5);
    const auto t = train_toy_cnn(frames, cfg);
    REQUIRE(t.epoch_losses.size() == 15);
    CHECK(t.epoch_losses.back() < t.epoch_losses.front());
  }
  SUBCASE("memorizes ten frames") {
    cfg.epochs = 400;
    cfg.batch_size = 10;
    const auto frames = drive_stream(10, 6);
    auto t = train_toy_cnn(frames, cfg);
    double mae = 0.0;
    for (const auto& f : frames) mae += std::abs(t.model->predict(f) - *f.steering_degrees);
    CHECK(mae / 10.0 < 1.0);
  }
  SUBCASE("same seed gives the same model") {
    cfg.epochs = 3;
    const auto frames = drive_stream(30, 7);
    auto a = train_toy_cnn(frames, cfg);
    auto b = train_toy_cnn(frames, cfg);
    CHECK(a.epoch_losses == b.epoch_losses);
    CHECK(run_model(*a.model, frames) == run_model(*b.model, frames));
  }
  SUBCASE("unlabelled frames are rejected") {
    auto frames = drive_stream(5, 8);
    frames[2].steering_degrees.reset();
    CHECK_THROWS_AS(train_toy_cnn(frames, cfg), DataError);
    CHECK_THROWS_AS(train_toy_cnn(std::span<const FrameRecord>{}, cfg), DataError);
  }
}

TEST_CASE("windowed model") {
  const auto stream = drive_stream(150, 9, 12, 16);
  SUBCASE("window of one equals the inner model") {
    auto inner = brightness_model(80.0);
    auto w = windowed_model(brightness_model(80.0), 1);
    CHECK(run_model(*w, stream) == run_model(*inner, stream));
  }
  SUBCASE("constant inner model for any window") {
    for (int window : {1, 7, 100}) {
      auto w = windowed_model(constant_model(4.5), window);
      CHECK(w->window_size() == window);
      for (const auto& p : run_model(*w, stream)) CHECK(p.degrees == doctest::Approx(4.5));
    }
  }
  SUBCASE("mean over the window") {
    auto w = windowed_model(std::make_unique<ScriptedModel>(std::vector<double>{0, 30, 30}), 3);
    const auto preds = run_model(*w, std::span(stream).first(3));
    CHECK(preds[0].degrees == doctest::Approx(0.0));
    CHECK(preds[1].degrees == doctest::Approx(10.0));
    CHECK(preds[2].degrees == doctest::Approx(20.0));
  }
  SUBCASE("reset and replay is identical") {
    auto w = windowed_model(brightness_model(50.0), 100);
    const auto a = run_model(*w, stream);
    const auto b = run_model(*w, stream);
    CHECK(a == b);
    CHECK(a.size() == 150);
  }
  CHECK_THROWS_AS(windowed_model(constant_model(0), 0), ConfigError);
}

TEST_CASE("external model") {
  const auto stream = drive_stream(8, 10, 12, 16);
  SUBCASE("constant stub behaves like the constant model") {
    auto ext = stub("12.25");
    auto ref = constant_model(12.25);
    const auto a = run_model(*ext, stream), b = run_model(*ref, stream);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].degrees == b[i].degrees);
    CHECK(ext->id() == "stub");
  }
  SUBCASE("malformed response names the line") {
    auto ext = stub("0 malformed");
    try {
      run_model(*ext, stream);
      FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
      CHECK(std::string(e.what()).find("steer left") != std::string::npos);
    }
  }
  SUBCASE("dying process reports its stderr") {
    auto ext = stub("0 die");
    try {
      run_model(*ext, stream);
      FAIL("expected ModelError");
    } catch (const ModelError& e) {
      CHECK(std::string(e.what()).find("stub giving up") != std::string::npos);
    }
  }
  SUBCASE("slow process times out") {
    auto ext = stub("0 slow", 300);
    CHECK_THROWS_AS(run_model(*ext, stream), ModelError);
  }
  SUBCASE("missing command") {
    ExternalModelOptions o;
    o.command = "/nonexistent/model";
    o.model_id = "missing";
    auto ext = external_model(o);
    CHECK_THROWS_AS(run_model(*ext, stream), ModelError);
  }
}

TEST_CASE("external model round trip of 1000 frames") {
  TempDir dir("ext");
  const auto manifest = drivemt::testing::write_drive(dir.path(), 1000, fine_style(), 11, Domain::S1, "fine", 12, 16);
  auto ext = stub("-3.5");
  const auto preds = run_model(*ext, FrameStream(manifest, 12, 16));
  REQUIRE(preds.size() == 1000);
  const auto ids = manifest.frame_ids();
  for (std::size_t i = 0; i < preds.size(); ++i) {
    CHECK(preds[i].frame_id == ids[i]);
    CHECK(preds[i].degrees == -3.5);
  }
}
