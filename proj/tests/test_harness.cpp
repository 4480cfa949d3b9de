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
#include <random>
#include <sstream>

#include "doctest.h"
#include "drivemt/harness.hpp"
#include "drivemt/models.hpp"
#include "test_support.hpp"

using namespace drivemt;
using drivemt::testing::random_image;
using drivemt::testing::TempDir;

namespace {

std::vector<PredictionPair> random_pairs(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-60.0, 60.0);
  std::uniform_int_distribution<int> whole(-60, 60);
  std::vector<PredictionPair> pairs(n);
  for (std::size_t i = 0; i < n; ++i) {
    pairs[i].frame_id = "f" + std::to_string(i);
    // Integer angles make exact ties with integer bounds common.
    if (i % 4 == 0) {
      pairs[i].angle_original = whole(rng);
      pairs[i].angle_transformed = whole(rng);
    } else {
      pairs[i].angle_original = angle(rng);
      pairs[i].angle_transformed = angle(rng);
    }
  }
  return pairs;
}

std::size_t brute_force(const std::vector<PredictionPair>& pairs, double eps) {
  std::size_t n = 0;
  for (const auto& p : pairs) {
    const double hi = std::max(p.angle_original, p.angle_transformed);
    const double lo = std::min(p.angle_original, p.angle_transformed);
    if (hi - lo > eps) ++n;
  }
  return n;
}

std::vector<FrameRecord> random_stream(std::size_t n, std::mt19937_64& rng) {
  std::vector<FrameRecord> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i].frame_id = "frame_" + std::to_string(i);
    s[i].image = random_image(12, 16, 3, rng);
    s[i].sequence_index = i;
  }
  return s;
}

std::vector<PredictionPair> make_pairs(std::initializer_list<std::pair<double, double>> values) {
  std::vector<PredictionPair> out;
  int i = 0;
  for (auto [a, b] : values) out.push_back({"p" + std::to_string(i++), a, b});
  return out;
}

}  // namespace

TEST_CASE("inconsistency count examples") {
  CHECK(inconsistency_count(make_pairs({{10, 25}, {0, 2}, {-5, -5}}), ErrorBound(10)) == 1);
  CHECK(inconsistency_count(make_pairs({{10, 20}}), ErrorBound(10)) == 0);
  CHECK(inconsistency_count(make_pairs({{10, 20.000001}}), ErrorBound(10)) == 1);
  CHECK(inconsistency_count({}, ErrorBound(10)) == 0);
  const auto same = make_pairs({{1, 1}, {-30, -30}, {45.5, 45.5}});
  for (double e : {0.001, 10.0, 40.0}) CHECK(inconsistency_count(same, ErrorBound(e)) == 0);
}

TEST_CASE("count matches a brute-force oracle") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> len(0, 2000);
  std::uniform_real_distribution<double> eps(0.5, 50.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pairs = random_pairs(len(rng), rng);
    const double e = trial % 2 ? std::round(eps(rng)) : eps(rng);
    CHECK(inconsistency_count(pairs, ErrorBound(e)) == brute_force(pairs, e));
  }
}

TEST_CASE("counts are non-increasing in epsilon and symmetric") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> step(0.5, 15.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto pairs = random_pairs(500, rng);
    std::vector<ErrorBound> bounds;
    double e = 0.0;
    for (int k = 0; k < 6; ++k) bounds.emplace_back(e += step(rng));
    const auto rows = sweep_bounds(pairs, bounds);
    REQUIRE(rows.size() == bounds.size());
    CHECK(first_monotonicity_violation(rows) == -1);
    for (auto& p : pairs) std::swap(p.angle_original, p.angle_transformed);
    CHECK(sweep_bounds(pairs, bounds) == rows);
  }
}

TEST_CASE("sweep bounds") {
  const auto pairs = make_pairs({{0, 15}, {0, 25}, {0, 35}, {0, 45}, {0, 0}});
  const auto rows = sweep_bounds(pairs, default_bounds());
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == ReportRow{10, 4, 5});
  CHECK(rows[3] == ReportRow{40, 1, 5});
  const std::vector<ErrorBound> single{ErrorBound(20)};
  CHECK(sweep_bounds(pairs, single)[0].count == inconsistency_count(pairs, single[0]));
  const std::vector<ErrorBound> unsorted{ErrorBound(20), ErrorBound(10)};
  CHECK_THROWS_AS(sweep_bounds(pairs, unsorted), ConfigError);
  const std::vector<ErrorBound> repeated{ErrorBound(10), ErrorBound(10)};
  CHECK_THROWS_AS(sweep_bounds(pairs, repeated), ConfigError);
  CHECK_THROWS_AS(sweep_bounds(pairs, {}), ConfigError);
  CHECK_THROWS_AS(ErrorBound(0.0), ConfigError);
  CHECK_THROWS_AS(ErrorBound(-1.0), ConfigError);
  CHECK_THROWS_AS(ErrorBound(std::nan("")), ConfigError);
}

TEST_CASE("report fixture with decreasing counts") {
  InconsistencyReport r{"cnn-c", "snowy", {{10, 334, 5614}, {20, 115, 5614}, {30, 45, 5614}, {40, 14, 5614}}, {}};
  CHECK(first_monotonicity_violation(r.rows) == -1);
  CHECK_NOTHROW(validate_report(r));

  std::ostringstream out;
  const std::vector<InconsistencyReport> reports{r};
  write_reports(out, reports);
  CHECK(out.str().rfind("model_id,scene_id,epsilon_degrees,count,total_frames\n", 0) == 0);
  std::istringstream in(out.str());
  CHECK(read_reports(in) == reports);

  auto bad = r;
  bad.rows[2].count = 200;
  CHECK(first_monotonicity_violation(bad.rows) == 2);
  CHECK_THROWS_AS(validate_report(bad), DataError);
  bad = r;
  bad.rows[0].count = 6000;
  CHECK_THROWS_AS(validate_report(bad), DataError);
}

TEST_CASE("pairing") {
  const std::vector<Prediction> a{{"a", 10}}, b{{"a", 25}}, c{{"b", 25}};
  CHECK(pair_predictions(a, b) == std::vector<PredictionPair>{{"a", 10, 25}});
  CHECK(pair_predictions({}, {}).empty());
  CHECK_THROWS_AS(pair_predictions(a, c), PairingError);
  CHECK_THROWS_AS(pair_predictions(a, {}), PairingError);
}

TEST_CASE("identity relation yields zero inconsistencies") {
  std::mt19937_64 rng(3);
  const auto stream = random_stream(30, rng);
  auto model = brightness_model(100.0);
  const auto original = run_model(*model, stream);
  const auto transformed = run_model(*model, apply_relation(identity_relation(), stream));
  const auto pairs = pair_predictions(original, transformed);
  for (const auto& row : sweep_bounds(pairs, default_bounds())) CHECK(row.count == 0);
}

TEST_CASE("apply_relation keeps length, order and ids") {
  std::mt19937_64 rng(4);
  const auto stream = random_stream(10, rng);
  for (BaselineKind kind : {BaselineKind::Affine, BaselineKind::Blur, BaselineKind::Fog, BaselineKind::Rain}) {
    const auto out = apply_relation(baseline_transform(kind, {}), stream);
    REQUIRE(out.size() == stream.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out[i].frame_id == stream[i].frame_id);
      CHECK(out[i].sequence_index == i);
      CHECK(out[i].image.same_shape(stream[i].image));
    }
  }
  MetamorphicRelation broken{"broken", [](const Image&) -> Image { throw std::runtime_error("boom"); }};
  try {
    apply_relation(broken, stream);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("frame_0") != std::string::npos);
  }
}

TEST_CASE("baseline transforms") {
  std::mt19937_64 rng(5);
  const auto img = random_image(20, 30, 3, rng);

  SUBCASE("identity affine") {
    const auto out = baseline_transform(BaselineKind::Affine, {}).input_transform(img);
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(out.data()[i] == doctest::Approx(img.data()[i]).epsilon(1e-6));
  }
  SUBCASE("translation moves content") {
    BaselineParams p;
    p.tx = 2.0;
    const auto out = baseline_transform(BaselineKind::Affine, p).input_transform(img);
    CHECK(out.at(5, 10, 1) == doctest::Approx(img.at(5, 8, 1)).epsilon(1e-5));
  }
  SUBCASE("full fog is white") {
    BaselineParams p;
    p.fog_weight = 1.0;
    const auto out = baseline_transform(BaselineKind::Fog, p).input_transform(img);
    for (float v : out.data()) CHECK(v == doctest::Approx(1.0f));
  }
  SUBCASE("fog blends toward white") {
    const auto out = baseline_transform(BaselineKind::Fog, {}).input_transform(img);
    for (std::size_t i = 0; i < img.size(); ++i) {
      CHECK(out.data()[i] == doctest::Approx(img.data()[i] + 0.3f * (1.0f - img.data()[i])).epsilon(1e-6));
    }
  }
  SUBCASE("blur keeps a constant image") {
    BaselineParams p;
    p.sigma = 2.5;
    const Image flat(20, 30, 3, 0.4f);
    const auto out = baseline_transform(BaselineKind::Blur, p).input_transform(flat);
    for (float v : out.data()) CHECK(v == doctest::Approx(0.4f).epsilon(1e-5));
  }
  SUBCASE("rain is deterministic and brightens") {
    const Image dark(60, 80, 3, 0.2f);
    const auto mr = baseline_transform(BaselineKind::Rain, {});
    const auto a = mr.input_transform(dark), b = mr.input_transform(dark);
    CHECK(a.data() == b.data());
    double before = 0, after = 0;
    for (std::size_t i = 0; i < dark.size(); ++i) {
      before += dark.data()[i];
      after += a.data()[i];
      CHECK(a.data()[i] <= 1.0f);
    }
    CHECK(after > before);
  }
  SUBCASE("invalid parameters") {
    BaselineParams p;
    p.sigma = 0.0;
    CHECK_THROWS_AS(baseline_transform(BaselineKind::Blur, p), ConfigError);
    p = {};
    p.fog_weight = 1.5;
    CHECK_THROWS_AS(baseline_transform(BaselineKind::Fog, p), ConfigError);
    p = {};
    p.matrix = {1, 2, 2, 4};
    CHECK_THROWS_AS(baseline_transform(BaselineKind::Affine, p), ConfigError);
    p = {};
    p.rain_density = -1;
    CHECK_THROWS_AS(baseline_transform(BaselineKind::Rain, p), ConfigError);
  }
  CHECK(parse_baseline_kind("rain") == BaselineKind::Rain);
  CHECK(to_string(BaselineKind::Affine) == "affine");
  CHECK_THROWS_AS(parse_baseline_kind("hail"), ConfigError);
}

TEST_CASE("csv round trips") {
  TempDir dir("csv");
  const std::vector<Prediction> preds{{"a", 1.5}, {"b", -0.125}, {"c", 1e-7}};
  write_predictions(dir / "p.csv", preds);
  CHECK(drivemt::testing::slurp(dir / "p.csv").rfind("frame_id,angle_degrees\n", 0) == 0);
  CHECK(read_predictions(dir / "p.csv") == preds);

  std::istringstream bad("frame_id,angle_degrees\na,notanumber\n");
  CHECK_THROWS_AS(read_predictions(bad), FormatError);
  std::istringstream wrong_header("id,angle\n");
  CHECK_THROWS_AS(read_predictions(wrong_header), FormatError);

  const auto pairs = make_pairs({{0, 15}, {0, 5}});
  const std::vector<InconsistencyReport> reports{
      make_report("m1", "snowy", pairs, default_bounds(), true),
      make_report("m2", "rain", pairs, default_bounds())};
  CHECK(reports[0].per_frame_flags.size() == 8);
  write_reports(dir / "r.csv", reports);
  auto back = read_reports(dir / "r.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].rows == reports[0].rows);
  CHECK(back[1].model_id == "m2");
  write_flags(dir / "f.csv", reports);
  const auto flags = drivemt::testing::slurp(dir / "f.csv");
  CHECK(flags.rfind("model_id,scene_id,frame_id,epsilon_degrees,violated\n", 0) == 0);
  CHECK(std::count(flags.begin(), flags.end(), '\n') == 9);
}
