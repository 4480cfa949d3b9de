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
#include <sstream>

#include "doctest.h"
#include "drivemt/dataset.hpp"
#include "drivemt/error.hpp"
#include "drivemt/image_io.hpp"
#include "test_support.hpp"

using namespace drivemt;
using drivemt::testing::TempDir;

namespace {

std::vector<Image> solid_frames(std::size_t n, int h = 16, int w = 16) {
  std::vector<Image> frames;
  for (std::size_t i = 0; i < n; ++i) {
    frames.emplace_back(h, w, 3, static_cast<float>((i % 7) / 7.0));
  }
  return frames;
}

DatasetManifest tiny_manifest(const TempDir& dir, std::size_t n) {
  std::filesystem::create_directories(dir / "frames");
  DatasetManifest m;
  m.dataset_id = "tiny";
  m.domain = {Domain::S1, "fine"};
  m.base_dir = dir.path();
  for (std::size_t i = 0; i < n; ++i) {
    const auto rel = std::filesystem::path("frames") / ("f" + std::to_string(i) + ".png");
    write_png(dir / rel.string(), Image(6, 8, 3, static_cast<float>(i % 5) / 4.0f));
    m.entries.push_back({rel, static_cast<double>(i), true});
  }
  return m;
}

}  // namespace

TEST_SUITE("frame extraction") {
  TEST_CASE("kept frame count keeps frame zero and every stride-th after it") {
    CHECK(kept_frame_count(1000, 1) == 1000);
    CHECK(kept_frame_count(1000, 10) == 100);
    CHECK(kept_frame_count(1001, 10) == 101);
    CHECK(kept_frame_count(9, 10) == 1);
    CHECK(kept_frame_count(0, 3) == 0);
    for (std::size_t n = 0; n < 200; ++n) {
      for (std::size_t s = 1; s < 25; ++s) {
        std::size_t direct = 0;
        for (std::size_t i = 0; i < n; ++i) direct += (i % s == 0);
        REQUIRE(kept_frame_count(n, s) == direct);
      }
    }
    CHECK_THROWS_AS(kept_frame_count(10, 0), std::invalid_argument);
  }

  TEST_CASE("budget stride for a 28:55 drive at 30 fps keeps at most 1000 frames") {
    const std::size_t total = (28 * 60 + 55) * 30;
    const auto stride = stride_for_budget(total, 1000);
    CHECK(stride == 53);
    CHECK(kept_frame_count(total, stride) == 983);
    CHECK(kept_frame_count(total, stride - 1) > 1000);
    CHECK(stride_for_budget(500, 1000) == 1);
  }

  TEST_CASE("decoded video is thinned by stride") {
    TempDir dir("video");
    const auto path = dir / "clip.avi";
    write_video(path, solid_frames(1000));
    CHECK(extract_frames(path, 1).size() == 1000);
    CHECK(extract_frames(path, 10).size() == 100);
    std::vector<std::size_t> indices;
    extract_frames(path, 300, [&](std::size_t i, const Image&) { indices.push_back(i); });
    CHECK(indices == std::vector<std::size_t>{0, 300, 600, 900});
  }

  TEST_CASE("unreadable and empty videos raise distinct errors") {
    TempDir dir("badvideo");
    CHECK_THROWS_AS(extract_frames(dir / "missing.avi", 1), IngestionError);
    std::ofstream(dir / "junk.avi") << "not a video";
    CHECK_THROWS_AS(extract_frames(dir / "junk.avi", 1), DataError);
    try {
      extract_frames(dir / "missing.avi", 1);
    } catch (const IngestionError& e) {
      CHECK(std::string(e.what()).find("missing.avi") != std::string::npos);
    }
  }
}

TEST_SUITE("normalization") {
  TEST_CASE("480x640 input halves to 240x320 with 2x2 block means") {
    Image raw(480, 640, 3);
    std::mt19937_64 rng(5);
    raw = drivemt::testing::random_image(480, 640, 3, rng);
    const Image out = normalize_frame(raw);
    REQUIRE(out.height() == 240);
    REQUIRE(out.width() == 320);
    REQUIRE(out.channels() == 3);
    for (int y : {0, 17, 239}) {
      for (int x : {0, 100, 319}) {
        const double expect = (raw.at(2 * y, 2 * x, 1) + raw.at(2 * y, 2 * x + 1, 1) +
                               raw.at(2 * y + 1, 2 * x, 1) + raw.at(2 * y + 1, 2 * x + 1, 1)) / 4.0;
        CHECK(out.at(y, x, 1) == doctest::Approx(expect).epsilon(1e-5));
      }
    }
  }

  TEST_CASE("normalized frames pass through unchanged") {
    std::mt19937_64 rng(6);
    const Image frame = drivemt::testing::random_image(240, 320, 3, rng);
    CHECK(normalize_frame(frame) == frame);
    const Image once = normalize_frame(drivemt::testing::random_image(300, 500, 3, rng));
    CHECK(normalize_frame(once) == once);
  }

  TEST_CASE("zero image stays zero") {
    const Image out = normalize_frame(Image(480, 640, 3, 0.0f));
    CHECK(out.height() == 240);
    CHECK(mean_value(out) == 0.0);
  }

  TEST_CASE("wide frames are centre-cropped to 3:4") {
    // 720x1280: the centred 720x960 window starts at column 160.
    Image raw(720, 1280, 3, 0.0f);
    for (int y = 0; y < 720; ++y) {
      for (int x = 160; x < 1120; ++x) raw.at(y, x, 0) = 1.0f;
    }
    const Image out = normalize_frame(raw);
    double red = 0.0;
    for (int y = 0; y < 240; ++y) {
      for (int x = 0; x < 320; ++x) red += out.at(y, x, 0);
    }
    CHECK(red == doctest::Approx(240.0 * 320.0));
  }

  TEST_CASE("bilinear resize uses half-pixel centres") {
    Image img(4, 4, 1);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) img.at(y, x, 0) = static_cast<float>(x + 4 * y);
    const Image half = resize_bilinear(img, 2, 2);
    CHECK(half.at(0, 0, 0) == doctest::Approx(2.5));
    CHECK(half.at(1, 1, 0) == doctest::Approx(12.5));
    const Image three = resize_bilinear(img, 3, 3);
    CHECK(three.at(0, 0, 0) == doctest::Approx(0.8333333).epsilon(1e-5));
    CHECK(three.at(1, 1, 0) == doctest::Approx(7.5));
    CHECK(three.at(2, 2, 0) == doctest::Approx(14.1666667).epsilon(1e-5));
  }

  TEST_CASE("non-RGB input is a format error") {
    CHECK_THROWS_AS(normalize_frame(Image(480, 640, 1)), FormatError);
    CHECK_THROWS_AS(normalize_frame(Image(480, 640, 4)), FormatError);
  }
}

TEST_SUITE("manifests") {
  TEST_CASE("manifest text round trip") {
    const std::string text =
        "#dataset_id=ep2\t#domain=S2\t#alias=snowy\n"
        "#provenance=snow, 3 min\n"
        "frames/a.png\t-4.5\t1\n"
        "frames/b.png\tNA\t0\n"
        "frames/c.png\t0\t1\n";
    std::istringstream in(text);
    const auto m = parse_manifest(in, "/data");
    CHECK(m.dataset_id == "ep2");
    CHECK(m.domain == DomainTag{Domain::S2, "snowy"});
    CHECK(m.provenance == "snow, 3 min");
    REQUIRE(m.entries.size() == 3);
    CHECK(*m.entries[0].steering_degrees == -4.5);
    CHECK_FALSE(m.entries[1].steering_degrees.has_value());
    CHECK_FALSE(m.entries[1].include);
    CHECK(m.included_count() == 2);
    CHECK(m.frame_ids() == std::vector<std::string>{"a", "b", "c"});
    std::ostringstream out;
    write_manifest(out, m);
    CHECK(out.str() == text);
  }

  TEST_CASE("malformed manifests are rejected") {
    auto parse = [](const std::string& s) {
      std::istringstream in(s);
      return parse_manifest(in, ".");
    };
    CHECK_THROWS_AS(parse("a.png\t1\t1\n"), FormatError);
    CHECK_THROWS_AS(parse("#dataset_id=x\t#domain=S3\t#alias=\n"), FormatError);
    CHECK_THROWS_AS(parse("#dataset_id=x\t#domain=S1\t#alias=\na.png\t1\n"), FormatError);
    CHECK_THROWS_AS(parse("#dataset_id=x\t#domain=S1\t#alias=\na.png\tleft\t1\n"), FormatError);
    CHECK_THROWS_AS(parse("#dataset_id=x\t#domain=S1\t#alias=\na.png\t1\t2\n"), FormatError);
    CHECK_THROWS_AS(parse("#dataset_id=x\t#domain=S1\t#alias=\na.png\t1\t1\nz/a.jpg\t1\t1\n"),
                    FormatError);
  }
}

TEST_SUITE("filtering") {
  DatasetManifest five() {
    DatasetManifest m;
    m.dataset_id = "five";
    for (int i = 0; i < 5; ++i) m.entries.push_back({"f" + std::to_string(i) + ".png", {}, true});
    return m;
  }

  TEST_CASE("excluding two known ids leaves three") {
    const auto m = five();
    const auto r = filter_frames(m, std::set<std::string>{"f1", "f3"});
    CHECK(r.manifest.included_count() == 3);
    CHECK(r.unknown_ids.empty());
    CHECK(m.included_count() == 5);
  }

  TEST_CASE("empty exclusion list is the identity") {
    const auto m = five();
    const auto r = filter_frames(m, std::set<std::string>{});
    CHECK(r.manifest.entries.size() == m.entries.size());
    CHECK(r.manifest.included_count() == 5);
  }

  TEST_CASE("excluding every id leaves a valid empty manifest") {
    const auto m = five();
    const auto ids = m.frame_ids();
    const auto r = filter_frames(m, std::set<std::string>(ids.begin(), ids.end()));
    CHECK(r.manifest.included_count() == 0);
    CHECK(r.manifest.entries.size() == 5);
  }

  TEST_CASE("unknown ids are reported, not fatal") {
    const auto r = filter_frames(five(), std::set<std::string>{"f0", "ghost"});
    CHECK(r.manifest.included_count() == 4);
    CHECK(r.unknown_ids == std::vector<std::string>{"ghost"});
  }

  TEST_CASE("exclusion list file skips blanks and comments") {
    TempDir dir("excl");
    std::ofstream(dir / "x.txt") << "# wipers\nf1\n\n  f2  \n";
    CHECK(read_exclusion_list(dir / "x.txt") == std::set<std::string>{"f1", "f2"});
  }

  TEST_CASE("predicate hook excludes dark frames") {
    TempDir dir("pred");
    const auto m = tiny_manifest(dir, 5);  // brightness cycles 0, .25, .5, .75, 1
    const auto r = filter_frames(m, [](const std::string&, const Image& img) {
      return mean_value(img) < 0.3;
    });
    CHECK(r.manifest.included_count() == 3);
  }
}

TEST_SUITE("streams") {
  TEST_CASE("three included entries load in order") {
    TempDir dir("s3");
    const auto m = tiny_manifest(dir, 3);
    const auto records = load_stream(m);
    REQUIRE(records.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(records[i].frame_id == "f" + std::to_string(i));
      CHECK(records[i].sequence_index == i);
      CHECK(records[i].image.height() == 240);
      CHECK(records[i].image.width() == 320);
      CHECK(*records[i].steering_degrees == static_cast<double>(i));
    }
  }

  TEST_CASE("excluded entries never appear") {
    TempDir dir("s2");
    auto m = tiny_manifest(dir, 3);
    m = filter_frames(m, std::set<std::string>{"f1"}).manifest;
    const auto records = load_stream(m);
    REQUIRE(records.size() == 2);
    CHECK(records[0].frame_id == "f0");
    CHECK(records[1].frame_id == "f2");
    CHECK(records[0].sequence_index < records[1].sequence_index);
  }

  TEST_CASE("missing file names the frame and path") {
    TempDir dir("missing");
    auto m = tiny_manifest(dir, 3);
    std::filesystem::remove(dir / "frames/f2.png");
    try {
      load_stream(m);
      FAIL("expected an ingestion error");
    } catch (const IngestionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("f2") != std::string::npos);
      CHECK(msg.find("frames/f2.png") != std::string::npos);
    }
  }

  TEST_CASE("manifest on disk resolves paths against its directory") {
    TempDir dir("disk");
    const auto m = drivemt::testing::write_drive(dir.path(), 4, fine_style(), 1, Domain::S1, "fine",
                                                 48, 64);
    const auto loaded = read_manifest(dir / "manifest.tsv");
    CHECK(loaded.base_dir == dir.path());
    CHECK(load_stream(loaded).size() == 4);
  }

  TEST_CASE("a 5614-entry manifest streams 5614 records") {
    TempDir dir("long");
    std::filesystem::create_directories(dir / "frames");
    DatasetManifest m;
    m.dataset_id = "long-drive";
    m.base_dir = dir.path();
    for (std::size_t i = 0; i < 5614; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "frames/%05zu.png", i);
      write_png(dir / name, Image(3, 4, 3, static_cast<float>(i % 2)));
      m.entries.push_back({name, 0.0, true});
    }
    write_manifest(dir / "manifest.tsv", m);
    const FrameStream stream(read_manifest(dir / "manifest.tsv"));
    REQUIRE(stream.size() == 5614);
    std::size_t n = 0, last = 0;
    bool ordered = true;
    for (const auto& record : stream) {
      if (n > 0 && record.sequence_index <= last) ordered = false;
      last = record.sequence_index;
      ++n;
    }
    CHECK(n == 5614);
    CHECK(ordered);
  }
}
