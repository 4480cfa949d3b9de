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

// Writes a procedural road-scene drive as numbered PNG files plus a label CSV,
// ready for `drivemt prepare`.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "drivemt/image_io.hpp"
#include "drivemt/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic two-domain driving corpus", "drivemt-synth"};
  std::filesystem::path out;
  std::size_t count = 100;
  int height = 480, width = 640;
  std::string style = "fine";
  std::uint64_t seed = 0;
  bool video = false;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--count", count);
  app.add_option("--height", height);
  app.add_option("--width", width);
  app.add_option("--style", style)->check(CLI::IsMember({"fine", "snowy"}));
  app.add_option("--seed", seed);
  app.add_flag("--video", video, "Write drive.avi instead of PNG files");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto frames = drivemt::make_drive(
        height, width, count, style == "fine" ? drivemt::fine_style() : drivemt::snowy_style(), seed);
    std::filesystem::create_directories(out);
    if (video) {
      std::vector<drivemt::Image> images;
      for (const auto& f : frames) images.push_back(f.image);
      drivemt::write_video(out / "drive.avi", images);
    } else {
      std::ofstream labels(out / "labels.csv");
      labels << "frame_id,angle_degrees\n";
      for (std::size_t i = 0; i < frames.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "%s_%05zu", style.c_str(), i);
        drivemt::write_png(out / (std::string(id) + ".png"), frames[i].image);
        labels << id << ',' << frames[i].steering_degrees << '\n';
      }
    }
    std::cout << "wrote " << frames.size() << " frames to " << out.string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "drivemt-synth: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
