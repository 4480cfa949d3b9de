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

#include "drivemt/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace drivemt {

SyntheticFrame make_road_scene(int height, int width, double curvature, const SceneStyle& style,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  const double horizon = height * (0.38 + 0.04 * jitter(rng));
  const double vanish_x = width * (0.5 + 0.3 * curvature);
  const double grass_tint = 0.05 * jitter(rng);

  Image img(height, width, 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double rgb[3];
      if (y < horizon) {
        const double t = y / horizon;
        rgb[0] = 0.45 + 0.25 * t;
        rgb[1] = 0.6 + 0.2 * t;
        rgb[2] = 0.85 + 0.05 * t;
      } else {
        const double depth = (y - horizon) / (height - horizon);  // 0 at horizon
        const double half = 0.05 * width + 0.55 * width * depth;
        // The road bends towards the vanishing point near the horizon.
        const double bend = (1.0 - depth) * (1.0 - depth);
        const double centre = width * 0.5 + (vanish_x - width * 0.5) * bend;
        const double d = std::abs(x + 0.5 - centre);
        if (d < half) {
          const double lane = std::abs(d - 0.02 * width);
          const bool marking = d < 0.025 * width * (0.5 + depth) &&
                               std::fmod(depth * 10.0 + 10.0, 2.0) < 1.0;
          const double g = marking ? 0.9 : 0.32 + 0.05 * std::exp(-lane);
          rgb[0] = rgb[1] = rgb[2] = g;
        } else {
          rgb[0] = 0.25 + grass_tint;
          rgb[1] = 0.5 + grass_tint;
          rgb[2] = 0.2;
        }
      }
      const double speckle = style.texture * jitter(rng);
      for (int c = 0; c < 3; ++c) {
        const double v = rgb[c] * style.brightness + style.offset + speckle;
        img.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return {std::move(img), curvature, 25.0 * curvature};
}

std::vector<SyntheticFrame> make_drive(int height, int width, std::size_t count,
                                       const SceneStyle& style, std::uint64_t seed) {
  std::vector<SyntheticFrame> frames;
  frames.reserve(count);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
  const double p0 = phase(rng);
  for (std::size_t i = 0; i < count; ++i) {
    const double curvature = std::sin(p0 + 0.13 * static_cast<double>(i));
    frames.push_back(make_road_scene(height, width, curvature, style, rng()));
  }
  return frames;
}

}  // namespace drivemt
