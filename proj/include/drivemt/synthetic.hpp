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
#include <vector>

#include "drivemt/dataset.hpp"
#include "drivemt/image.hpp"

namespace drivemt {

// Procedural road scenes: sky, a road whose vanishing point shifts with the
// curvature, lane markings and roadside texture.
struct SceneStyle {
  double brightness = 1.0;  // multiplies every sample before clamping
  double offset = 0.0;      // added after scaling
  double texture = 0.0;     // amplitude of per-pixel speckle (snow, grain)
};

inline SceneStyle fine_style() { return {1.0, 0.0, 0.0}; }
inline SceneStyle snowy_style() { return {0.6, 0.0, 0.1}; }

struct SyntheticFrame {
  Image image;
  // Curvature in [-1, 1]; steering_degrees = 25 * curvature.
  double curvature = 0.0;
  double steering_degrees = 0.0;
};

SyntheticFrame make_road_scene(int height, int width, double curvature, const SceneStyle& style,
                               std::uint64_t seed);

// `count` scenes with curvature following a slow sinusoid, as along a drive.
std::vector<SyntheticFrame> make_drive(int height, int width, std::size_t count,
                                       const SceneStyle& style, std::uint64_t seed);

}  // namespace drivemt
