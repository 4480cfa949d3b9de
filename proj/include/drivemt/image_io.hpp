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

#include <cstddef>
#include <filesystem>
#include <functional>

#include "drivemt/image.hpp"

namespace drivemt {

// Decodes an 8-bit image file into RGB samples in [0, 1]. Grayscale files are
// returned with one channel, alpha is dropped.
Image read_image(const std::filesystem::path& path);

// Writes an 8-bit PNG (values are clamped to [0, 1] and rounded). Accepts one
// or three channels.
void write_png(const std::filesystem::path& path, const Image& image);

// Counts decodable frames by walking the whole container.
std::size_t count_video_frames(const std::filesystem::path& path);

// Decodes frames in temporal order, calling `sink(index, frame)` for each.
// Returns the number of frames decoded.
std::size_t decode_video(const std::filesystem::path& path,
                         const std::function<void(std::size_t, const Image&)>& sink);

// Writes an MJPEG AVI. Used for fixtures and synthetic inputs.
void write_video(const std::filesystem::path& path, const std::vector<Image>& frames,
                 double fps = 30.0);

}  // namespace drivemt
