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
#include <vector>

namespace drivemt {

// Interleaved height x width x channels image with float samples. Frames
// produced by the dataset pipeline hold values in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, float fill = 0.0f);
  Image(int height, int width, int channels, std::vector<float> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(int y, int x, int c) { return data_[index(y, x, c)]; }
  float at(int y, int x, int c) const { return data_[index(y, x, c)]; }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

// Mean over all samples; 0 for an empty image.
double mean_value(const Image& image);

// Largest absolute per-sample difference. Shapes must match.
double max_abs_difference(const Image& a, const Image& b);

Image crop(const Image& image, int top, int left, int height, int width);

// Half-pixel-centred bilinear interpolation with edge clamping. Returns a copy
// when the target size equals the source size.
Image resize_bilinear(const Image& image, int height, int width);

void clamp_unit(Image& image);

}  // namespace drivemt
