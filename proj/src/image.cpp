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

#include "drivemt/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "drivemt/error.hpp"

namespace drivemt {

Image::Image(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 0 || width < 0 || channels < 0) {
    throw DimensionError("negative image dimension");
  }
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Image::Image(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (height < 0 || width < 0 || channels < 0 ||
      data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw DimensionError("image buffer of " + std::to_string(data_.size()) +
                         " samples does not match " + std::to_string(height) + "x" +
                         std::to_string(width) + "x" + std::to_string(channels));
  }
}

double mean_value(const Image& image) {
  if (image.empty()) return 0.0;
  const double sum = std::accumulate(image.data().begin(), image.data().end(), 0.0);
  return sum / static_cast<double>(image.size());
}

double max_abs_difference(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DimensionError("image shapes differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(a.data()[i]) - b.data()[i]));
  }
  return worst;
}

Image crop(const Image& image, int top, int left, int height, int width) {
  if (top < 0 || left < 0 || height < 0 || width < 0 || top + height > image.height() ||
      left + width > image.width()) {
    throw DimensionError("crop window outside image");
  }
  Image out(height, width, image.channels());
  for (int y = 0; y < height; ++y) {
    const float* src = &image.data()[((static_cast<std::size_t>(top + y) * image.width()) + left) *
                                     image.channels()];
    std::copy(src, src + static_cast<std::size_t>(width) * image.channels(),
              &out.at(y, 0, 0));
  }
  return out;
}

Image resize_bilinear(const Image& image, int height, int width) {
  if (height <= 0 || width <= 0) throw DimensionError("resize target must be positive");
  if (image.height() == height && image.width() == width) return image;
  if (image.empty()) throw DimensionError("cannot resize an empty image");

  const int channels = image.channels();
  Image out(height, width, channels);
  const double sy = static_cast<double>(image.height()) / height;
  const double sx = static_cast<double>(image.width()) / width;

  struct Tap {
    int lo, hi;
    double frac;
  };
  auto taps = [](int n_out, int n_in, double scale) {
    std::vector<Tap> t(n_out);
    for (int i = 0; i < n_out; ++i) {
      const double src = std::clamp((i + 0.5) * scale - 0.5, 0.0, double(n_in - 1));
      const int lo = static_cast<int>(std::floor(src));
      t[i] = {lo, std::min(lo + 1, n_in - 1), src - lo};
    }
    return t;
  };
  const auto ty = taps(height, image.height(), sy);
  const auto tx = taps(width, image.width(), sx);

  for (int y = 0; y < height; ++y) {
    const auto [y0, y1, fy] = ty[y];
    for (int x = 0; x < width; ++x) {
      const auto [x0, x1, fx] = tx[x];
      for (int c = 0; c < channels; ++c) {
        const double top = image.at(y0, x0, c) * (1.0 - fx) + image.at(y0, x1, c) * fx;
        const double bottom = image.at(y1, x0, c) * (1.0 - fx) + image.at(y1, x1, c) * fx;
        out.at(y, x, c) = static_cast<float>(top * (1.0 - fy) + bottom * fy);
      }
    }
  }
  return out;
}

void clamp_unit(Image& image) {
  for (float& v : image.data()) v = std::clamp(v, 0.0f, 1.0f);
}

}  // namespace drivemt
