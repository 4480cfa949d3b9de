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

#include "drivemt/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

#include <cmath>
#include <string>

#include "drivemt/error.hpp"

namespace drivemt {
namespace {

Image from_bgr(const cv::Mat& mat) {
  cv::Mat rgb;
  switch (mat.channels()) {
    case 1: rgb = mat; break;
    case 3: cv::cvtColor(mat, rgb, cv::COLOR_BGR2RGB); break;
    case 4: cv::cvtColor(mat, rgb, cv::COLOR_BGRA2RGB); break;
    default: throw FormatError("unsupported channel count " + std::to_string(mat.channels()));
  }
  cv::Mat as_float;
  const double scale = mat.depth() == CV_16U ? 1.0 / 65535.0 : 1.0 / 255.0;
  rgb.convertTo(as_float, CV_32F, scale);
  if (!as_float.isContinuous()) as_float = as_float.clone();
  const auto* begin = as_float.ptr<float>();
  std::vector<float> data(begin, begin + as_float.total() * as_float.channels());
  return Image(as_float.rows, as_float.cols, as_float.channels(), std::move(data));
}

cv::Mat to_bgr8(const Image& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw FormatError("can only encode 1 or 3 channel images");
  }
  const int type = image.channels() == 1 ? CV_8UC1 : CV_8UC3;
  cv::Mat mat(image.height(), image.width(), type);
  auto* out = mat.ptr<unsigned char>();
  for (std::size_t i = 0; i < image.size(); ++i) {
    const float v = std::min(1.0f, std::max(0.0f, image.data()[i]));
    out[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  if (image.channels() == 3) cv::cvtColor(mat, mat, cv::COLOR_RGB2BGR);
  return mat;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw IngestionError("cannot decode image: " + path.string());
  return from_bgr(mat);
}

void write_png(const std::filesystem::path& path, const Image& image) {
  const cv::Mat mat = to_bgr8(image);
  if (!cv::imwrite(path.string(), mat)) {
    throw IngestionError("cannot write image: " + path.string());
  }
}

std::size_t count_video_frames(const std::filesystem::path& path) {
  cv::VideoCapture capture(path.string(), cv::CAP_FFMPEG);
  if (!capture.isOpened()) throw IngestionError("cannot open video: " + path.string());
  std::size_t n = 0;
  while (capture.grab()) ++n;
  return n;
}

std::size_t decode_video(const std::filesystem::path& path,
                         const std::function<void(std::size_t, const Image&)>& sink) {
  if (!std::filesystem::exists(path)) throw IngestionError("no such video: " + path.string());
  cv::VideoCapture capture(path.string(), cv::CAP_FFMPEG);
  if (!capture.isOpened()) throw IngestionError("cannot open video: " + path.string());
  std::size_t n = 0;
  cv::Mat frame;
  while (capture.read(frame)) {
    sink(n, from_bgr(frame));
    ++n;
  }
  return n;
}

void write_video(const std::filesystem::path& path, const std::vector<Image>& frames,
                 double fps) {
  if (frames.empty()) throw EmptyInputError("no frames to write");
  const Image& first = frames.front();
  cv::VideoWriter writer(path.string(), cv::CAP_FFMPEG, cv::VideoWriter::fourcc('M', 'J', 'P', 'G'), fps,
                         cv::Size(first.width(), first.height()));
  if (!writer.isOpened()) throw IngestionError("cannot open video for writing: " + path.string());
  for (const auto& frame : frames) {
    if (!frame.same_shape(first) || frame.channels() != 3) {
      throw DimensionError("video frames must share one 3-channel shape");
    }
    writer.write(to_bgr8(frame));
  }
}

}  // namespace drivemt
