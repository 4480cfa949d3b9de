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

#include "drivemt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <opencv2/imgproc.hpp>

#include "drivemt/error.hpp"
#include "drivemt/models.hpp"
#include "drivemt/translator.hpp"
#include "text_util.hpp"

namespace drivemt {

using detail::format_double;

MetamorphicRelation identity_relation() {
  return {"identity", [](const Image& img) { return img; }};
}

MetamorphicRelation translator_relation(const TranslatorParams& params, Domain from, Domain to) {
  auto shared = std::make_shared<const TranslatorParams>(params);
  return {"translate:" + to_string(from) + "->" + to_string(to),
          [shared, from, to](const Image& img) { return translate_frame(*shared, img, from, to); }};
}

FrameRecord apply_relation(const MetamorphicRelation& mr, const FrameRecord& frame) {
  FrameRecord out;
  out.frame_id = frame.frame_id;
  out.source_id = frame.source_id;
  out.steering_degrees = frame.steering_degrees;
  out.sequence_index = frame.sequence_index;
  try {
    out.image = mr.input_transform(frame.image);
  } catch (const std::exception& e) {
    throw DataError("transform '" + mr.name + "' failed on frame " + frame.frame_id + ": " +
                    e.what());
  }
  return out;
}

std::vector<FrameRecord> apply_relation(const MetamorphicRelation& mr,
                                        std::span<const FrameRecord> stream) {
  std::vector<FrameRecord> out;
  out.reserve(stream.size());
  for (const auto& frame : stream) out.push_back(apply_relation(mr, frame));
  return out;
}

namespace {

Prediction predict_one(SteeringModel& model, const FrameRecord& frame) {
  double degrees = 0.0;
  try {
    degrees = model.predict(frame);
  } catch (const ProtocolError& e) {
    throw ProtocolError("model " + model.id() + " failed on frame " + frame.frame_id + ": " +
                        e.what());
  } catch (const Error& e) {
    throw ModelError("model " + model.id() + " failed on frame " + frame.frame_id + ": " +
                     e.what());
  }
  if (!std::isfinite(degrees)) {
    throw ModelError("model " + model.id() + " returned a non-finite angle for frame " +
                     frame.frame_id);
  }
  return {frame.frame_id, degrees};
}

}  // namespace

std::vector<Prediction> run_model(SteeringModel& model, std::span<const FrameRecord> stream) {
  model.reset();
  std::vector<Prediction> out;
  out.reserve(stream.size());
  for (const auto& frame : stream) out.push_back(predict_one(model, frame));
  return out;
}

std::vector<Prediction> run_model(SteeringModel& model, const FrameStream& stream,
                                  const MetamorphicRelation* mr) {
  model.reset();
  std::vector<Prediction> out;
  out.reserve(stream.size());
  for (const auto& frame : stream) {
    out.push_back(predict_one(model, mr ? apply_relation(*mr, frame) : frame));
  }
  return out;
}

std::vector<PredictionPair> pair_predictions(std::span<const Prediction> original,
                                             std::span<const Prediction> transformed) {
  if (original.size() != transformed.size()) {
    throw PairingError("prediction lists differ in length: " + std::to_string(original.size()) +
                       " vs " + std::to_string(transformed.size()));
  }
  std::vector<PredictionPair> pairs;
  pairs.reserve(original.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (original[i].frame_id != transformed[i].frame_id) {
      throw PairingError("frame id mismatch at position " + std::to_string(i) + ": " +
                         original[i].frame_id + " vs " + transformed[i].frame_id);
    }
    pairs.push_back({original[i].frame_id, original[i].degrees, transformed[i].degrees});
  }
  return pairs;
}

ErrorBound::ErrorBound(double epsilon_degrees) : epsilon_(epsilon_degrees) {
  if (!std::isfinite(epsilon_degrees) || epsilon_degrees <= 0.0) {
    throw ConfigError("error bound must be positive and finite, got " +
                      format_double(epsilon_degrees));
  }
}

std::vector<ErrorBound> default_bounds() {
  return {ErrorBound(10), ErrorBound(20), ErrorBound(30), ErrorBound(40)};
}

std::size_t inconsistency_count(std::span<const PredictionPair> pairs, ErrorBound bound) {
  const double eps = bound.epsilon();
  return static_cast<std::size_t>(std::count_if(pairs.begin(), pairs.end(), [eps](const auto& p) {
    return std::abs(p.angle_original - p.angle_transformed) > eps;
  }));
}

std::vector<ReportRow> sweep_bounds(std::span<const PredictionPair> pairs,
                                    std::span<const ErrorBound> bounds) {
  if (bounds.empty()) throw ConfigError("at least one error bound is required");
  for (std::size_t i = 1; i < bounds.size(); ++i) {
    if (!(bounds[i - 1].epsilon() < bounds[i].epsilon())) {
      throw ConfigError("error bounds must be strictly ascending");
    }
  }
  // One pass over sorted differences serves every bound.
  std::vector<double> diffs;
  diffs.reserve(pairs.size());
  for (const auto& p : pairs) diffs.push_back(std::abs(p.angle_original - p.angle_transformed));
  std::sort(diffs.begin(), diffs.end());
  std::vector<ReportRow> rows;
  for (const auto& b : bounds) {
    const auto above = diffs.end() - std::upper_bound(diffs.begin(), diffs.end(), b.epsilon());
    rows.push_back({b.epsilon(), static_cast<std::size_t>(above), pairs.size()});
  }
  return rows;
}

InconsistencyReport make_report(const std::string& model_id, const std::string& scene_id,
                                std::span<const PredictionPair> pairs,
                                std::span<const ErrorBound> bounds, bool with_flags) {
  InconsistencyReport report{model_id, scene_id, sweep_bounds(pairs, bounds), {}};
  if (with_flags) {
    for (const auto& p : pairs) {
      for (const auto& b : bounds) {
        report.per_frame_flags.push_back(
            {p.frame_id, b.epsilon(), std::abs(p.angle_original - p.angle_transformed) > b.epsilon()});
      }
    }
  }
  return report;
}

long first_monotonicity_violation(std::span<const ReportRow> rows) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].count > rows[i].total_frames) return static_cast<long>(i);
    if (i > 0 && (rows[i].count > rows[i - 1].count || !(rows[i].epsilon > rows[i - 1].epsilon))) {
      return static_cast<long>(i);
    }
  }
  return -1;
}

void validate_report(const InconsistencyReport& report) {
  const std::string where = report.model_id + "/" + report.scene_id;
  if (report.rows.empty()) throw DataError("report " + where + " has no rows");
  for (const auto& row : report.rows) {
    if (row.total_frames != report.rows.front().total_frames) {
      throw DataError("report " + where + " mixes frame totals");
    }
  }
  const long bad = first_monotonicity_violation(report.rows);
  if (bad >= 0) {
    const auto& r = report.rows[static_cast<std::size_t>(bad)];
    std::ostringstream msg;
    msg << "report " << where << " violates monotonicity at epsilon " << format_double(r.epsilon)
        << ": count " << r.count;
    if (bad > 0) msg << " after " << report.rows[static_cast<std::size_t>(bad) - 1].count;
    msg << " of " << r.total_frames;
    throw DataError(msg.str());
  }
}

// ---------------------------------------------------------------------------
// Baseline transforms.

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::Affine: return "affine";
    case BaselineKind::Blur: return "blur";
    case BaselineKind::Fog: return "fog";
    case BaselineKind::Rain: return "rain";
  }
  return "?";
}

BaselineKind parse_baseline_kind(const std::string& text) {
  for (auto k : {BaselineKind::Affine, BaselineKind::Blur, BaselineKind::Fog, BaselineKind::Rain}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("unknown baseline transform '" + text + "'");
}

namespace {

cv::Mat as_mat(const Image& img) {
  return cv::Mat(img.height(), img.width(), CV_32FC(img.channels()),
                 const_cast<float*>(img.data().data()));
}

Image from_mat(const cv::Mat& m) {
  cv::Mat c = m.isContinuous() ? m : m.clone();
  const auto* p = c.ptr<float>();
  return Image(c.rows, c.cols, c.channels(), std::vector<float>(p, p + c.total() * c.channels()));
}

Image gaussian_blur(const Image& img, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  cv::Mat out;
  cv::GaussianBlur(as_mat(img), out, cv::Size(2 * radius + 1, 2 * radius + 1), sigma, sigma,
                   cv::BORDER_REPLICATE);
  return from_mat(out);
}

Image affine_warp(const Image& img, const BaselineParams& p) {
  const double cx = img.width() / 2.0, cy = img.height() / 2.0;
  const auto& m = p.matrix;
  cv::Mat fwd = (cv::Mat_<double>(2, 3) << m[0], m[1], cx + p.tx - m[0] * cx - m[1] * cy,  //
                 m[2], m[3], cy + p.ty - m[2] * cx - m[3] * cy);
  cv::Mat out;
  cv::warpAffine(as_mat(img), out, fwd, cv::Size(img.width(), img.height()), cv::INTER_LINEAR,
                 cv::BORDER_REPLICATE);
  return from_mat(out);
}

Image fog(const Image& img, double w) {
  Image out = img;
  for (float& v : out.data()) v = static_cast<float>(v + w * (1.0 - v));
  return out;
}

Image rain(const Image& img, const BaselineParams& p) {
  cv::Mat streaks = cv::Mat::zeros(img.height(), img.width(), CV_32FC1);
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> ux(0.0, img.width()), uy(0.0, img.height());
  const double pixels = static_cast<double>(img.height()) * img.width();
  const auto count = static_cast<long>(std::lround(p.rain_density * pixels / 1e4));
  const double len = p.rain_length * img.height();
  const double slant = p.rain_slant * 3.14159265358979323846 / 180.0;
  for (long i = 0; i < count; ++i) {
    const double x = ux(rng), y = uy(rng);
    const cv::Point2d a(x, y), b(x + len * std::sin(slant), y + len * std::cos(slant));
    cv::line(streaks, cv::Point(cvRound(a.x), cvRound(a.y)), cv::Point(cvRound(b.x), cvRound(b.y)),
             cv::Scalar(p.rain_intensity), 1, cv::LINE_8);
  }
  Image out = img;
  for (int y = 0; y < img.height(); ++y) {
    const float* s = streaks.ptr<float>(y);
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) out.at(y, x, c) = std::min(1.0f, out.at(y, x, c) + s[x]);
    }
  }
  out = gaussian_blur(out, 0.5);
  clamp_unit(out);
  return out;
}

}  // namespace

MetamorphicRelation baseline_transform(BaselineKind kind, const BaselineParams& p) {
  switch (kind) {
    case BaselineKind::Affine: {
      const auto& m = p.matrix;
      const double det = m[0] * m[3] - m[1] * m[2];
      if (!std::isfinite(det) || std::abs(det) < 1e-9 || !std::isfinite(p.tx) ||
          !std::isfinite(p.ty)) {
        throw ConfigError("affine matrix must be finite and invertible");
      }
      return {"affine", [p](const Image& img) { return affine_warp(img, p); }};
    }
    case BaselineKind::Blur:
      if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) throw ConfigError("blur sigma must be positive");
      return {"blur", [sigma = p.sigma](const Image& img) { return gaussian_blur(img, sigma); }};
    case BaselineKind::Fog:
      if (!(p.fog_weight >= 0.0 && p.fog_weight <= 1.0)) {
        throw ConfigError("fog weight must lie in [0, 1]");
      }
      return {"fog", [w = p.fog_weight](const Image& img) { return fog(img, w); }};
    case BaselineKind::Rain:
      if (!(p.rain_density >= 0.0) || !(p.rain_length > 0.0) || !(p.rain_intensity >= 0.0) ||
          !std::isfinite(p.rain_slant)) {
        throw ConfigError("rain parameters must be non-negative with a positive streak length");
      }
      return {"rain", [p](const Image& img) { return rain(img, p); }};
  }
  throw ConfigError("unknown baseline transform");
}

// ---------------------------------------------------------------------------
// CSV files.

namespace {

void check_field(const std::string& field, const char* what) {
  if (field.find_first_of(",\n\r") != std::string::npos) {
    throw FormatError(std::string(what) + " '" + field + "' contains a comma or newline");
  }
}

template <typename F>
void read_csv(std::istream& in, const std::string& header, std::size_t columns, F&& row) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != header) {
    throw FormatError("expected CSV header '" + header + "'");
  }
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split(detail::trim(line), ',');
    if (fields.size() != columns) {
      throw FormatError("line " + std::to_string(number) + ": expected " + std::to_string(columns) +
                        " fields, got " + std::to_string(fields.size()));
    }
    row(fields, number);
  }
}

double number_field(const std::string& s, std::size_t line) {
  auto v = detail::parse_double(s);
  if (!v || !std::isfinite(*v)) {
    throw FormatError("line " + std::to_string(line) + ": '" + s + "' is not a finite number");
  }
  return *v;
}

std::size_t count_field(const std::string& s, std::size_t line) {
  auto v = detail::parse_int(s);
  if (!v || *v < 0) {
    throw FormatError("line " + std::to_string(line) + ": '" + s + "' is not a non-negative count");
  }
  return static_cast<std::size_t>(*v);
}

template <typename W>
void write_file(const std::filesystem::path& path, W&& writer) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path.string());
  writer(out);
  if (!out) throw IngestionError("write failed: " + path.string());
}

std::ifstream open_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  return in;
}

}  // namespace

void write_predictions(std::ostream& out, std::span<const Prediction> predictions) {
  out << "frame_id,angle_degrees\n";
  for (const auto& p : predictions) {
    check_field(p.frame_id, "frame id");
    out << p.frame_id << ',' << format_double(p.degrees) << '\n';
  }
}

void write_predictions(const std::filesystem::path& path, std::span<const Prediction> predictions) {
  write_file(path, [&](std::ostream& out) { write_predictions(out, predictions); });
}

std::vector<Prediction> read_predictions(std::istream& in) {
  std::vector<Prediction> out;
  read_csv(in, "frame_id,angle_degrees", 2, [&](const auto& f, std::size_t line) {
    out.push_back({f[0], number_field(f[1], line)});
  });
  return out;
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  auto in = open_file(path);
  try {
    return read_predictions(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_reports(std::ostream& out, std::span<const InconsistencyReport> reports) {
  out << "model_id,scene_id,epsilon_degrees,count,total_frames\n";
  for (const auto& r : reports) {
    check_field(r.model_id, "model id");
    check_field(r.scene_id, "scene id");
    for (const auto& row : r.rows) {
      out << r.model_id << ',' << r.scene_id << ',' << format_double(row.epsilon) << ','
          << row.count << ',' << row.total_frames << '\n';
    }
  }
}

void write_reports(const std::filesystem::path& path, std::span<const InconsistencyReport> reports) {
  write_file(path, [&](std::ostream& out) { write_reports(out, reports); });
}

std::vector<InconsistencyReport> read_reports(std::istream& in) {
  std::vector<InconsistencyReport> out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  read_csv(in, "model_id,scene_id,epsilon_degrees,count,total_frames", 5,
           [&](const auto& f, std::size_t line) {
             const auto key = std::make_pair(f[0], f[1]);
             auto it = index.find(key);
             if (it == index.end()) {
               it = index.emplace(key, out.size()).first;
               out.push_back({f[0], f[1], {}, {}});
             }
             out[it->second].rows.push_back(
                 {number_field(f[2], line), count_field(f[3], line), count_field(f[4], line)});
           });
  return out;
}

std::vector<InconsistencyReport> read_reports(const std::filesystem::path& path) {
  auto in = open_file(path);
  try {
    return read_reports(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_flags(std::ostream& out, std::span<const InconsistencyReport> reports) {
  out << "model_id,scene_id,frame_id,epsilon_degrees,violated\n";
  for (const auto& r : reports) {
    for (const auto& f : r.per_frame_flags) {
      check_field(f.frame_id, "frame id");
      out << r.model_id << ',' << r.scene_id << ',' << f.frame_id << ',' << format_double(f.epsilon)
          << ',' << (f.violated ? 1 : 0) << '\n';
    }
  }
}

void write_flags(const std::filesystem::path& path, std::span<const InconsistencyReport> reports) {
  write_file(path, [&](std::ostream& out) { write_flags(out, reports); });
}

}  // namespace drivemt
