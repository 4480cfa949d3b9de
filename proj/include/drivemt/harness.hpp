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

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "drivemt/dataset.hpp"
#include "drivemt/error.hpp"
#include "drivemt/image.hpp"

namespace drivemt {

class SteeringModel;
struct TranslatorParams;

using ImageTransform = std::function<Image(const Image&)>;
using AngleTransform = std::function<double(double)>;

// A metamorphic relation p[f_I(i)] = f_O(p[i]). The driving relation keeps
// f_O the identity: the steering angle should survive a change of scenery.
struct MetamorphicRelation {
  std::string name;
  ImageTransform input_transform;
  AngleTransform output_transform = [](double a) { return a; };
};

MetamorphicRelation identity_relation();

// Frame-level translation from one domain to the other with noise disabled.
MetamorphicRelation translator_relation(const TranslatorParams& params, Domain from, Domain to);

// Replaces every image by its transform; ids, labels and order are kept. A
// failing transform raises DataError naming the frame.
std::vector<FrameRecord> apply_relation(const MetamorphicRelation& mr,
                                        std::span<const FrameRecord> stream);
FrameRecord apply_relation(const MetamorphicRelation& mr, const FrameRecord& frame);

struct Prediction {
  std::string frame_id;
  double degrees = 0.0;
  friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Resets the model, then predicts every frame in order. Non-finite outputs
// and adapter failures raise ModelError naming the frame.
std::vector<Prediction> run_model(SteeringModel& model, std::span<const FrameRecord> stream);

// Lazy form: frames are decoded (and transformed when `mr` is given) one at a
// time, so long streams never sit in memory.
std::vector<Prediction> run_model(SteeringModel& model, const FrameStream& stream,
                                  const MetamorphicRelation* mr = nullptr);

struct PredictionPair {
  std::string frame_id;
  double angle_original = 0.0;
  double angle_transformed = 0.0;
  friend bool operator==(const PredictionPair&, const PredictionPair&) = default;
};

// Element-wise pairing; throws PairingError on a length or id mismatch.
std::vector<PredictionPair> pair_predictions(std::span<const Prediction> original,
                                             std::span<const Prediction> transformed);

class ErrorBound {
 public:
  // Throws ConfigError unless epsilon is positive and finite.
  explicit ErrorBound(double epsilon_degrees);
  double epsilon() const { return epsilon_; }
  friend bool operator==(const ErrorBound&, const ErrorBound&) = default;

 private:
  double epsilon_;
};

std::vector<ErrorBound> default_bounds();

// Pairs whose absolute angle difference is strictly greater than epsilon.
std::size_t inconsistency_count(std::span<const PredictionPair> pairs, ErrorBound bound);

struct ReportRow {
  double epsilon = 0.0;
  std::size_t count = 0;
  std::size_t total_frames = 0;
  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

// One row per bound. Bounds must be strictly ascending (ConfigError).
std::vector<ReportRow> sweep_bounds(std::span<const PredictionPair> pairs,
                                    std::span<const ErrorBound> bounds);

struct FrameFlag {
  std::string frame_id;
  double epsilon = 0.0;
  bool violated = false;
  friend bool operator==(const FrameFlag&, const FrameFlag&) = default;
};

struct InconsistencyReport {
  std::string model_id;
  std::string scene_id;
  std::vector<ReportRow> rows;
  std::vector<FrameFlag> per_frame_flags;
  friend bool operator==(const InconsistencyReport&, const InconsistencyReport&) = default;
};

InconsistencyReport make_report(const std::string& model_id, const std::string& scene_id,
                                std::span<const PredictionPair> pairs,
                                std::span<const ErrorBound> bounds, bool with_flags = false);

// Returns the first row index whose count exceeds the previous row's count,
// or -1 when the rows are non-increasing. Also rejects count > total_frames.
long first_monotonicity_violation(std::span<const ReportRow> rows);

// Throws DataError describing the first schema or monotonicity violation.
void validate_report(const InconsistencyReport& report);

// Synthetic baseline transforms.
enum class BaselineKind { Affine, Blur, Fog, Rain };

std::string to_string(BaselineKind kind);
BaselineKind parse_baseline_kind(const std::string& text);

struct BaselineParams {
  // Affine: output(p) = input(M^-1 (p - c - t) + c) with c the image centre,
  // M = [[m00, m01], [m10, m11]] and t = (tx, ty) in pixels.
  std::array<double, 4> matrix = {1.0, 0.0, 0.0, 1.0};
  double tx = 0.0, ty = 0.0;
  // Blur: Gaussian standard deviation in pixels, kernel radius ceil(3 sigma).
  double sigma = 1.0;
  // Fog: white blend weight in [0, 1], out = x + w (1 - x).
  double fog_weight = 0.3;
  // Rain: streaks per 10k pixels, streak length as a fraction of the height,
  // slant in degrees, additive intensity, and the seed fixing the layout.
  double rain_density = 4.0;
  double rain_length = 0.08;
  double rain_slant = 10.0;
  double rain_intensity = 0.35;
  std::uint64_t seed = 0;
};

// Throws ConfigError on invalid parameters for `kind`.
MetamorphicRelation baseline_transform(BaselineKind kind, const BaselineParams& params);

// Predictions: `frame_id,angle_degrees`.
void write_predictions(std::ostream& out, std::span<const Prediction> predictions);
void write_predictions(const std::filesystem::path& path, std::span<const Prediction> predictions);
std::vector<Prediction> read_predictions(std::istream& in);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

// Reports: `model_id,scene_id,epsilon_degrees,count,total_frames`, several
// reports may share one file.
void write_reports(std::ostream& out, std::span<const InconsistencyReport> reports);
void write_reports(const std::filesystem::path& path, std::span<const InconsistencyReport> reports);
std::vector<InconsistencyReport> read_reports(std::istream& in);
std::vector<InconsistencyReport> read_reports(const std::filesystem::path& path);

// Flags: `model_id,scene_id,frame_id,epsilon_degrees,violated`.
void write_flags(std::ostream& out, std::span<const InconsistencyReport> reports);
void write_flags(const std::filesystem::path& path, std::span<const InconsistencyReport> reports);

}  // namespace drivemt
