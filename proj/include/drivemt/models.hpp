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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "drivemt/dataset.hpp"

namespace drivemt {

// Contract through which the harness drives a steering model. Frames arrive
// one at a time in stream order; windowed models keep the preceding frames.
class SteeringModel {
 public:
  virtual ~SteeringModel() = default;

  virtual std::string id() const = 0;
  // 1 for stateless models.
  virtual int window_size() const { return 1; }
  // Steering angle in degrees for the next frame of the stream.
  virtual double predict(const FrameRecord& frame) = 0;
  // Forgets every frame seen so far.
  virtual void reset() {}
};

std::unique_ptr<SteeringModel> constant_model(double degrees);

// Predicts gain * (mean sample value - 0.5).
std::unique_ptr<SteeringModel> brightness_model(double gain);

struct ToyCnnConfig {
  int epochs = 200;
  int batch_size = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  // Frames are resized to this resolution before the network.
  int input_height = 24;
  int input_width = 32;
};

struct ToyCnnTraining {
  std::unique_ptr<SteeringModel> model;
  // Mean squared error on standardized labels, one entry per epoch.
  std::vector<double> epoch_losses;
};

// Trains a small convolutional regressor on labelled frames. Throws
// DataError when a frame has no steering label or the set is empty.
ToyCnnTraining train_toy_cnn(std::span<const FrameRecord> frames, const ToyCnnConfig& config);
ToyCnnTraining train_toy_cnn(const DatasetManifest& manifest, const ToyCnnConfig& config);

std::unique_ptr<SteeringModel> toy_cnn_model(const DatasetManifest& manifest,
                                             const ToyCnnConfig& config);

using WindowAggregator = std::function<double(std::span<const double>)>;

double mean_aggregator(std::span<const double> values);

// Keeps the inner predictions of the last `window` frames and aggregates
// them. Until `window` frames have been seen the window is left-padded with
// the first frame's prediction.
std::unique_ptr<SteeringModel> windowed_model(std::unique_ptr<SteeringModel> inner, int window,
                                              WindowAggregator aggregator = mean_aggregator);

struct ExternalModelOptions {
  // Run through /bin/sh -c.
  std::string command;
  std::string model_id;
  std::chrono::milliseconds timeout{30000};
};

// Child process speaking the line protocol on stdin/stdout:
//   "PREDICT <absolute image path>" -> "<decimal degrees>"
//   "RESET" -> "OK"
// Frames without a source file are written to a temporary PNG first.
std::unique_ptr<SteeringModel> external_model(const ExternalModelOptions& options);

}  // namespace drivemt
