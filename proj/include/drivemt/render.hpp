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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drivemt/harness.hpp"
#include "drivemt/image.hpp"

namespace drivemt {

struct GridRow {
  std::string frame_id;
  Image original;
  Image transformed;
  double angle_original = 0.0;
  double angle_transformed = 0.0;
};

// Side-by-side original/transformed rows. The original angle is captioned in
// red, the transformed angle in green, the frame id in white.
Image render_grid(std::span<const GridRow> rows, int cell_height = 120, int cell_width = 160);

// Aggregated counts keyed by scene, model and epsilon.
struct ReportTable {
  std::vector<std::string> scenes;
  std::vector<std::string> models;
  std::vector<double> epsilons;
  // counts[scene][model][epsilon]; nullopt where no report supplied the cell.
  std::vector<std::vector<std::vector<std::optional<std::size_t>>>> counts;
  std::vector<std::vector<std::size_t>> totals;

  std::size_t cell_count() const;
};

// Merges reports; a duplicate (scene, model, epsilon) cell or a frame total
// that changes within one (scene, model) is a DataError.
ReportTable aggregate_reports(std::span<const InconsistencyReport> reports);

// `scene_id,model_id,total_frames,eps_<e>...` with one column per epsilon.
void write_table_csv(const std::filesystem::path& path, const ReportTable& table);
void write_table_markdown(const std::filesystem::path& path, const ReportTable& table);

// Line plot of count against epsilon, one series per (scene, model).
std::string counts_plot_svg(const ReportTable& table);

// Steering angle per frame for the original and transformed streams.
std::string predictions_plot_svg(std::span<const PredictionPair> pairs, const std::string& title);

}  // namespace drivemt
