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
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "drivemt/harness.hpp"
#include "drivemt/models.hpp"
#include "drivemt/translator.hpp"

namespace drivemt {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitDataError = 2,
  kExitRuntimeFailure = 3,
};

// Settings of a test campaign after merging the config file and flags.
struct CampaignConfig {
  std::filesystem::path original_manifest;
  std::filesystem::path transformed_manifest;
  std::string transform;  // used when no transformed manifest is given
  std::filesystem::path out_dir;
  std::vector<double> bounds = {10.0, 20.0, 30.0, 40.0};
  std::uint64_t seed = 0;
  TrainConfig train;
  std::vector<std::string> models;
  std::string scene_id;
  bool flags = false;
  int grid_rows = 0;
  int cnn_epochs = 200;
  long external_timeout_ms = 30000;

  // Checks referenced paths, bounds and model specs before any work starts.
  // Throws ConfigError or IngestionError.
  void validate() const;
};

struct ModelSpecOptions {
  std::uint64_t seed = 0;
  int cnn_epochs = 200;
  long external_timeout_ms = 30000;
};

struct NamedModel {
  std::string id;
  std::unique_ptr<SteeringModel> model;
};

// "[<id>=]<kind>:<args>" with kind one of
//   constant:<degrees>
//   brightness:<gain>
//   cnn:<labelled manifest>
//   windowed:<W>:<inner spec>
//   external:<shell command>
NamedModel parse_model_spec(const std::string& spec, const ModelSpecOptions& options = {});

// identity | fog:<w> | blur:<sigma> | rain[:<density>[:<seed>]] |
// affine:<m00>,<m01>,<m10>,<m11>,<tx>,<ty>
MetamorphicRelation parse_transform_spec(const std::string& spec);

// Parses "10,20,30,40"; throws ConfigError unless strictly ascending.
std::vector<ErrorBound> parse_bounds(const std::vector<double>& values);

// Verbs: prepare, train, translate, test, report. Returns an ExitCode.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace drivemt
