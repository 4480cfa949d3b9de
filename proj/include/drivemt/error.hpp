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

#include <stdexcept>
#include <string>

namespace drivemt {

// Base for every failure raised by the library. The CLI maps subclasses onto
// exit codes (data errors -> 2, runtime failures -> 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data is malformed, missing or inconsistent.
class DataError : public Error {
 public:
  using Error::Error;
};

class IngestionError : public DataError {
 public:
  using DataError::DataError;
};

class EmptyInputError : public DataError {
 public:
  using DataError::DataError;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

class PairingError : public DataError {
 public:
  using DataError::DataError;
};

class CheckpointError : public DataError {
 public:
  using DataError::DataError;
};

class ConfigError : public DataError {
 public:
  using DataError::DataError;
};

// A steering model adapter failed or produced an unusable prediction.
class ModelError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public ModelError {
 public:
  using ModelError::ModelError;
};

}  // namespace drivemt
