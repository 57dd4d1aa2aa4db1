// Copyright 2026 The TEA Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "tea/autodiff.hpp"
#include "tea/data.hpp"
#include "tea/model.hpp"
#include "tea/train.hpp"

namespace tea::cli {

struct DataSection {
  /// CSV path. A relative path is looked up under $TEA_DATA_DIR first, then
  /// against the config file's directory.
  std::string path;
  std::string name;  // dataset label in result rows; defaults to the file stem
  /// With no path, generate an ETT-schema series of this many rows.
  std::size_t synthetic_rows = 0;
  std::uint64_t synthetic_seed = 1;
  data::DatasetOptions split;
};

struct GradcheckSection {
  autodiff::GradCheckOptions options;
  std::size_t windows = 2;
};

struct BenchSection {
  std::size_t repeats = 5;
  std::uint64_t seed = 3;
};

struct RunConfig {
  DataSection data;
  model::ModelConfig model;
  train::TrainOptions train;
  bool with_control = false;
  GradcheckSection gradcheck;
  BenchSection bench;
  std::string output_dir = "runs/default";
  std::filesystem::path base_dir;  // directory of the config file
};

/// INI text with sections [data], [model], [train], [gradcheck], [bench] and
/// [output]. Unknown sections or keys, malformed values and inconsistent
/// shapes raise ConfigError before any work starts.
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Resolves the data path per the rules above; empty when synthetic.
std::filesystem::path resolve_data_path(const RunConfig& cfg);

/// Loads or generates the series named by the config.
data::RawSeries load_series(const RunConfig& cfg);

std::filesystem::path resolve_output_dir(const RunConfig& cfg);

}  // namespace tea::cli
