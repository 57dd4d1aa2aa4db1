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
#include <vector>

#include "tea/container.hpp"
#include "tea/tensor.hpp"

namespace tea::data {

/// Parsed CSV: one timestamp column followed by numeric feature columns.
struct RawSeries {
  std::vector<std::int64_t> timestamps;  // seconds since 1970-01-01 UTC
  Tensor values;                         // T × D_raw
  std::vector<std::string> columns;      // feature names, date column excluded

  std::size_t rows() const { return timestamps.size(); }
  std::size_t features() const { return columns.size(); }
};

/// Accepts "YYYY-MM-DD", "YYYY-MM-DD HH:MM" and "YYYY-MM-DD HH:MM:SS" (a 'T'
/// separator is also accepted). Throws ParseError.
std::int64_t parse_timestamp(const std::string& text);
std::string format_timestamp(std::int64_t seconds);

/// Throws ParseError with the 1-based line number for malformed rows, missing
/// cells, non-numeric values, or non-increasing timestamps.
RawSeries parse_csv(std::istream& in);
RawSeries load_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const RawSeries& series);
void write_csv(const std::filesystem::path& path, const RawSeries& series);

/// Row boundaries of a chronological split: train is [0, train_end), val is
/// [train_end, val_end), test is [val_end, total).
struct SplitBounds {
  std::size_t train_end = 0;
  std::size_t val_end = 0;
  std::size_t total = 0;
};

/// Counts are floor(ratio·T) for train and val; test takes the remainder.
/// Throws DataError when any segment would be empty.
SplitBounds split_by_ratio(std::size_t rows, double train, double val, double test);

/// Calendar-month boundaries counted from the month of the first timestamp.
SplitBounds split_by_months(const RawSeries& series, int train_months, int val_months,
                            int test_months);

Tensor slice_rows(const Tensor& values, std::size_t begin, std::size_t end);

/// Per-column z-score statistics, fit on training rows only. Constant
/// columns get std = 1 and a warning.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<std::string> warnings;

  static Scaler fit(const Tensor& train_values);
  Tensor transform(const Tensor& values) const;
  Tensor inverse_transform(const Tensor& values) const;
};

/// One training example. The decoder seed is the last `label_len` rows of the
/// encoder input; the target follows the encoder input immediately.
struct ForecastWindow {
  Tensor encoder_input;  // L × D_raw (or L × D_1 × D_2)
  Tensor decoder_seed;   // label_len × …
  Tensor target;         // pred_len × …
  std::size_t start = 0;
};

/// Stride-1 count is T − L − pred_len + 1. `feature_shape`, when non-empty,
/// reshapes each row of D_raw values into a matrix observation (its product
/// must equal D_raw). Throws DataError when the series is too short.
std::vector<ForecastWindow> make_windows(const Tensor& values, std::size_t seq_len,
                                         std::size_t label_len, std::size_t pred_len,
                                         std::size_t stride = 1, const Shape& feature_shape = {});

io::Container windows_to_container(const std::vector<ForecastWindow>& windows);

/// A standardized, windowed dataset built from one series.
struct Dataset {
  std::vector<ForecastWindow> train;
  std::vector<ForecastWindow> val;
  std::vector<ForecastWindow> test;
  Scaler scaler;
  std::vector<std::string> columns;
  SplitBounds bounds;
};

struct DatasetOptions {
  std::size_t seq_len = 24;
  std::size_t label_len = 12;
  std::size_t pred_len = 24;
  std::size_t stride = 1;
  double train_ratio = 0.7;
  double val_ratio = 0.1;
  double test_ratio = 0.2;
  /// When all three are positive, month boundaries replace the ratios.
  int train_months = 0;
  int val_months = 0;
  int test_months = 0;
  Shape feature_shape;
};

Dataset build_dataset(const RawSeries& series, const DatasetOptions& opts);

/// ETTh1 column names: date, HUFL, HULL, MUFL, MULL, LUFL, LULL, OT.
const std::vector<std::string>& ett_columns();

/// Hourly series with the ETT schema: daily and weekly cycles, a slow AR(1)
/// drift shared across loads, and per-column noise. Deterministic in `seed`.
RawSeries make_synthetic_ett(std::size_t rows, std::uint64_t seed);

}  // namespace tea::data
