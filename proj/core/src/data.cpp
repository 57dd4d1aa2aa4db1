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

#include "tea/data.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "tea/errors.hpp"

namespace tea::data {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    cells.push_back(trim(std::string_view(line).substr(pos, comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return cells;
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

int month_index(std::int64_t seconds) {
  using namespace std::chrono;
  const auto days = sys_days{} + std::chrono::days{static_cast<int>(
                                     seconds >= 0 ? seconds / 86400 : (seconds - 86399) / 86400)};
  const year_month_day ymd{days};
  return static_cast<int>(ymd.year()) * 12 + static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
}

std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

std::int64_t parse_timestamp(const std::string& raw) {
  const std::string text = trim(raw);
  // YYYY-MM-DD[( |T)HH:MM[:SS]]
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  const auto bad = [&]() { return ParseError("invalid timestamp '" + text + "'"); };
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') throw bad();
  if (!parse_int(std::string_view(text).substr(0, 4), y) ||
      !parse_int(std::string_view(text).substr(5, 2), mo) ||
      !parse_int(std::string_view(text).substr(8, 2), d)) {
    throw bad();
  }
  if (text.size() > 10) {
    if (text[10] != ' ' && text[10] != 'T') throw bad();
    const std::string_view rest = std::string_view(text).substr(11);
    if (rest.size() != 5 && rest.size() != 8) throw bad();
    if (rest[2] != ':' || !parse_int(rest.substr(0, 2), h) || !parse_int(rest.substr(3, 2), mi)) {
      throw bad();
    }
    if (rest.size() == 8 && (rest[5] != ':' || !parse_int(rest.substr(6, 2), s))) throw bad();
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59 || h < 0 || mi < 0 || s < 0) throw bad();
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + s;
}

std::string format_timestamp(std::int64_t seconds) {
  using namespace std::chrono;
  const std::int64_t day_count = seconds >= 0 ? seconds / 86400 : (seconds - 86399) / 86400;
  const std::int64_t rem = seconds - day_count * 86400;
  const year_month_day ymd{sys_days{} + std::chrono::days{static_cast<int>(day_count)}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                static_cast<int>(rem % 60));
  return buf;
}

RawSeries parse_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_commas(line);
      break;
    }
  }
  if (header.size() < 2) throw ParseError("CSV header needs a date column and at least one feature", line_no);
  // Strip a UTF-8 byte-order mark from the first header cell.
  if (header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0] = header[0].substr(3);

  RawSeries series;
  series.columns.assign(header.begin() + 1, header.end());
  const std::size_t width = header.size();
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " cells, found " +
                       std::to_string(cells.size()), line_no);
    }
    std::int64_t ts = 0;
    try {
      ts = parse_timestamp(cells[0]);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (!series.timestamps.empty() && ts <= series.timestamps.back()) {
      throw ParseError("timestamps must be strictly increasing", line_no);
    }
    series.timestamps.push_back(ts);
    for (std::size_t c = 1; c < width; ++c) {
      const auto& cell = cells[c];
      if (cell.empty()) throw ParseError("missing value in column '" + header[c] + "'", line_no);
      double v = 0.0;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || p != cell.data() + cell.size() || !std::isfinite(v)) {
        throw ParseError("non-numeric value '" + cell + "' in column '" + header[c] + "'", line_no);
      }
      values.push_back(v);
    }
  }
  if (series.timestamps.empty()) throw ParseError("CSV has no data rows", line_no);
  series.values = Tensor({series.timestamps.size(), width - 1}, std::move(values));
  return series;
}

RawSeries load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_csv(in);
}

void write_csv(std::ostream& out, const RawSeries& series) {
  out << "date";
  for (const auto& c : series.columns) out << ',' << c;
  out << '\n';
  const std::size_t d = series.features();
  for (std::size_t r = 0; r < series.rows(); ++r) {
    out << format_timestamp(series.timestamps[r]);
    for (std::size_t c = 0; c < d; ++c) out << ',' << format_number(series.values[r * d + c]);
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const RawSeries& series) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_csv(out, series);
}

SplitBounds split_by_ratio(std::size_t rows, double train, double val, double test) {
  if (train < 0 || val < 0 || test < 0 || train + val + test > 1.0 + 1e-9) {
    throw DataError("split ratios must be non-negative and sum to at most 1");
  }
  // The small offset keeps products such as 0.29·100 from flooring to 28.
  const auto count = [rows](double r) {
    return static_cast<std::size_t>(std::floor(r * static_cast<double>(rows) + 1e-9));
  };
  SplitBounds b;
  b.train_end = count(train);
  b.val_end = b.train_end + count(val);
  b.total = std::abs(train + val + test - 1.0) < 1e-9 ? rows : b.val_end + count(test);
  if (b.train_end == 0 || b.val_end == b.train_end || b.total <= b.val_end) {
    throw DataError("split of " + std::to_string(rows) + " rows leaves an empty segment");
  }
  return b;
}

SplitBounds split_by_months(const RawSeries& series, int train_months, int val_months,
                            int test_months) {
  if (series.rows() == 0) throw DataError("cannot split an empty series");
  if (train_months <= 0 || val_months <= 0 || test_months <= 0) {
    throw DataError("month counts must be positive");
  }
  const int first = month_index(series.timestamps.front());
  const auto boundary = [&](int months) {
    std::size_t i = 0;
    while (i < series.rows() && month_index(series.timestamps[i]) - first < months) ++i;
    return i;
  };
  SplitBounds b;
  b.train_end = boundary(train_months);
  b.val_end = boundary(train_months + val_months);
  b.total = boundary(train_months + val_months + test_months);
  if (b.train_end == 0 || b.val_end == b.train_end || b.total == b.val_end) {
    throw DataError("month split leaves an empty segment");
  }
  return b;
}

Tensor slice_rows(const Tensor& values, std::size_t begin, std::size_t end) {
  if (begin >= end || end > values.dim(0)) throw DataError("invalid row slice");
  const std::size_t width = values.size() / values.dim(0);
  Shape shape = values.shape();
  shape[0] = end - begin;
  const auto first = values.values().begin() + static_cast<std::ptrdiff_t>(begin * width);
  return Tensor(shape, std::vector<double>(first, first + static_cast<std::ptrdiff_t>((end - begin) * width)));
}

Scaler Scaler::fit(const Tensor& train) {
  if (train.order() != 2) throw ShapeError("scaler expects a T x D matrix");
  const std::size_t t = train.dim(0), d = train.dim(1);
  Scaler s;
  s.mean.assign(d, 0.0);
  s.std.assign(d, 0.0);
  for (std::size_t r = 0; r < t; ++r)
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += train[r * d + c];
  for (auto& m : s.mean) m /= static_cast<double>(t);
  for (std::size_t r = 0; r < t; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      const double z = train[r * d + c] - s.mean[c];
      s.std[c] += z * z;
    }
  for (std::size_t c = 0; c < d; ++c) {
    s.std[c] = std::sqrt(s.std[c] / static_cast<double>(t));
    if (!(s.std[c] > 1e-12)) {
      s.warnings.push_back("column " + std::to_string(c) + " is constant on the training split; using std 1");
      s.std[c] = 1.0;
    }
  }
  return s;
}

Tensor Scaler::transform(const Tensor& values) const {
  const std::size_t d = mean.size();
  if (values.size() % d != 0) throw ShapeError("scaler column count mismatch");
  Tensor out = values;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - mean[i % d]) / std[i % d];
  return out;
}

Tensor Scaler::inverse_transform(const Tensor& values) const {
  const std::size_t d = mean.size();
  if (values.size() % d != 0) throw ShapeError("scaler column count mismatch");
  Tensor out = values;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] * std[i % d] + mean[i % d];
  return out;
}

std::vector<ForecastWindow> make_windows(const Tensor& values, std::size_t seq_len,
                                         std::size_t label_len, std::size_t pred_len,
                                         std::size_t stride, const Shape& feature_shape) {
  if (values.order() != 2) throw ShapeError("windows expect a T x D matrix");
  if (seq_len == 0 || label_len == 0 || pred_len == 0 || stride == 0) {
    throw DataError("window sizes must be positive");
  }
  if (label_len > seq_len) throw DataError("label_len cannot exceed seq_len");
  const std::size_t t = values.dim(0), d = values.dim(1);
  if (!feature_shape.empty() && shape_size(feature_shape) != d) {
    throw DataError("feature shape " + shape_string(feature_shape) + " does not factor " +
                    std::to_string(d) + " columns");
  }
  if (t < seq_len + pred_len) {
    throw DataError("series of " + std::to_string(t) + " rows is too short for seq_len " +
                    std::to_string(seq_len) + " + pred_len " + std::to_string(pred_len));
  }
  const auto shaped = [&](Tensor rows) {
    if (feature_shape.empty()) return rows;
    Shape s{rows.dim(0)};
    s.insert(s.end(), feature_shape.begin(), feature_shape.end());
    return rows.reshaped(std::move(s));
  };
  std::vector<ForecastWindow> out;
  for (std::size_t s = 0; s + seq_len + pred_len <= t; s += stride) {
    ForecastWindow w;
    w.start = s;
    w.encoder_input = shaped(slice_rows(values, s, s + seq_len));
    w.decoder_seed = shaped(slice_rows(values, s + seq_len - label_len, s + seq_len));
    w.target = shaped(slice_rows(values, s + seq_len, s + seq_len + pred_len));
    out.push_back(std::move(w));
  }
  return out;
}

io::Container windows_to_container(const std::vector<ForecastWindow>& windows) {
  io::Container c;
  c.kind = io::ContainerKind::kWindows;
  c.manifest["count"] = std::to_string(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const std::string p = "w" + std::to_string(i) + ".";
    c.blocks.push_back({p + "start", Tensor({1}, static_cast<double>(windows[i].start))});
    c.blocks.push_back({p + "encoder_input", windows[i].encoder_input});
    c.blocks.push_back({p + "decoder_seed", windows[i].decoder_seed});
    c.blocks.push_back({p + "target", windows[i].target});
  }
  return c;
}

Dataset build_dataset(const RawSeries& series, const DatasetOptions& opts) {
  Dataset ds;
  ds.columns = series.columns;
  ds.bounds = opts.train_months > 0 && opts.val_months > 0 && opts.test_months > 0
                  ? split_by_months(series, opts.train_months, opts.val_months, opts.test_months)
                  : split_by_ratio(series.rows(), opts.train_ratio, opts.val_ratio, opts.test_ratio);
  ds.scaler = Scaler::fit(slice_rows(series.values, 0, ds.bounds.train_end));
  const Tensor standardized = ds.scaler.transform(series.values);
  const auto segment = [&](std::size_t begin, std::size_t end, const char* name) {
    const std::size_t need = opts.seq_len + opts.pred_len;
    if (end - begin < need) {
      throw DataError(std::string(name) + " split has " + std::to_string(end - begin) +
                      " rows, fewer than the " + std::to_string(need) + " one window needs");
    }
    return make_windows(slice_rows(standardized, begin, end), opts.seq_len, opts.label_len,
                        opts.pred_len, opts.stride, opts.feature_shape);
  };
  ds.train = segment(0, ds.bounds.train_end, "train");
  ds.val = segment(ds.bounds.train_end, ds.bounds.val_end, "val");
  ds.test = segment(ds.bounds.val_end, ds.bounds.total, "test");
  for (auto& w : ds.val) w.start += ds.bounds.train_end;
  for (auto& w : ds.test) w.start += ds.bounds.val_end;
  return ds;
}

const std::vector<std::string>& ett_columns() {
  static const std::vector<std::string> cols{"HUFL", "HULL", "MUFL", "MULL", "LUFL", "LULL", "OT"};
  return cols;
}

RawSeries make_synthetic_ett(std::size_t rows, std::uint64_t seed) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto& cols = ett_columns();
  const std::size_t d = cols.size();

  // Per-column level, daily amplitude, daily phase, weekly amplitude, drift
  // loading and noise scale. Loads come in (high, mid, low) useful/useless
  // pairs; OT lags the loads.
  const double level[] = {7.0, 2.0, 4.5, 1.2, 3.0, 1.0, 12.0};
  const double daily[] = {2.5, 0.6, 2.0, 0.5, 1.2, 0.3, 1.5};
  const double phase[] = {0.0, 0.4, 0.2, 0.6, -0.3, 0.1, 1.2};
  const double weekly[] = {0.8, 0.2, 0.6, 0.2, 0.5, 0.1, 0.7};
  const double drift_load[] = {1.0, 0.3, 0.8, 0.2, 0.6, 0.2, 1.5};
  const double noise[] = {0.35, 0.2, 0.3, 0.15, 0.25, 0.1, 0.3};

  RawSeries s;
  s.columns = cols;
  s.timestamps.reserve(rows);
  std::vector<double> values(rows * d);
  const std::int64_t start = parse_timestamp("2016-07-01 00:00:00");
  double drift = 0.0;
  std::vector<double> ar(d, 0.0);
  for (std::size_t t = 0; t < rows; ++t) {
    s.timestamps.push_back(start + static_cast<std::int64_t>(t) * 3600);
    drift = 0.995 * drift + 0.05 * normal(rng);
    const double hour = static_cast<double>(t % 24);
    const double week = static_cast<double>(t % 168);
    for (std::size_t c = 0; c < d; ++c) {
      ar[c] = 0.6 * ar[c] + noise[c] * normal(rng);
      double v = level[c] + daily[c] * std::sin(kTwoPi * hour / 24.0 + phase[c]) +
                 0.3 * daily[c] * std::sin(2.0 * kTwoPi * hour / 24.0 + 2.0 * phase[c]) +
                 weekly[c] * std::sin(kTwoPi * week / 168.0) + drift_load[c] * drift + ar[c];
      values[t * d + c] = std::round(v * 1000.0) / 1000.0;
    }
  }
  s.values = Tensor({rows, d}, std::move(values));
  return s;
}

}  // namespace tea::data
