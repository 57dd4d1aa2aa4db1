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

#include "run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tea/errors.hpp"

namespace tea::cli {
namespace {

namespace pt = boost::property_tree;

using Setter = std::function<void(RunConfig&, const std::string&)>;

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

// "12   ; note" -> "12". A marker must follow whitespace so paths keep '#'.
std::string strip_inline_comment(const std::string& v) {
  if (!v.empty() && (v[0] == ';' || v[0] == '#')) return {};
  for (std::size_t i = 1; i < v.size(); ++i) {
    if ((v[i] == ';' || v[i] == '#') && (v[i - 1] == ' ' || v[i - 1] == '\t')) {
      const auto end = v.find_last_not_of(" \t", i - 1);
      return end == std::string::npos ? std::string() : v.substr(0, end + 1);
    }
  }
  return v;
}

Shape to_shape(const std::string& key, const std::string& v) {
  Shape s;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a == std::string::npos) throw ConfigError("'" + key + "' has an empty entry");
    s.push_back(to_size(key, item.substr(a, b - a + 1)));
  }
  return s;
}

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = {
      {"data",
       {
           {"path", [](RunConfig& c, const std::string& v) { c.data.path = v; }},
           {"name", [](RunConfig& c, const std::string& v) { c.data.name = v; }},
           {"synthetic_rows",
            [](RunConfig& c, const std::string& v) { c.data.synthetic_rows = to_size("synthetic_rows", v); }},
           {"synthetic_seed",
            [](RunConfig& c, const std::string& v) { c.data.synthetic_seed = to_size("synthetic_seed", v); }},
           {"stride", [](RunConfig& c, const std::string& v) { c.data.split.stride = to_size("stride", v); }},
           {"train_ratio",
            [](RunConfig& c, const std::string& v) { c.data.split.train_ratio = to_real("train_ratio", v); }},
           {"val_ratio",
            [](RunConfig& c, const std::string& v) { c.data.split.val_ratio = to_real("val_ratio", v); }},
           {"test_ratio",
            [](RunConfig& c, const std::string& v) { c.data.split.test_ratio = to_real("test_ratio", v); }},
           {"train_months",
            [](RunConfig& c, const std::string& v) { c.data.split.train_months = to_int("train_months", v); }},
           {"val_months",
            [](RunConfig& c, const std::string& v) { c.data.split.val_months = to_int("val_months", v); }},
           {"test_months",
            [](RunConfig& c, const std::string& v) { c.data.split.test_months = to_int("test_months", v); }},
           {"feature_shape",
            [](RunConfig& c, const std::string& v) { c.data.split.feature_shape = to_shape("feature_shape", v); }},
       }},
      {"train",
       {
           {"optimizer",
            [](RunConfig& c, const std::string& v) {
              if (v == "adam") c.train.optimizer = train::Optimizer::kAdam;
              else if (v == "sgd") c.train.optimizer = train::Optimizer::kSgd;
              else throw ConfigError("'optimizer' must be adam or sgd, got '" + v + "'");
            }},
           {"lr", [](RunConfig& c, const std::string& v) { c.train.lr = to_real("lr", v); }},
           {"batch_size", [](RunConfig& c, const std::string& v) { c.train.batch_size = to_size("batch_size", v); }},
           {"max_epochs", [](RunConfig& c, const std::string& v) { c.train.max_epochs = to_size("max_epochs", v); }},
           {"patience", [](RunConfig& c, const std::string& v) { c.train.patience = to_size("patience", v); }},
           {"halve_on_plateau",
            [](RunConfig& c, const std::string& v) { c.train.halve_on_plateau = to_bool("halve_on_plateau", v); }},
           {"seed", [](RunConfig& c, const std::string& v) { c.train.seed = to_size("seed", v); }},
           {"max_train_windows",
            [](RunConfig& c, const std::string& v) { c.train.max_train_windows = to_size("max_train_windows", v); }},
           {"max_val_windows",
            [](RunConfig& c, const std::string& v) { c.train.max_val_windows = to_size("max_val_windows", v); }},
           {"with_control", [](RunConfig& c, const std::string& v) { c.with_control = to_bool("with_control", v); }},
       }},
      {"gradcheck",
       {
           {"step", [](RunConfig& c, const std::string& v) { c.gradcheck.options.step = to_real("step", v); }},
           {"tolerance",
            [](RunConfig& c, const std::string& v) { c.gradcheck.options.tolerance = to_real("tolerance", v); }},
           {"floor", [](RunConfig& c, const std::string& v) { c.gradcheck.options.floor = to_real("floor", v); }},
           {"max_per_tensor",
            [](RunConfig& c, const std::string& v) {
              c.gradcheck.options.max_per_tensor = to_size("max_per_tensor", v);
            }},
           {"seed", [](RunConfig& c, const std::string& v) { c.gradcheck.options.seed = to_size("seed", v); }},
           {"extended",
            [](RunConfig& c, const std::string& v) { c.gradcheck.options.extended = to_bool("extended", v); }},
           {"windows", [](RunConfig& c, const std::string& v) { c.gradcheck.windows = to_size("windows", v); }},
       }},
      {"bench",
       {
           {"repeats", [](RunConfig& c, const std::string& v) { c.bench.repeats = to_size("repeats", v); }},
           {"seed", [](RunConfig& c, const std::string& v) { c.bench.seed = to_size("seed", v); }},
       }},
      {"output",
       {
           {"dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
       }},
  };
  return s;
}

void validate(const RunConfig& c) {
  c.model.validate();
  if (c.data.path.empty() && c.data.synthetic_rows == 0) {
    throw ConfigError("[data] needs either 'path' or 'synthetic_rows'");
  }
  if (!c.data.path.empty() && c.data.synthetic_rows > 0) {
    throw ConfigError("[data] 'path' and 'synthetic_rows' are mutually exclusive");
  }
  const auto& s = c.data.split;
  if (s.stride == 0) throw ConfigError("'stride' must be positive");
  const bool months = s.train_months > 0 || s.val_months > 0 || s.test_months > 0;
  if (months && !(s.train_months > 0 && s.val_months > 0 && s.test_months > 0)) {
    throw ConfigError("month splits need train_months, val_months and test_months all positive");
  }
  if (!months && (s.train_ratio <= 0 || s.val_ratio <= 0 || s.test_ratio <= 0 ||
                  s.train_ratio + s.val_ratio + s.test_ratio > 1.0 + 1e-9)) {
    throw ConfigError("split ratios must be positive and sum to at most 1");
  }
  if (!s.feature_shape.empty() && shape_size(s.feature_shape) != c.model.features) {
    throw ConfigError("feature_shape does not multiply out to model.features");
  }
  if (!(c.train.lr >= 0)) throw ConfigError("'lr' must be non-negative");
  if (c.train.batch_size == 0) throw ConfigError("'batch_size' must be positive");
  if (c.train.max_epochs == 0) throw ConfigError("'max_epochs' must be positive");
  if (!(c.gradcheck.options.step > 0) || !(c.gradcheck.options.tolerance > 0)) {
    throw ConfigError("gradcheck step and tolerance must be positive");
  }
  if (c.gradcheck.windows == 0) throw ConfigError("gradcheck 'windows' must be positive");
  if (c.bench.repeats == 0) throw ConfigError("bench 'repeats' must be positive");
  if (c.output_dir.empty()) throw ConfigError("[output] 'dir' must not be empty");
}

}  // namespace

RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig cfg;
  cfg.base_dir = base_dir;
  const auto& sch = schema();
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' is outside any section");
    const bool is_model = section == "model";
    const auto sec = sch.find(section);
    if (!is_model && sec == sch.end()) throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, node] : body) {
      const std::string value = strip_inline_comment(node.get_value<std::string>());
      if (is_model) {
        if (!model::set_config_value(cfg.model, key, value)) {
          throw ConfigError("unknown key '" + key + "' in [model]");
        }
        continue;
      }
      const auto setter = sec->second.find(key);
      if (setter == sec->second.end()) {
        throw ConfigError("unknown key '" + key + "' in [" + section + "]");
      }
      setter->second(cfg, value);
    }
  }
  cfg.data.split.seq_len = cfg.model.seq_len;
  cfg.data.split.label_len = cfg.model.label_len;
  cfg.data.split.pred_len = cfg.model.pred_len;
  validate(cfg);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_run_config(in, path.parent_path());
}

std::filesystem::path resolve_data_path(const RunConfig& cfg) {
  if (cfg.data.path.empty()) return {};
  const std::filesystem::path p(cfg.data.path);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("TEA_DATA_DIR"); root && *root) {
    const auto under_root = std::filesystem::path(root) / p;
    if (std::filesystem::exists(under_root)) return under_root;
  }
  return cfg.base_dir / p;
}

data::RawSeries load_series(const RunConfig& cfg) {
  data::RawSeries series = cfg.data.path.empty()
                               ? data::make_synthetic_ett(cfg.data.synthetic_rows, cfg.data.synthetic_seed)
                               : data::load_csv(resolve_data_path(cfg));
  if (series.features() != cfg.model.features) {
    throw DataError("dataset has " + std::to_string(series.features()) + " feature columns but " +
                    "model.features is " + std::to_string(cfg.model.features));
  }
  return series;
}

std::filesystem::path resolve_output_dir(const RunConfig& cfg) { return cfg.output_dir; }

}  // namespace tea::cli
