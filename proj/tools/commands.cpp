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

#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "run_config.hpp"
#include "tea/attention.hpp"
#include "tea/autodiff.hpp"
#include "tea/container.hpp"
#include "tea/data.hpp"
#include "tea/decomp.hpp"
#include "tea/errors.hpp"
#include "tea/model.hpp"
#include "tea/train.hpp"

namespace tea::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::size_t> parse_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    long long v = -1;
    try {
      v = std::stoll(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size() || v <= 0) {
      throw InvalidRank(std::string(what) + " must be positive integers, got '" + text + "'");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw InvalidRank(std::string(what) + " must not be empty");
  return out;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '\\') out += "\\\\";
    else if (c == '\n') out += "\\n";
    else if (c != '\r') out += c;
  }
  return out;
}

std::string unescape(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      out += s[i + 1] == 'n' ? '\n' : s[i + 1];
      ++i;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dataset_name(const RunConfig& rc) {
  if (!rc.data.name.empty()) return rc.data.name;
  if (!rc.data.path.empty()) return fs::path(rc.data.path).stem().string();
  return "synthetic";
}

std::string model_label(const model::ModelConfig& cfg) {
  if (!cfg.tea_encoder) return "Transformer";
  return cfg.tea_decoder ? "TEA-Transformer+TEA-decoder" : "TEA-Transformer";
}

model::ModelConfig control_of(const model::ModelConfig& cfg) {
  model::ModelConfig c = cfg;
  c.tea_encoder = false;
  c.tea_decoder = false;
  return c;
}

const std::vector<data::ForecastWindow>& pick_split(const data::Dataset& ds, const std::string& split) {
  if (split == "train") return ds.train;
  if (split == "val") return ds.val;
  if (split == "test") return ds.test;
  throw InvalidArgument("--split must be train, val or test, got '" + split + "'");
}

void write_result_header(std::ostream& out) { out << "dataset,seq_len,pred_len,model,mse,mae\n"; }

void write_result_row(std::ostream& out, const std::string& dataset, const model::ModelConfig& cfg,
                      const std::string& label, const train::Metrics& m) {
  out << dataset << ',' << cfg.seq_len << ',' << cfg.pred_len << ',' << label << ','
      << std::setprecision(6) << std::fixed << m.mse << ',' << m.mae << '\n'
      << std::defaultfloat;
}

void save_checkpoint(const fs::path& path, const model::ModelParams& params,
                     const model::ModelConfig& cfg, const std::string& config_text,
                     const fs::path& base_dir, const std::string& role, const std::string& control) {
  std::map<std::string, std::string> extra{
      {"run.config", escape(config_text)},
      {"run.base_dir", base_dir.string()},
      {"run.role", role},
  };
  if (!control.empty()) extra["run.control_checkpoint"] = control;
  io::write_file(path, model::to_checkpoint(params, cfg, extra));
}

}  // namespace

int cmd_decompose(const DecomposeArgs& a, std::ostream& out) {
  const io::Container in = io::read_file(a.input);
  const Tensor t = io::to_tensor(in);
  io::Container result;
  Tensor approx;
  std::size_t stored = 0;
  std::vector<std::size_t> ranks;

  if (a.kind == "tucker") {
    ranks = parse_list(a.ranks, "--ranks");
    decomp::TuckerFactors f;
    if (a.algorithm == "hooi") f = decomp::hooi(t, ranks);
    else if (a.algorithm == "hosvd") f = decomp::hosvd(t, ranks);
    else throw InvalidArgument("--algorithm must be hosvd or hooi");
    approx = decomp::tucker_reconstruct(f);
    stored = decomp::stored_size(f);
    result = io::from_tucker(f);
  } else if (a.kind == "cp") {
    ranks = parse_list(a.ranks, "--ranks");
    if (ranks.size() != 1) throw InvalidRank("cp takes a single rank");
    decomp::CpOptions opts;
    opts.seed = a.seed;
    const auto f = decomp::cp_als(t, ranks[0], opts);
    approx = decomp::cp_reconstruct(f);
    stored = decomp::stored_size(f);
    result = io::from_cp(f);
  } else if (a.kind == "tt") {
    decomp::TtOptions opts;
    opts.eps = a.eps;
    if (!a.ranks.empty()) opts.max_ranks = parse_list(a.ranks, "--ranks");
    const auto f = decomp::tt_svd(t, opts);
    ranks = f.ranks();
    approx = decomp::tt_reconstruct(f);
    stored = decomp::stored_size(f);
    result = io::from_tt(f);
  } else {
    throw InvalidArgument("--kind must be tucker, cp or tt, got '" + a.kind + "'");
  }

  const fs::path output = a.output.empty()
                              ? fs::path(a.input).replace_extension("." + a.kind + ".teaf")
                              : fs::path(a.output);
  io::write_file(output, result);
  if (a.report) {
    json line;
    line["kind"] = a.kind;
    line["ranks"] = ranks;
    line["rel_error"] = decomp::relative_error(t, approx);
    line["compression_ratio"] = static_cast<double>(stored) / static_cast<double>(t.size());
    line["stored"] = stored;
    line["original"] = t.size();
    line["output"] = output.string();
    out << line.dump() << '\n';
  }
  return 0;
}

int cmd_train(const std::string& config, bool with_control, std::ostream& out, std::ostream& log) {
  const RunConfig rc = load_run_config(config);
  const std::string config_text = read_text(config);
  const data::RawSeries series = load_series(rc);
  const data::Dataset ds = data::build_dataset(series, rc.data.split);
  const fs::path dir = resolve_output_dir(rc);
  fs::create_directories(dir);
  const bool control = with_control || rc.with_control;

  log << "train: " << ds.train.size() << " windows, val: " << ds.val.size()
      << ", test: " << ds.test.size() << '\n';
  for (const auto& w : ds.scaler.warnings) log << "warning: " << w << '\n';

  std::vector<std::pair<model::ModelConfig, model::ModelParams>> trained;
  const auto run_one = [&](const model::ModelConfig& cfg, const std::string& stem) {
    log << "training " << model_label(cfg) << '\n';
    const auto result = train::train(cfg, ds, rc.train, nullptr, &log);
    std::ofstream csv(dir / (stem + "_report.csv"));
    if (!csv) throw IoError("cannot write " + (dir / (stem + "_report.csv")).string());
    train::write_report_csv(csv, result.report);
    train::write_report_csv(out, result.report);
    save_checkpoint(dir / (stem + ".teaf"), result.params, cfg, config_text,
                    fs::absolute(rc.base_dir), stem, control && stem == "model" ? "control.teaf" : "");
    trained.emplace_back(cfg, result.params);
  };
  run_one(rc.model, "model");
  if (control) run_one(control_of(rc.model), "control");

  write_result_header(out);
  for (const auto& [cfg, params] : trained) {
    write_result_row(out, dataset_name(rc), cfg, model_label(cfg), train::evaluate(params, cfg, ds.test));
  }
  return 0;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const io::Container c = io::read_file(a.checkpoint);
  const model::Checkpoint ck = model::from_checkpoint(c);
  RunConfig rc;
  if (!a.config.empty()) {
    rc = load_run_config(a.config);
  } else {
    const auto text = ck.manifest.find("run.config");
    if (text == ck.manifest.end()) throw InvalidArgument("checkpoint has no stored config; pass --config");
    std::istringstream in(unescape(text->second));
    const auto base = ck.manifest.find("run.base_dir");
    rc = parse_run_config(in, base == ck.manifest.end() ? fs::path{} : fs::path(base->second));
  }
  rc.model = ck.config;
  rc.data.split.seq_len = ck.config.seq_len;
  rc.data.split.label_len = ck.config.label_len;
  rc.data.split.pred_len = ck.config.pred_len;
  const data::Dataset ds = data::build_dataset(load_series(rc), rc.data.split);
  const auto& windows = pick_split(ds, a.split);
  if (windows.empty()) throw DataError("split '" + a.split + "' has no windows");

  write_result_header(out);
  const std::string name = dataset_name(rc);
  write_result_row(out, name, ck.config, model_label(ck.config),
                   train::evaluate(ck.params, ck.config, windows));
  if (a.with_control) {
    const auto ctl = ck.manifest.find("run.control_checkpoint");
    if (ctl == ck.manifest.end()) throw InvalidArgument("checkpoint has no paired control model");
    const auto cc = model::from_checkpoint(io::read_file(fs::path(a.checkpoint).parent_path() / ctl->second));
    write_result_row(out, name, cc.config, model_label(cc.config),
                     train::evaluate(cc.params, cc.config, windows));
  }
  if (a.with_baseline) {
    write_result_row(out, name, ck.config, "Persistence", train::evaluate_persistence(windows));
  }
  return 0;
}

int cmd_gradcheck(const std::string& config, std::ostream& out) {
  const RunConfig rc = load_run_config(config);
  const data::Dataset ds = data::build_dataset(load_series(rc), rc.data.split);
  if (ds.train.size() < rc.gradcheck.windows) throw DataError("not enough training windows for gradcheck");
  const std::vector<data::ForecastWindow> batch(ds.train.begin(),
                                                ds.train.begin() + static_cast<long>(rc.gradcheck.windows));
  const auto params = model::init_params(rc.model);
  const auto result = autodiff::gradcheck(params, rc.model, batch, rc.gradcheck.options);

  out << "tensor,checked,failed,max_rel_error\n";
  for (const auto& t : result.tensors) {
    out << t.name << ',' << t.checked << ',' << t.failed << ',' << std::setprecision(3)
        << std::scientific << t.max_rel_error << std::defaultfloat << '\n';
  }
  json summary;
  summary["checked"] = result.checked;
  summary["failed"] = result.failures.size();
  summary["max_rel_error"] = result.max_rel_error;
  summary["tolerance"] = rc.gradcheck.options.tolerance;
  summary["passed"] = result.passed();
  out << summary.dump() << '\n';
  return result.passed() ? 0 : kCheckFailed;
}

int cmd_bench(const std::string& config, std::ostream& out) {
  const RunConfig rc = load_run_config(config);
  const model::ModelConfig& cfg = rc.model;
  if (!cfg.tea_encoder) throw ConfigError("bench needs tea_encoder = true");
  std::mt19937_64 rng(rc.bench.seed);
  const Tensor x = random_normal({cfg.seq_len, cfg.model_len, cfg.model_dim}, rng);
  const auto tea_params = model::init_params(cfg);
  const auto full_params = model::init_params(control_of(cfg));
  model::LayerOptions opts = model::layer_options(cfg);

  struct Path {
    const char* name;
    std::uint64_t counted = 0;
    std::uint64_t closed = 0;
    std::uint64_t projection = 0;
    std::vector<double> seconds;
    std::vector<double> fit_seconds;
  };
  Path core{"core"}, full{"full"};
  core.closed = model::encoder_attention_flops(cfg, true);
  full.closed = model::encoder_attention_flops(cfg, false);
  core.projection = model::tucker_projection_flops(x.shape(), cfg.enc_ranks);

  for (std::size_t r = 0; r < rc.bench.repeats; ++r) {
    attention::FlopCounter counter;
    opts.counter = &counter;
    auto t0 = std::chrono::steady_clock::now();
    const auto loadings = model::fit_loadings(x, cfg.enc_ranks, opts);
    core.fit_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    t0 = std::chrono::steady_clock::now();
    Tensor y = model::tea_encoder_layer(x, tea_params.encoder[0], opts, nullptr, &loadings);
    core.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    core.counted = counter.multiply_adds;

    counter.reset();
    t0 = std::chrono::steady_clock::now();
    y = model::tea_encoder_layer(x, full_params.encoder[0], opts);
    full.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    full.counted = counter.multiply_adds;
    full.fit_seconds.push_back(0.0);
  }

  out << "path,seq_len,model_len,model_dim,ranks,attention_flops,closed_form,projection_flops,"
         "median_seconds,median_fit_seconds\n";
  bool match = true;
  for (Path* p : {&core, &full}) {
    std::sort(p->seconds.begin(), p->seconds.end());
    std::sort(p->fit_seconds.begin(), p->fit_seconds.end());
    const double median = p->seconds[p->seconds.size() / 2];
    const double fit = p->fit_seconds[p->fit_seconds.size() / 2];
    out << p->name << ',' << cfg.seq_len << ',' << cfg.model_len << ',' << cfg.model_dim << ','
        << (p == &core ? std::to_string(cfg.enc_ranks[0]) + "x" + std::to_string(cfg.enc_ranks[1]) +
                             "x" + std::to_string(cfg.enc_ranks[2])
                       : "full")
        << ',' << p->counted << ',' << p->closed << ',' << p->projection << ',' << median << ','
        << fit << '\n';
    match = match && p->counted == p->closed;
  }
  json summary;
  summary["counts_match_closed_form"] = match;
  summary["core_below_full"] = core.counted < full.counted;
  summary["attention_ratio"] = static_cast<double>(core.counted) / static_cast<double>(full.counted);
  out << summary.dump() << '\n';
  return match ? 0 : kCheckFailed;
}

int cmd_synth(std::size_t rows, std::uint64_t seed, const std::string& output, std::ostream& out) {
  const auto series = data::make_synthetic_ett(rows, seed);
  data::write_csv(fs::path(output), series);
  out << "wrote " << rows << " rows to " << output << '\n';
  return 0;
}

int cmd_pack(const std::string& csv, const std::string& output, std::ostream& out) {
  const auto series = data::load_csv(csv);
  io::Container c = io::from_tensor(series.values);
  std::string cols;
  for (const auto& name : series.columns) cols += (cols.empty() ? "" : ",") + name;
  c.manifest["columns"] = cols;
  io::write_file(output, c);
  out << "packed " << shape_string(series.values.shape()) << " into " << output << '\n';
  return 0;
}

int cmd_make_tensor(const MakeTensorArgs& a, std::ostream& out) {
  const Shape shape = parse_list(a.shape, "--shape");
  std::mt19937_64 rng(a.seed);
  Tensor t;
  if (a.kind == "random") {
    t = random_normal(shape, rng);
  } else if (a.kind == "cp") {
    const auto r = parse_list(a.rank, "--rank");
    if (r.size() != 1) throw InvalidRank("cp tensors take a single rank");
    decomp::CpFactors f;
    f.weights.assign(r[0], 1.0);
    for (const std::size_t d : shape) f.loadings.push_back(Matrix::from_tensor(random_normal({d, r[0]}, rng)));
    t = decomp::cp_reconstruct(f);
  } else if (a.kind == "tucker") {
    const auto r = parse_list(a.rank, "--rank");
    if (r.size() != shape.size()) throw InvalidRank("tucker tensors need one rank per mode");
    decomp::TuckerFactors f;
    f.core = random_normal(r, rng);
    for (std::size_t m = 0; m < shape.size(); ++m) {
      f.loadings.push_back(Matrix::from_tensor(random_normal({shape[m], r[m]}, rng)));
    }
    t = decomp::tucker_reconstruct(f);
  } else {
    throw InvalidArgument("--kind must be cp, tucker or random");
  }
  io::write_file(a.output, io::from_tensor(t));
  out << "wrote " << a.kind << " tensor " << shape_string(shape) << " to " << a.output << '\n';
  return 0;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const auto report = [&err](const std::string& family, int code, const std::string& message) {
    json line;
    line["error"] = family;
    line["exit_code"] = code;
    line["message"] = message;
    err << line.dump() << '\n';
    return code;
  };

  CLI::App app{"Tensor-augmented transformer toolkit"};
  app.require_subcommand(1);

  DecomposeArgs dec;
  auto* decompose = app.add_subcommand("decompose", "Fit a Tucker, CP or TT decomposition");
  decompose->add_option("--input", dec.input, "Tensor container")->required();
  decompose->add_option("--kind", dec.kind, "tucker | cp | tt")->capture_default_str();
  decompose->add_option("--ranks", dec.ranks, "Comma-separated ranks (max ranks for tt)");
  decompose->add_option("--algorithm", dec.algorithm, "hosvd | hooi (tucker)")->capture_default_str();
  decompose->add_option("--eps", dec.eps, "Relative accuracy (tt)");
  decompose->add_option("--output", dec.output, "Factor container path");
  decompose->add_option("--seed", dec.seed, "Initialisation seed (cp)");
  decompose->add_flag("--report", dec.report, "Print a JSON report line");

  std::string config;
  bool with_control = false;
  auto* train_cmd = app.add_subcommand("train", "Train a model (and optionally its control)");
  train_cmd->add_option("--config", config, "Run configuration (INI)")->required();
  train_cmd->add_flag("--with-control", with_control, "Also train the plain-attention control");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  eval->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required();
  eval->add_option("--split", ev.split, "train | val | test")->capture_default_str();
  eval->add_option("--config", ev.config, "Override the stored run configuration");
  eval->add_flag("--with-control", ev.with_control, "Also evaluate the paired control model");
  eval->add_flag("--with-baseline", ev.with_baseline, "Also evaluate the persistence forecast");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gradcheck->add_option("--config", config, "Run configuration (INI)")->required();

  auto* bench = app.add_subcommand("bench", "Core vs full attention FLOPs and wall time");
  bench->add_option("--config", config, "Run configuration (INI)")->required();

  std::size_t rows = 17420;
  std::uint64_t seed = 1;
  std::string output;
  auto* synth = app.add_subcommand("synth", "Write a synthetic ETT-schema CSV");
  synth->add_option("--rows", rows, "Number of hourly rows")->capture_default_str();
  synth->add_option("--seed", seed, "Generator seed")->capture_default_str();
  synth->add_option("--output", output, "CSV path")->required();

  std::string csv;
  auto* pack = app.add_subcommand("pack", "Convert a CSV series into a tensor container");
  pack->add_option("--csv", csv, "Input CSV")->required();
  pack->add_option("--output", output, "Container path")->required();

  MakeTensorArgs mk;
  auto* make = app.add_subcommand("make-tensor", "Write a synthetic low-rank tensor container");
  make->add_option("--kind", mk.kind, "cp | tucker | random")->capture_default_str();
  make->add_option("--shape", mk.shape, "Comma-separated extents")->capture_default_str();
  make->add_option("--rank", mk.rank, "CP rank or Tucker ranks")->capture_default_str();
  make->add_option("--seed", mk.seed, "Generator seed")->capture_default_str();
  make->add_option("--output", mk.output, "Container path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    return report("UsageError", exit_code(ErrorKind::kInvalidArgument), e.what());
  }

  try {
    if (*decompose) return cmd_decompose(dec, out);
    if (*train_cmd) return cmd_train(config, with_control, out, err);
    if (*eval) return cmd_eval(ev, out);
    if (*gradcheck) return cmd_gradcheck(config, out);
    if (*bench) return cmd_bench(config, out);
    if (*synth) return cmd_synth(rows, seed, output, out);
    if (*pack) return cmd_pack(csv, output, out);
    if (*make) return cmd_make_tensor(mk, out);
  } catch (const Error& e) {
    return report(error_kind_name(e.kind()), exit_code(e.kind()), e.what());
  } catch (const fs::filesystem_error& e) {
    return report(error_kind_name(ErrorKind::kIo), exit_code(ErrorKind::kIo), e.what());
  } catch (const std::exception& e) {
    return report("UnexpectedError", kUnexpected, e.what());
  }
  return kUnexpected;
}

}  // namespace tea::cli
