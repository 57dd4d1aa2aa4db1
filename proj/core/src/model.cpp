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

#include "tea/model.hpp"

#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

#include "tea/errors.hpp"

namespace tea::model {
namespace {

using attention::AttentionMask;
using attention::AttentionOptions;
using attention::AttentionParams;

Tensor uniform_fan_in(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return random_uniform(std::move(shape), rng, -bound, bound);
}

AttentionParams init_attention(std::size_t a, std::size_t b, const ModelConfig& cfg,
                               std::mt19937_64& rng) {
  AttentionParams p;
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    attention::HeadParams head;
    head.w_q = uniform_fan_in({a, b, cfg.attn_dim}, a * b, rng);
    head.w_k = uniform_fan_in({a, b, cfg.attn_dim}, a * b, rng);
    head.w_v = uniform_fan_in({a, b, cfg.attn_dim}, a * b, rng);
    head.w_o = uniform_fan_in({cfg.attn_dim, a, b}, cfg.attn_dim, rng);
    p.heads.push_back(std::move(head));
  }
  p.head_weights = Tensor({cfg.heads}, 1.0 / static_cast<double>(cfg.heads));
  return p;
}

LayerNormParams init_norm(std::size_t a, std::size_t b) {
  return {Tensor::ones({a, b}), Tensor::zeros({a, b})};
}

EmbeddingParams init_embedding(std::size_t len, const ModelConfig& cfg, std::mt19937_64& rng) {
  EmbeddingParams e;
  e.value_proj = uniform_fan_in({cfg.features, cfg.model_dim}, cfg.features, rng);
  e.expansion = uniform_fan_in({cfg.model_len}, 1, rng);
  e.positional = Tensor({len, cfg.model_len, cfg.model_dim});
  const double dm = static_cast<double>(cfg.model_dim);
  for (std::size_t l = 0; l < len; ++l) {
    for (std::size_t j = 0; j < cfg.model_dim; ++j) {
      const double freq = std::pow(10000.0, -static_cast<double>(j - j % 2) / dm);
      const double v = j % 2 == 0 ? std::sin(static_cast<double>(l) * freq)
                                  : std::cos(static_cast<double>(l) * freq);
      for (std::size_t i = 0; i < cfg.model_len; ++i) e.positional(l, i, j) = v;
    }
  }
  return e;
}

void check_tucker_ranks(const Tensor& x, const decomp::Ranks& ranks) {
  if (ranks.size() != 3) throw InvalidRank("TEA layers need three Tucker ranks");
  for (std::size_t m = 0; m < 3; ++m) {
    if (ranks[m] < 1 || ranks[m] > x.dim(m)) {
      throw InvalidRank("rank " + std::to_string(ranks[m]) + " out of range for mode " +
                        std::to_string(m) + " of " + shape_string(x.shape()));
    }
  }
}

std::vector<Matrix> loadings_for(const Tensor& x, const decomp::Ranks& ranks,
                                 const LayerOptions& opts, const std::vector<Matrix>* frozen) {
  check_tucker_ranks(x, ranks);
  if (!frozen) return fit_loadings(x, ranks, opts);
  if (frozen->size() != 3) throw ShapeError("frozen loadings need one matrix per mode");
  for (std::size_t m = 0; m < 3; ++m) {
    if ((*frozen)[m].rows() != x.dim(m) || (*frozen)[m].cols() != ranks[m]) {
      throw ShapeError("frozen loading " + std::to_string(m) + " does not match the layer");
    }
  }
  return *frozen;
}

Tensor maybe_norm(const Tensor& x, const LayerNormParams& p, const LayerOptions& opts,
                  NormTrace* trace) {
  if (!opts.layer_norm) return x;
  return layer_norm(x, p, trace);
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string join_ranks(const decomp::Ranks& r) {
  std::string s;
  for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + std::to_string(r[i]);
  return s;
}

}  // namespace

decomp::Ranks ModelConfig::decoder_ranks() const {
  if (!dec_ranks.empty()) return dec_ranks;
  decomp::Ranks r = enc_ranks;
  if (!r.empty()) r[0] = std::min(r[0], decoder_len());
  return r;
}

void ModelConfig::validate() const {
  const auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(seq_len, "seq_len");
  positive(label_len, "label_len");
  positive(pred_len, "pred_len");
  positive(features, "features");
  positive(model_len, "model_len");
  positive(model_dim, "model_dim");
  positive(attn_dim, "attn_dim");
  positive(heads, "heads");
  if (label_len > seq_len) throw ConfigError("label_len cannot exceed seq_len");
  const auto check = [](const decomp::Ranks& r, const Shape& shape, const char* what) {
    if (r.size() != 3) throw InvalidRank(std::string(what) + " needs three ranks");
    for (std::size_t m = 0; m < 3; ++m) {
      if (r[m] < 1 || r[m] > shape[m]) {
        throw InvalidRank(std::string(what) + " rank " + std::to_string(r[m]) + " for mode " +
                          std::to_string(m) + " must lie in [1, " + std::to_string(shape[m]) + "]");
      }
    }
  };
  if (tea_encoder && enc_layers > 0) check(enc_ranks, {seq_len, model_len, model_dim}, "encoder");
  if (tea_decoder && dec_layers > 0) {
    check(decoder_ranks(), {decoder_len(), model_len, model_dim}, "decoder");
  }
  if (!(hooi.tol > 0.0) || hooi.max_iter < 1) throw ConfigError("invalid HOOI settings");
}

std::map<std::string, std::string> to_manifest(const ModelConfig& c) {
  std::map<std::string, std::string> m;
  m["seq_len"] = std::to_string(c.seq_len);
  m["label_len"] = std::to_string(c.label_len);
  m["pred_len"] = std::to_string(c.pred_len);
  m["features"] = std::to_string(c.features);
  m["model_len"] = std::to_string(c.model_len);
  m["model_dim"] = std::to_string(c.model_dim);
  m["attn_dim"] = std::to_string(c.attn_dim);
  m["heads"] = std::to_string(c.heads);
  m["enc_layers"] = std::to_string(c.enc_layers);
  m["dec_layers"] = std::to_string(c.dec_layers);
  m["enc_ranks"] = join_ranks(c.enc_ranks);
  m["dec_ranks"] = join_ranks(c.dec_ranks);
  m["tucker"] = c.tucker == TuckerAlgorithm::kHooi ? "hooi" : "hosvd";
  m["hooi_max_iter"] = std::to_string(c.hooi.max_iter);
  m["hooi_tol"] = format_double(c.hooi.tol);
  m["tea_encoder"] = c.tea_encoder ? "true" : "false";
  m["tea_decoder"] = c.tea_decoder ? "true" : "false";
  switch (c.activation.kind) {
    case attention::ActivationKind::kRelu: m["activation"] = "relu"; break;
    case attention::ActivationKind::kLeakyRelu: m["activation"] = "leaky_relu"; break;
    case attention::ActivationKind::kIdentity: m["activation"] = "identity"; break;
  }
  m["leaky_alpha"] = format_double(c.activation.alpha);
  m["scale_scores"] = c.scale_scores ? "true" : "false";
  m["layer_norm"] = c.layer_norm ? "true" : "false";
  m["seed"] = std::to_string(c.seed);
  return m;
}

namespace {

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("key '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("key '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "' expects a boolean, got '" + v + "'");
}

decomp::Ranks parse_ranks(const std::string& key, const std::string& v) {
  decomp::Ranks r;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw ConfigError("key '" + key + "' has an empty rank");
    r.push_back(parse_size(key, item.substr(first, last - first + 1)));
  }
  return r;
}

}  // namespace

bool set_config_value(ModelConfig& c, const std::string& key, const std::string& v) {
  if (key == "seq_len") c.seq_len = parse_size(key, v);
  else if (key == "label_len") c.label_len = parse_size(key, v);
  else if (key == "pred_len") c.pred_len = parse_size(key, v);
  else if (key == "features") c.features = parse_size(key, v);
  else if (key == "model_len") c.model_len = parse_size(key, v);
  else if (key == "model_dim") c.model_dim = parse_size(key, v);
  else if (key == "attn_dim") c.attn_dim = parse_size(key, v);
  else if (key == "heads") c.heads = parse_size(key, v);
  else if (key == "enc_layers") c.enc_layers = parse_size(key, v);
  else if (key == "dec_layers") c.dec_layers = parse_size(key, v);
  else if (key == "enc_ranks") c.enc_ranks = parse_ranks(key, v);
  else if (key == "dec_ranks") c.dec_ranks = v.empty() ? decomp::Ranks{} : parse_ranks(key, v);
  else if (key == "tucker") {
    if (v == "hosvd") c.tucker = TuckerAlgorithm::kHosvd;
    else if (v == "hooi") c.tucker = TuckerAlgorithm::kHooi;
    else throw ConfigError("tucker must be 'hosvd' or 'hooi'");
  } else if (key == "hooi_max_iter") c.hooi.max_iter = parse_size(key, v);
  else if (key == "hooi_tol") c.hooi.tol = parse_real(key, v);
  else if (key == "tea_encoder") c.tea_encoder = parse_bool(key, v);
  else if (key == "tea_decoder") c.tea_decoder = parse_bool(key, v);
  else if (key == "activation") {
    if (v == "relu") c.activation.kind = attention::ActivationKind::kRelu;
    else if (v == "leaky_relu") c.activation.kind = attention::ActivationKind::kLeakyRelu;
    else if (v == "identity") c.activation.kind = attention::ActivationKind::kIdentity;
    else throw ConfigError("activation must be relu, leaky_relu or identity");
  } else if (key == "leaky_alpha") c.activation.alpha = parse_real(key, v);
  else if (key == "scale_scores") c.scale_scores = parse_bool(key, v);
  else if (key == "layer_norm") c.layer_norm = parse_bool(key, v);
  else if (key == "seed") c.seed = parse_size(key, v);
  else return false;
  return true;
}

ModelConfig config_from_manifest(const std::map<std::string, std::string>& manifest) {
  ModelConfig c;
  for (const auto& [k, v] : manifest) {
    if (!set_config_value(c, k, v)) throw ParseError("unknown model setting '" + k + "'");
  }
  if (c.activation.kind == attention::ActivationKind::kRelu) c.activation.alpha = 0.0;
  return c;
}

ModelParams init_params(const ModelConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  ModelParams p;
  p.enc_embed = init_embedding(cfg.seq_len, cfg, rng);
  p.dec_embed = init_embedding(cfg.decoder_len(), cfg, rng);
  for (std::size_t i = 0; i < cfg.enc_layers; ++i) {
    TeaLayerParams layer;
    if (cfg.tea_encoder) {
      layer.ranks = cfg.enc_ranks;
      layer.attention = init_attention(cfg.enc_ranks[1], cfg.enc_ranks[2], cfg, rng);
      layer.norm = init_norm(cfg.enc_ranks[1], cfg.enc_ranks[2]);
    } else {
      layer.attention = init_attention(cfg.model_len, cfg.model_dim, cfg, rng);
      layer.norm = init_norm(cfg.model_len, cfg.model_dim);
    }
    p.encoder.push_back(std::move(layer));
  }
  for (std::size_t i = 0; i < cfg.dec_layers; ++i) {
    DecoderLayerParams layer;
    if (cfg.tea_decoder) {
      layer.ranks = cfg.decoder_ranks();
      layer.self_attention = init_attention(layer.ranks[1], layer.ranks[2], cfg, rng);
      layer.self_norm = init_norm(layer.ranks[1], layer.ranks[2]);
    } else {
      layer.self_attention = init_attention(cfg.model_len, cfg.model_dim, cfg, rng);
      layer.self_norm = init_norm(cfg.model_len, cfg.model_dim);
    }
    layer.cross_attention = init_attention(cfg.model_len, cfg.model_dim, cfg, rng);
    layer.cross_norm = init_norm(cfg.model_len, cfg.model_dim);
    p.decoder.push_back(std::move(layer));
  }
  p.head.weight = uniform_fan_in({cfg.model_dim, cfg.features}, cfg.model_dim, rng);
  p.head.bias = Tensor::zeros({cfg.features});
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  for_each_param(z, [](const std::string&, Tensor& t) { t = Tensor::zeros_like(t); });
  return z;
}

std::size_t parameter_count(const ModelParams& p) {
  std::size_t n = 0;
  for_each_param(p, [&n](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

LayerOptions layer_options(const ModelConfig& cfg) {
  LayerOptions o;
  o.activation = cfg.activation;
  o.scale_scores = cfg.scale_scores;
  o.layer_norm = cfg.layer_norm;
  o.tucker = cfg.tucker;
  o.hooi = cfg.hooi;
  return o;
}

Tensor embed(const Tensor& raw, const EmbeddingParams& p) {
  if (raw.order() != 2 && raw.order() != 3) {
    throw ShapeError("embed expects L x D_raw or L x D1 x D2 input, got " + shape_string(raw.shape()));
  }
  const std::size_t len = raw.dim(0);
  const std::size_t features = raw.size() / len;
  const std::size_t lm = p.expansion.size();
  const std::size_t dm = p.value_proj.dim(1);
  if (p.value_proj.dim(0) != features) {
    throw ShapeError("embed: " + std::to_string(features) + " raw features, projection expects " +
                     std::to_string(p.value_proj.dim(0)));
  }
  if (p.positional.shape() != Shape{len, lm, dm}) {
    throw ShapeError("embed: positional table " + shape_string(p.positional.shape()) +
                     " does not match " + shape_string({len, lm, dm}));
  }
  const Matrix values = matmul(Matrix(len, features, raw.values()),
                               Matrix(features, dm, p.value_proj.values()));
  Tensor out = p.positional;
  for (std::size_t l = 0; l < len; ++l)
    for (std::size_t i = 0; i < lm; ++i)
      for (std::size_t j = 0; j < dm; ++j) out(l, i, j) += p.expansion[i] * values(l, j);
  return out;
}

Tensor layer_norm(const Tensor& x, const LayerNormParams& p, NormTrace* trace) {
  const std::size_t rows = x.dim(0);
  const std::size_t n = x.size() / rows;
  if (p.gain.size() != n || p.bias.size() != n) {
    throw ShapeError("layer_norm: parameters of size " + std::to_string(p.gain.size()) +
                     " for slices of size " + std::to_string(n));
  }
  Tensor out(x.shape());
  Tensor normalized(x.shape());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data().data() + r * n;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += in[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (in[i] - mean) * (in[i] - mean);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + kLayerNormEps);
    for (std::size_t i = 0; i < n; ++i) {
      const double xh = (in[i] - mean) * inv_std[r];
      normalized[r * n + i] = xh;
      out[r * n + i] = p.gain[i] * xh + p.bias[i];
    }
  }
  if (trace) {
    trace->normalized = std::move(normalized);
    trace->inv_std = std::move(inv_std);
  }
  return out;
}

std::vector<Matrix> fit_loadings(const Tensor& x, const decomp::Ranks& ranks,
                                 const LayerOptions& opts) {
  if (!all_finite(x.data())) throw DecompositionError("non-finite activations reached the Tucker fit");
  auto f = opts.tucker == TuckerAlgorithm::kHooi ? decomp::hooi(x, ranks, opts.hooi)
                                                  : decomp::hosvd(x, ranks);
  return std::move(f.loadings);
}

Tensor tea_encoder_layer(const Tensor& x, const TeaLayerParams& p, const LayerOptions& opts,
                         EncoderLayerTrace* trace, const std::vector<Matrix>* frozen) {
  if (x.order() != 3) throw ShapeError("encoder layer expects an order-3 input");
  EncoderLayerTrace local;
  EncoderLayerTrace& tr = trace ? *trace : local;
  tr.input = x;
  const bool tea = !p.ranks.empty();
  tr.loadings = tea ? loadings_for(x, p.ranks, opts, frozen) : std::vector<Matrix>{};
  tr.attn_input = tea ? decomp::tucker_project(x, tr.loadings) : x;
  AttentionOptions ao;
  ao.scale_scores = opts.scale_scores;
  ao.counter = opts.counter;
  Tensor attended = attention::mha_cross_forward_traced(tr.attn_input, tr.attn_input, p.attention,
                                                        opts.activation, ao, tr.attn);
  tr.pre_norm = add(tr.attn_input, attended);
  Tensor normed = maybe_norm(tr.pre_norm, p.norm, opts, &tr.norm);
  return tea ? decomp::tucker_expand(normed, tr.loadings) : normed;
}

Tensor tea_decoder_layer(const Tensor& x_dec, const Tensor& x_enc, const DecoderLayerParams& p,
                         const AttentionMask& mask, const LayerOptions& opts,
                         DecoderLayerTrace* trace, const std::vector<Matrix>* frozen) {
  if (x_dec.order() != 3 || x_enc.order() != 3) throw ShapeError("decoder layer expects order-3 inputs");
  DecoderLayerTrace local;
  DecoderLayerTrace& tr = trace ? *trace : local;
  tr.input = x_dec;
  const bool tea = !p.ranks.empty();
  tr.loadings = tea ? loadings_for(x_dec, p.ranks, opts, frozen) : std::vector<Matrix>{};
  tr.self_input = tea ? decomp::tucker_project(x_dec, tr.loadings) : x_dec;

  AttentionOptions self_opts;
  self_opts.mask = &mask;
  self_opts.scale_scores = opts.scale_scores;
  self_opts.counter = opts.counter;
  Tensor attended = attention::mha_cross_forward_traced(tr.self_input, tr.self_input,
                                                        p.self_attention, opts.activation,
                                                        self_opts, tr.self_attn);
  tr.self_pre_norm = add(tr.self_input, attended);
  Tensor normed = maybe_norm(tr.self_pre_norm, p.self_norm, opts, &tr.self_norm);
  tr.queries = tea ? decomp::tucker_expand(normed, tr.loadings) : std::move(normed);

  AttentionOptions cross_opts;
  cross_opts.scale_scores = opts.scale_scores;
  cross_opts.counter = opts.counter;
  Tensor crossed = attention::mha_cross_forward_traced(tr.queries, x_enc, p.cross_attention,
                                                       opts.activation, cross_opts, tr.cross_attn);
  tr.cross_pre_norm = add(tr.queries, crossed);
  return maybe_norm(tr.cross_pre_norm, p.cross_norm, opts, &tr.cross_norm);
}

FrozenFactors frozen_factors(const ModelTrace& trace) {
  FrozenFactors f;
  for (const auto& l : trace.encoder) f.encoder.push_back(l.loadings);
  for (const auto& l : trace.decoder) f.decoder.push_back(l.loadings);
  return f;
}

Tensor decoder_input(const data::ForecastWindow& w, std::size_t pred_len) {
  const std::size_t label = w.decoder_seed.dim(0);
  const std::size_t features = w.decoder_seed.size() / label;
  std::vector<double> rows(w.decoder_seed.values());
  rows.resize((label + pred_len) * features, 0.0);
  return Tensor({label + pred_len, features}, std::move(rows));
}

Tensor model_forward(const data::ForecastWindow& window, const ModelParams& params,
                     const ModelConfig& cfg, ModelTrace* trace, const FrozenFactors* frozen,
                     attention::FlopCounter* counter) {
  const auto& enc_in = window.encoder_input;
  if (enc_in.dim(0) != cfg.seq_len || enc_in.size() / enc_in.dim(0) != cfg.features) {
    throw ShapeError("encoder input " + shape_string(enc_in.shape()) + " does not match seq_len " +
                     std::to_string(cfg.seq_len) + " and " + std::to_string(cfg.features) +
                     " features");
  }
  if (window.decoder_seed.dim(0) != cfg.label_len ||
      window.decoder_seed.size() / cfg.label_len != cfg.features) {
    throw ShapeError("decoder seed " + shape_string(window.decoder_seed.shape()) +
                     " does not match label_len " + std::to_string(cfg.label_len));
  }
  if (params.encoder.size() != cfg.enc_layers || params.decoder.size() != cfg.dec_layers) {
    throw ShapeError("parameter layer counts do not match the configuration");
  }
  if (frozen && (frozen->encoder.size() != cfg.enc_layers || frozen->decoder.size() != cfg.dec_layers)) {
    throw ShapeError("frozen factors do not match the layer counts");
  }
  ModelTrace local;
  ModelTrace& tr = trace ? *trace : local;
  LayerOptions opts = layer_options(cfg);
  opts.counter = counter;

  tr.enc_embedded = embed(enc_in, params.enc_embed);
  Tensor x = tr.enc_embedded;
  tr.encoder.assign(cfg.enc_layers, {});
  for (std::size_t i = 0; i < cfg.enc_layers; ++i) {
    const auto* fz = frozen && !frozen->encoder[i].empty() ? &frozen->encoder[i] : nullptr;
    x = tea_encoder_layer(x, params.encoder[i], opts, &tr.encoder[i], fz);
  }
  tr.encoder_output = x;

  tr.dec_raw = decoder_input(window, cfg.pred_len);
  tr.dec_embedded = embed(tr.dec_raw, params.dec_embed);
  Tensor y = tr.dec_embedded;
  tr.decoder.assign(cfg.dec_layers, {});
  for (std::size_t i = 0; i < cfg.dec_layers; ++i) {
    const auto& layer = params.decoder[i];
    const std::size_t positions = layer.ranks.empty() ? cfg.decoder_len() : layer.ranks[0];
    const AttentionMask mask = AttentionMask::causal(positions);
    const auto* fz = frozen && !frozen->decoder[i].empty() ? &frozen->decoder[i] : nullptr;
    y = tea_decoder_layer(y, x, layer, mask, opts, &tr.decoder[i], fz);
  }

  const std::size_t dm = cfg.model_dim, lm = cfg.model_len;
  const std::size_t first = cfg.decoder_len() - cfg.pred_len;
  tr.head_input = Tensor({cfg.pred_len, dm});
  for (std::size_t t = 0; t < cfg.pred_len; ++t)
    for (std::size_t i = 0; i < lm; ++i)
      for (std::size_t j = 0; j < dm; ++j)
        tr.head_input(t, j) += y(first + t, i, j) / static_cast<double>(lm);
  const Matrix out = matmul(Matrix(cfg.pred_len, dm, tr.head_input.values()),
                            Matrix(dm, cfg.features, params.head.weight.values()));
  tr.prediction = Tensor({cfg.pred_len, cfg.features},
                         std::vector<double>(out.data().begin(), out.data().end()));
  for (std::size_t t = 0; t < cfg.pred_len; ++t)
    for (std::size_t d = 0; d < cfg.features; ++d) tr.prediction(t, d) += params.head.bias[d];
  return tr.prediction;
}

std::uint64_t encoder_attention_flops(const ModelConfig& cfg, bool tea) {
  if (tea) {
    const auto& r = cfg.enc_ranks;
    return attention::attention_flops(r[0], r[0], r[1] * r[2], cfg.attn_dim, cfg.heads);
  }
  return attention::attention_flops(cfg.seq_len, cfg.seq_len, cfg.model_len * cfg.model_dim,
                                    cfg.attn_dim, cfg.heads);
}

std::uint64_t tucker_projection_flops(const Shape& shape, const decomp::Ranks& ranks) {
  std::uint64_t total = 0;
  Shape cur = shape;
  for (std::size_t m = 0; m < shape.size(); ++m) {
    // Contract mode m from D_m down to R_m.
    total += static_cast<std::uint64_t>(shape_size(cur)) * ranks[m];
    cur[m] = ranks[m];
  }
  for (std::size_t m = 0; m < shape.size(); ++m) {
    // Expand mode m from R_m back to D_m.
    cur[m] = shape[m];
    total += static_cast<std::uint64_t>(shape_size(cur)) * ranks[m];
  }
  return total;
}

io::Container to_checkpoint(const ModelParams& params, const ModelConfig& cfg,
                            const std::map<std::string, std::string>& extra) {
  io::Container c;
  c.kind = io::ContainerKind::kModel;
  for (const auto& [k, v] : to_manifest(cfg)) c.manifest["config." + k] = v;
  for (const auto& [k, v] : extra) c.manifest[k] = v;
  c.dims = {cfg.seq_len, cfg.model_len, cfg.model_dim};
  if (cfg.tea_encoder) c.ranks = cfg.enc_ranks;
  for_each_param(params, [&c](const std::string& name, const Tensor& t) {
    c.blocks.push_back({name, t});
  });
  return c;
}

Checkpoint from_checkpoint(const io::Container& c) {
  if (c.kind != io::ContainerKind::kModel) {
    throw ParseError(std::string("expected a model checkpoint, found ") + io::kind_name(c.kind));
  }
  Checkpoint ck;
  std::map<std::string, std::string> cfg_entries;
  for (const auto& [k, v] : c.manifest) {
    if (k.rfind("config.", 0) == 0) cfg_entries[k.substr(7)] = v;
    else ck.manifest[k] = v;
  }
  ck.config = config_from_manifest(cfg_entries);
  ck.params = init_params(ck.config);
  for_each_param(ck.params, [&c](const std::string& name, Tensor& t) {
    const Tensor& stored = c.block(name);
    if (stored.shape() != t.shape()) {
      throw ParseError("checkpoint block " + name + " has shape " + shape_string(stored.shape()) +
                       ", expected " + shape_string(t.shape()));
    }
    t = stored;
  });
  return ck;
}

}  // namespace tea::model
