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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tea/attention.hpp"
#include "tea/container.hpp"
#include "tea/data.hpp"
#include "tea/decomp.hpp"
#include "tea/tensor.hpp"

namespace tea::model {

enum class TuckerAlgorithm { kHosvd, kHooi };

/// Shapes and switches of the encoder-decoder forecaster.
///
/// Embedded activations have shape L × L_mdl × D_mdl, where L is seq_len on
/// the encoder side and label_len + pred_len on the decoder side.
struct ModelConfig {
  std::size_t seq_len = 24;
  std::size_t label_len = 12;
  std::size_t pred_len = 24;
  std::size_t features = 7;   // D_raw; product of the raw observation shape
  std::size_t model_len = 4;  // L_mdl, hidden expansion of each time step
  std::size_t model_dim = 16; // D_mdl
  std::size_t attn_dim = 8;
  std::size_t heads = 2;
  std::size_t enc_layers = 2;
  std::size_t dec_layers = 1;
  decomp::Ranks enc_ranks{6, 2, 8};
  /// Ranks for the TEA decoder ablation. Empty means enc_ranks with R_1
  /// capped at the decoder length.
  decomp::Ranks dec_ranks;
  TuckerAlgorithm tucker = TuckerAlgorithm::kHosvd;
  decomp::HooiOptions hooi;
  bool tea_encoder = true;   // false gives the plain-attention control
  bool tea_decoder = false;  // decoder-side ablation
  attention::Activation activation = attention::Activation::relu();
  bool scale_scores = false;
  bool layer_norm = true;
  std::uint64_t seed = 42;

  std::size_t decoder_len() const { return label_len + pred_len; }
  decomp::Ranks decoder_ranks() const;
  /// Throws ConfigError (or InvalidRank for rank bounds).
  void validate() const;
};

std::map<std::string, std::string> to_manifest(const ModelConfig& cfg);
ModelConfig config_from_manifest(const std::map<std::string, std::string>& manifest);

/// Sets one ModelConfig field from its manifest key. Returns false for an
/// unknown key; throws ConfigError for a malformed value.
bool set_config_value(ModelConfig& cfg, const std::string& key, const std::string& value);

/// value_proj: D_raw × D_mdl, expansion: {L_mdl}, positional: L × L_mdl × D_mdl.
struct EmbeddingParams {
  Tensor value_proj;
  Tensor expansion;
  Tensor positional;
};

/// Gain and bias over the trailing two modes.
struct LayerNormParams {
  Tensor gain;
  Tensor bias;
};

/// One encoder layer. Non-empty `ranks` selects the TEA path: attention runs
/// on the R_1 × R_2 × R_3 Tucker core, and the attention weights are shaped
/// for R_2 × R_3 features. Empty `ranks` is plain full-resolution attention.
struct TeaLayerParams {
  attention::AttentionParams attention;
  LayerNormParams norm;
  decomp::Ranks ranks;
};

/// Masked self-attention then cross-attention over the encoder output.
/// Non-empty `ranks` moves the self-attention stage onto the Tucker core.
struct DecoderLayerParams {
  attention::AttentionParams self_attention;
  LayerNormParams self_norm;
  attention::AttentionParams cross_attention;
  LayerNormParams cross_norm;
  decomp::Ranks ranks;
};

/// Mean over L_mdl, then D_mdl → D_raw.
struct OutputHead {
  Tensor weight;  // D_mdl × D_raw
  Tensor bias;    // {D_raw}
};

struct ModelParams {
  EmbeddingParams enc_embed;
  EmbeddingParams dec_embed;
  std::vector<TeaLayerParams> encoder;
  std::vector<DecoderLayerParams> decoder;
  OutputHead head;
};

/// Seeded uniform(±1/√fan_in) weights, sinusoidal positional tables, unit
/// layer-norm gains, zero biases, equal head weights 1/H.
ModelParams init_params(const ModelConfig& cfg);

/// Visits every trainable tensor with a stable dotted name. Tucker loadings
/// are not parameters and never appear here.
template <typename Params, typename Fn>
void for_each_param(Params& p, Fn&& fn);

ModelParams zeros_like(const ModelParams& p);
std::size_t parameter_count(const ModelParams& p);

struct LayerOptions {
  attention::Activation activation = attention::Activation::relu();
  bool scale_scores = false;
  bool layer_norm = true;
  TuckerAlgorithm tucker = TuckerAlgorithm::kHosvd;
  decomp::HooiOptions hooi;
  attention::FlopCounter* counter = nullptr;
};

LayerOptions layer_options(const ModelConfig& cfg);

inline constexpr double kLayerNormEps = 1e-5;

/// x[l, i, j] = expansion[i] · (raw[l, :] · value_proj)[j] + positional[l, i, j].
/// Raw input is L × D_raw or L × D_1 × D_2 (flattened to D_1·D_2 features).
Tensor embed(const Tensor& raw, const EmbeddingParams& p);

struct NormTrace {
  Tensor normalized;            // (x − μ)/s
  std::vector<double> inv_std;  // 1/s per leading index
};

/// Normalises each leading-mode slice over the trailing modes. A zero slice
/// maps to the bias (the ε term keeps 0/0 away).
Tensor layer_norm(const Tensor& x, const LayerNormParams& p, NormTrace* trace = nullptr);

struct EncoderLayerTrace {
  Tensor input;
  std::vector<Matrix> loadings;  // empty on the plain path
  Tensor attn_input;             // Tucker core, or the input itself
  attention::MhaTrace attn;
  Tensor pre_norm;
  NormTrace norm;
};

struct DecoderLayerTrace {
  Tensor input;
  std::vector<Matrix> loadings;
  Tensor self_input;  // core (TEA) or input
  attention::MhaTrace self_attn;
  Tensor self_pre_norm;
  NormTrace self_norm;
  Tensor queries;  // self-attention stage output at full resolution
  attention::MhaTrace cross_attn;
  Tensor cross_pre_norm;
  NormTrace cross_norm;
};

/// One encoder layer. On the TEA path:
///   (C, U_1..U_3) = tucker(x);  Ĉ = LayerNorm(C + MSA(C));  out = Ĉ ×_1 U_1 ×_2 U_2 ×_3 U_3.
/// `frozen` replaces the fitted loadings (used to differentiate with the
/// loadings held constant).
Tensor tea_encoder_layer(const Tensor& x, const TeaLayerParams& p, const LayerOptions& opts,
                         EncoderLayerTrace* trace = nullptr,
                         const std::vector<Matrix>* frozen = nullptr);

/// One decoder layer. `mask` applies to the self-attention stage and must be
/// sized for its positions (core R_1 on the TEA path, decoder length
/// otherwise). Cross-attention is unmasked.
Tensor tea_decoder_layer(const Tensor& x_dec, const Tensor& x_enc, const DecoderLayerParams& p,
                         const attention::AttentionMask& mask, const LayerOptions& opts,
                         DecoderLayerTrace* trace = nullptr,
                         const std::vector<Matrix>* frozen = nullptr);

/// Fits Tucker loadings with the configured algorithm.
std::vector<Matrix> fit_loadings(const Tensor& x, const decomp::Ranks& ranks,
                                 const LayerOptions& opts);

struct ModelTrace {
  Tensor enc_embedded;
  std::vector<EncoderLayerTrace> encoder;
  Tensor encoder_output;
  Tensor dec_raw;
  Tensor dec_embedded;
  std::vector<DecoderLayerTrace> decoder;
  Tensor head_input;  // pred_len × D_mdl, mean over L_mdl
  Tensor prediction;
};

/// Loadings per layer, captured from one forward pass.
struct FrozenFactors {
  std::vector<std::vector<Matrix>> encoder;
  std::vector<std::vector<Matrix>> decoder;
};

FrozenFactors frozen_factors(const ModelTrace& trace);

/// Decoder input: the seed rows followed by pred_len zero rows, as
/// (label_len + pred_len) × D_raw.
Tensor decoder_input(const data::ForecastWindow& w, std::size_t pred_len);

/// embed → encoder stack → decoder stack → output head. Returns
/// pred_len × D_raw.
Tensor model_forward(const data::ForecastWindow& window, const ModelParams& params,
                     const ModelConfig& cfg, ModelTrace* trace = nullptr,
                     const FrozenFactors* frozen = nullptr,
                     attention::FlopCounter* counter = nullptr);

/// Multiply-adds of the attention inside one encoder layer: on the Tucker
/// core for TEA layers, on the full embedded tensor otherwise.
std::uint64_t encoder_attention_flops(const ModelConfig& cfg, bool tea);

/// Multiply-adds of projecting onto and expanding from the core with fixed
/// loadings (excludes the SVDs that fit them).
std::uint64_t tucker_projection_flops(const Shape& shape, const decomp::Ranks& ranks);

io::Container to_checkpoint(const ModelParams& params, const ModelConfig& cfg,
                            const std::map<std::string, std::string>& extra = {});

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
  std::map<std::string, std::string> manifest;
};

Checkpoint from_checkpoint(const io::Container& c);

// ---------------------------------------------------------------------------

namespace detail {

template <typename Params, typename Fn>
void visit_attention(Params& a, const std::string& prefix, Fn& fn) {
  for (std::size_t h = 0; h < a.heads.size(); ++h) {
    const std::string p = prefix + ".head" + std::to_string(h);
    fn(p + ".w_q", a.heads[h].w_q);
    fn(p + ".w_k", a.heads[h].w_k);
    fn(p + ".w_v", a.heads[h].w_v);
    fn(p + ".w_o", a.heads[h].w_o);
  }
  fn(prefix + ".w_h", a.head_weights);
}

template <typename Params, typename Fn>
void visit_norm(Params& n, const std::string& prefix, Fn& fn) {
  fn(prefix + ".gain", n.gain);
  fn(prefix + ".bias", n.bias);
}

template <typename Params, typename Fn>
void visit_embedding(Params& e, const std::string& prefix, Fn& fn) {
  fn(prefix + ".value_proj", e.value_proj);
  fn(prefix + ".expansion", e.expansion);
  fn(prefix + ".positional", e.positional);
}

}  // namespace detail

template <typename Params, typename Fn>
void for_each_param(Params& p, Fn&& fn) {
  detail::visit_embedding(p.enc_embed, "enc_embed", fn);
  detail::visit_embedding(p.dec_embed, "dec_embed", fn);
  for (std::size_t i = 0; i < p.encoder.size(); ++i) {
    const std::string pre = "encoder" + std::to_string(i);
    detail::visit_attention(p.encoder[i].attention, pre + ".attn", fn);
    detail::visit_norm(p.encoder[i].norm, pre + ".norm", fn);
  }
  for (std::size_t i = 0; i < p.decoder.size(); ++i) {
    const std::string pre = "decoder" + std::to_string(i);
    detail::visit_attention(p.decoder[i].self_attention, pre + ".self_attn", fn);
    detail::visit_norm(p.decoder[i].self_norm, pre + ".self_norm", fn);
    detail::visit_attention(p.decoder[i].cross_attention, pre + ".cross_attn", fn);
    detail::visit_norm(p.decoder[i].cross_norm, pre + ".cross_norm", fn);
  }
  fn(std::string("head.weight"), p.head.weight);
  fn(std::string("head.bias"), p.head.bias);
}

}  // namespace tea::model
