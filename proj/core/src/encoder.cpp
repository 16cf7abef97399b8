// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#include "pclft/encoder.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "pclft/error.hpp"

namespace pclft {

namespace {

constexpr double kInitStd = 0.02;

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

Tensor weight(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  return Tensor::randn({in, out}, kInitStd, rng, true);
}

Tensor zeros(std::size_t n) { return Tensor::zeros({n}, true); }
Tensor ones(std::size_t n) { return Tensor::full({n}, 1.0, true); }

// Self-attention block. `queries` may be a prefix of the rows of `x`.
Tensor attention(const EncoderLayerParams& p, const EncoderConfig& cfg, const Tensor& x,
                 const Tensor& queries, std::span<const std::uint8_t> valid,
                 std::vector<Tensor>* trace) {
  const Tensor q = linear(queries, p.wq, p.bq);
  const Tensor k = linear(x, p.wk, p.bk);
  const Tensor v = linear(x, p.wv, p.bv);
  const std::size_t dh = sz(cfg.head_dim());
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> heads;
  heads.reserve(sz(cfg.n_heads));
  for (std::size_t h = 0; h < sz(cfg.n_heads); ++h) {
    const std::size_t b = h * dh, e = b + dh;
    Tensor scores = scale(matmul_nt(slice_cols(q, b, e), slice_cols(k, b, e)), inv_sqrt);
    Tensor probs = softmax(scores, valid);
    if (trace) trace->push_back(probs);
    heads.push_back(matmul(probs, slice_cols(v, b, e)));
  }
  return linear(concat_cols(heads), p.wo, p.bo);
}

}  // namespace

void EncoderConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("encoder config: " + msg); };
  if (vocab_size <= 0) fail("vocab_size must be positive");
  if (d_model <= 0 || n_heads <= 0 || n_layers <= 0 || d_ff <= 0) {
    fail("d_model, n_heads, n_layers and d_ff must be positive");
  }
  if (d_model % n_heads != 0) fail("d_model must be divisible by n_heads");
  if (max_len < 3) fail("max_len must be at least 3");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must lie in [0, 1)");
  if (pad_id < 0 || pad_id >= vocab_size) fail("pad_id outside the vocabulary");
}

EncoderParams EncoderParams::initialize(const EncoderConfig& config, std::mt19937_64& rng) {
  config.validate();
  const std::size_t d = sz(config.d_model), ff = sz(config.d_ff);
  EncoderParams p;
  p.config = config;
  p.token_embedding = weight(sz(config.vocab_size), d, rng);
  p.position_embedding = weight(sz(config.max_len), d, rng);
  p.embedding_ln_gamma = ones(d);
  p.embedding_ln_beta = zeros(d);
  for (int l = 0; l < config.n_layers; ++l) {
    EncoderLayerParams layer;
    layer.wq = weight(d, d, rng);
    layer.bq = zeros(d);
    layer.wk = weight(d, d, rng);
    layer.bk = zeros(d);
    layer.wv = weight(d, d, rng);
    layer.bv = zeros(d);
    layer.wo = weight(d, d, rng);
    layer.bo = zeros(d);
    layer.attn_ln_gamma = ones(d);
    layer.attn_ln_beta = zeros(d);
    layer.ff_in_w = weight(d, ff, rng);
    layer.ff_in_b = zeros(ff);
    layer.ff_out_w = weight(ff, d, rng);
    layer.ff_out_b = zeros(d);
    layer.ff_ln_gamma = ones(d);
    layer.ff_ln_beta = zeros(d);
    p.layers.push_back(std::move(layer));
  }
  p.pooler_w = weight(d, d, rng);
  p.pooler_b = zeros(d);
  return p;
}

ParameterList EncoderParams::named_parameters() const {
  ParameterList out;
  auto add = [&out](std::string name, const Tensor& t, ParamSite site, int layer, bool decay) {
    out.push_back({std::move(name), t, site, layer, decay});
  };
  add("embeddings.token", token_embedding, ParamSite::embeddings, -1, true);
  add("embeddings.position", position_embedding, ParamSite::embeddings, -1, true);
  add("embeddings.ln.gamma", embedding_ln_gamma, ParamSite::embeddings, -1, false);
  add("embeddings.ln.beta", embedding_ln_beta, ParamSite::embeddings, -1, false);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const EncoderLayerParams& p = layers[l];
    const std::string prefix = "layers." + std::to_string(l) + ".";
    const int li = static_cast<int>(l);
    add(prefix + "attn.wq", p.wq, ParamSite::layer, li, true);
    add(prefix + "attn.bq", p.bq, ParamSite::layer, li, false);
    add(prefix + "attn.wk", p.wk, ParamSite::layer, li, true);
    add(prefix + "attn.bk", p.bk, ParamSite::layer, li, false);
    add(prefix + "attn.wv", p.wv, ParamSite::layer, li, true);
    add(prefix + "attn.bv", p.bv, ParamSite::layer, li, false);
    add(prefix + "attn.wo", p.wo, ParamSite::layer, li, true);
    add(prefix + "attn.bo", p.bo, ParamSite::layer, li, false);
    add(prefix + "attn.ln.gamma", p.attn_ln_gamma, ParamSite::layer, li, false);
    add(prefix + "attn.ln.beta", p.attn_ln_beta, ParamSite::layer, li, false);
    add(prefix + "ff.in.w", p.ff_in_w, ParamSite::layer, li, true);
    add(prefix + "ff.in.b", p.ff_in_b, ParamSite::layer, li, false);
    add(prefix + "ff.out.w", p.ff_out_w, ParamSite::layer, li, true);
    add(prefix + "ff.out.b", p.ff_out_b, ParamSite::layer, li, false);
    add(prefix + "ff.ln.gamma", p.ff_ln_gamma, ParamSite::layer, li, false);
    add(prefix + "ff.ln.beta", p.ff_ln_beta, ParamSite::layer, li, false);
  }
  add("pooler.w", pooler_w, ParamSite::pooler, -1, true);
  add("pooler.b", pooler_b, ParamSite::pooler, -1, false);
  return out;
}

Tensor encode(const EncoderParams& params, std::span<const TokenId> tokens, bool train,
              std::mt19937_64& rng, AttentionTrace* trace) {
  const EncoderConfig& cfg = params.config;
  if (tokens.empty()) throw ContractError("encode: empty token sequence");
  if (tokens.size() > sz(cfg.max_len)) {
    throw ContractError("encode: sequence of " + std::to_string(tokens.size()) +
                        " tokens exceeds max_len " + std::to_string(cfg.max_len));
  }
  const std::size_t len = tokens.size();
  std::vector<std::uint8_t> valid(len);
  for (std::size_t i = 0; i < len; ++i) valid[i] = tokens[i] != cfg.pad_id;
  if (!valid[0]) throw ContractError("encode: sequence starts with padding");

  std::vector<TokenId> positions(len);
  std::iota(positions.begin(), positions.end(), 0);
  Tensor x = add(embedding(params.token_embedding, tokens),
                 embedding(params.position_embedding, positions));
  x = layer_norm(x, params.embedding_ln_gamma, params.embedding_ln_beta);
  x = dropout(x, cfg.dropout_rate, train, rng);

  if (trace) trace->probs.assign(params.layers.size(), {});
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const EncoderLayerParams& p = params.layers[l];
    // Only the [CLS] row of the last layer is consumed, and rows do not
    // interact outside attention, so the last layer runs a single query.
    const bool last = l + 1 == params.layers.size();
    const Tensor queries = last ? take_rows(x, 1) : x;
    Tensor a = attention(p, cfg, x, queries, valid, trace ? &trace->probs[l] : nullptr);
    a = dropout(a, cfg.dropout_rate, train, rng);
    Tensor h = layer_norm(add(queries, a), p.attn_ln_gamma, p.attn_ln_beta);
    Tensor f = linear(gelu(linear(h, p.ff_in_w, p.ff_in_b)), p.ff_out_w, p.ff_out_b);
    f = dropout(f, cfg.dropout_rate, train, rng);
    x = layer_norm(add(h, f), p.ff_ln_gamma, p.ff_ln_beta);
  }
  return row(x, 0);
}

Tensor pooler(const Tensor& h, const EncoderParams& params) {
  return tanh(linear(h, params.pooler_w, params.pooler_b));
}

}  // namespace pclft
