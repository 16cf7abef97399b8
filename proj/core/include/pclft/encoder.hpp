// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

// A small BERT-style post-LN transformer encoder. encode() returns the final
// layer's hidden state at position 0, the [CLS] slot.

#pragma once

#include <random>
#include <span>
#include <vector>

#include "pclft/parameter.hpp"
#include "pclft/tensor.hpp"

namespace pclft {

struct EncoderConfig {
  int vocab_size = 0;
  int d_model = 64;
  int n_heads = 4;
  int n_layers = 6;
  int d_ff = 256;
  int max_len = 250;
  double dropout_rate = 0.4;
  /// Positions holding this id are masked out of attention.
  TokenId pad_id = 0;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
  int head_dim() const { return d_model / n_heads; }

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct EncoderLayerParams {
  // Projection weights are stored [in x out].
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor attn_ln_gamma, attn_ln_beta;
  Tensor ff_in_w, ff_in_b, ff_out_w, ff_out_b;
  Tensor ff_ln_gamma, ff_ln_beta;
};

struct EncoderParams {
  EncoderConfig config;
  Tensor token_embedding;     // [vocab x d]
  Tensor position_embedding;  // [max_len x d]
  Tensor embedding_ln_gamma, embedding_ln_beta;
  std::vector<EncoderLayerParams> layers;
  Tensor pooler_w, pooler_b;  // [d x d], [d]

  /// Weights ~ normal(0, 0.02), biases zero, layer-norm gains one.
  static EncoderParams initialize(const EncoderConfig& config, std::mt19937_64& rng);

  ParameterList named_parameters() const;
};

/// Attention probabilities captured during encode(): probs[layer][head].
/// The last layer only computes the [CLS] query row.
struct AttentionTrace {
  std::vector<std::vector<Tensor>> probs;
};

/// [CLS] representation of `tokens`, shape [d_model]. Tokens must already be
/// wrapped and truncated; trailing pad ids are allowed and masked.
Tensor encode(const EncoderParams& params, std::span<const TokenId> tokens, bool train,
              std::mt19937_64& rng, AttentionTrace* trace = nullptr);

/// tanh(h * W + b). Accepts [d] or [batch x d].
Tensor pooler(const Tensor& h, const EncoderParams& params);

}  // namespace pclft
