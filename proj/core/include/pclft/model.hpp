// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <span>
#include <variant>
#include <vector>

#include "pclft/encoder.hpp"
#include "pclft/heads.hpp"

namespace pclft {

enum class Subtask { binary = 1, multilabel = 2 };

/// Encoder, pooler and one task head. Heads consume the pooled [CLS] vector.
class Classifier {
 public:
  Classifier(Subtask subtask, const EncoderConfig& config, std::mt19937_64& rng);

  Subtask subtask() const noexcept { return subtask_; }
  const EncoderConfig& config() const noexcept { return encoder_.config; }
  const EncoderParams& encoder() const noexcept { return encoder_; }
  /// Number of probabilities per example: 2 (binary) or 7 (multi-label).
  int outputs() const;

  /// Probabilities [batch x outputs]. Sequences are padded to the batch
  /// maximum before encoding.
  Tensor forward(const std::vector<std::vector<TokenId>>& batch, bool train,
                 std::mt19937_64& rng) const;

  /// Training loss for a batch of probabilities. Binary targets read
  /// golds[i][0]; multi-label targets read the whole vector.
  Tensor loss(const Tensor& probs, const std::vector<std::vector<int>>& golds) const;

  /// Encoder parameters, then pooler, then head.
  ParameterList parameters() const;

  /// Overwrites every parameter value from a snapshot taken with parameters().
  void load_values(const std::vector<std::vector<double>>& values);
  std::vector<std::vector<double>> snapshot_values() const;

 private:
  Subtask subtask_;
  EncoderParams encoder_;
  std::variant<BinaryHeadParams, MultiLabelHeadParams> head_;
};

}  // namespace pclft
