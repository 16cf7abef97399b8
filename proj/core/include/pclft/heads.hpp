// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

// Classification heads and their losses. Heads read the pooled [CLS] vector.

#pragma once

#include <random>
#include <span>
#include <vector>

#include "pclft/labels.hpp"
#include "pclft/parameter.hpp"
#include "pclft/tensor.hpp"

namespace pclft {

/// A category is predicted when its probability exceeds this threshold.
inline constexpr double kMultiLabelThreshold = 0.5;

/// Softmax head over {negative, positive}. weight is [2 x d], bias [2].
struct BinaryHeadParams {
  Tensor weight;
  Tensor bias;

  static BinaryHeadParams initialize(int d_model, std::mt19937_64& rng);
};

/// Independent sigmoid per category. weight is [M x d], bias [M].
struct MultiLabelHeadParams {
  Tensor weight;
  Tensor bias;

  static MultiLabelHeadParams initialize(int d_model, std::mt19937_64& rng,
                                         int categories = kNumCategories);
  int categories() const { return static_cast<int>(bias.numel()); }
};

ParameterList named_parameters(const BinaryHeadParams& head);
ParameterList named_parameters(const MultiLabelHeadParams& head);

/// Class probabilities, [2] for a rank-1 input or [batch x 2]. Column 1 is
/// the positive class.
Tensor binary_forward(const Tensor& h, const BinaryHeadParams& params);

/// Mean over the batch of the cross-entropy of the positive-class
/// probability against gold labels in {0, 1}.
Tensor binary_loss(const Tensor& probs, std::span<const int> golds);

/// Per-category probabilities, [M] or [batch x M].
Tensor multilabel_forward(const Tensor& h, const MultiLabelHeadParams& params);

/// Mean over the batch of the per-sample sum of binary cross-entropies.
Tensor bce_loss(const Tensor& probs, const std::vector<std::vector<int>>& golds);

/// Hard decisions.
int binary_decision(std::span<const double> probs2);
std::vector<int> multilabel_decision(std::span<const double> probs);

}  // namespace pclft
