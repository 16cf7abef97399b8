// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#include "pclft/heads.hpp"

#include <string>

#include "pclft/error.hpp"

namespace pclft {

namespace {

Tensor affine(const Tensor& h, const Tensor& weight, const Tensor& bias) {
  if (h.rank() == 1) {
    const Tensor y = add_bias(matmul_nt(reshape(h, {1, h.numel()}), weight), bias);
    return reshape(y, {y.numel()});
  }
  return add_bias(matmul_nt(h, weight), bias);
}

}  // namespace

BinaryHeadParams BinaryHeadParams::initialize(int d_model, std::mt19937_64& rng) {
  const auto d = static_cast<std::size_t>(d_model);
  return {Tensor::randn({2, d}, 0.02, rng, true), Tensor::zeros({2}, true)};
}

MultiLabelHeadParams MultiLabelHeadParams::initialize(int d_model, std::mt19937_64& rng,
                                                      int categories) {
  const auto d = static_cast<std::size_t>(d_model);
  const auto m = static_cast<std::size_t>(categories);
  return {Tensor::randn({m, d}, 0.02, rng, true), Tensor::zeros({m}, true)};
}

ParameterList named_parameters(const BinaryHeadParams& head) {
  return {{"head.w", head.weight, ParamSite::head, -1, true},
          {"head.b", head.bias, ParamSite::head, -1, false}};
}

ParameterList named_parameters(const MultiLabelHeadParams& head) {
  return {{"head.w", head.weight, ParamSite::head, -1, true},
          {"head.b", head.bias, ParamSite::head, -1, false}};
}

Tensor binary_forward(const Tensor& h, const BinaryHeadParams& params) {
  return softmax(affine(h, params.weight, params.bias));
}

Tensor binary_loss(const Tensor& probs, std::span<const int> golds) {
  if (golds.empty()) throw ContractError("binary_loss: empty batch");
  if (probs.rank() != 2 || probs.shape()[1] != 2 || probs.shape()[0] != golds.size()) {
    throw ShapeError("binary_loss: probabilities " + shape_string(probs.shape()) + " for " +
                     std::to_string(golds.size()) + " gold labels");
  }
  std::vector<double> targets(golds.size());
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (golds[i] != 0 && golds[i] != 1) {
      throw ContractError("binary_loss: gold label must be 0 or 1, got " +
                          std::to_string(golds[i]));
    }
    targets[i] = golds[i];
  }
  return binary_cross_entropy(slice_cols(probs, 1, 2), targets);
}

Tensor multilabel_forward(const Tensor& h, const MultiLabelHeadParams& params) {
  return sigmoid(affine(h, params.weight, params.bias));
}

Tensor bce_loss(const Tensor& probs, const std::vector<std::vector<int>>& golds) {
  if (golds.empty()) throw ContractError("bce_loss: empty batch");
  if (probs.rank() != 2 || probs.shape()[0] != golds.size()) {
    throw ShapeError("bce_loss: probabilities " + shape_string(probs.shape()) + " for " +
                     std::to_string(golds.size()) + " gold vectors");
  }
  const std::size_t m = probs.shape()[1];
  std::vector<double> targets;
  targets.reserve(probs.numel());
  for (const auto& g : golds) {
    if (g.size() != m) {
      throw ContractError("bce_loss: gold vector of length " + std::to_string(g.size()) +
                          ", expected " + std::to_string(m));
    }
    for (int bit : g) {
      if (bit != 0 && bit != 1) throw ContractError("bce_loss: gold bits must be 0 or 1");
      targets.push_back(bit);
    }
  }
  return binary_cross_entropy(probs, targets);
}

int binary_decision(std::span<const double> probs2) {
  if (probs2.size() != 2) throw ContractError("binary_decision: expected two probabilities");
  return probs2[1] > probs2[0] ? 1 : 0;
}

std::vector<int> multilabel_decision(std::span<const double> probs) {
  std::vector<int> bits(probs.size());
  for (std::size_t c = 0; c < probs.size(); ++c) bits[c] = probs[c] > kMultiLabelThreshold;
  return bits;
}

}  // namespace pclft
