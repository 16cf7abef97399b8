// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#include "pclft/model.hpp"

#include <algorithm>

#include "pclft/data.hpp"
#include "pclft/error.hpp"

namespace pclft {

Classifier::Classifier(Subtask subtask, const EncoderConfig& config, std::mt19937_64& rng)
    : subtask_(subtask), encoder_(EncoderParams::initialize(config, rng)) {
  if (subtask == Subtask::binary) {
    head_ = BinaryHeadParams::initialize(config.d_model, rng);
  } else {
    head_ = MultiLabelHeadParams::initialize(config.d_model, rng);
  }
}

int Classifier::outputs() const { return subtask_ == Subtask::binary ? 2 : kNumCategories; }

Tensor Classifier::forward(const std::vector<std::vector<TokenId>>& batch, bool train,
                           std::mt19937_64& rng) const {
  if (batch.empty()) throw ContractError("Classifier::forward: empty batch");
  const auto padded = pad_batch(batch);
  std::vector<Tensor> cls;
  cls.reserve(padded.size());
  for (const auto& seq : padded) cls.push_back(encode(encoder_, seq, train, rng));
  Tensor pooled = pooler(stack_rows(cls), encoder_);
  pooled = dropout(pooled, encoder_.config.dropout_rate, train, rng);
  if (const auto* bin = std::get_if<BinaryHeadParams>(&head_)) return binary_forward(pooled, *bin);
  return multilabel_forward(pooled, std::get<MultiLabelHeadParams>(head_));
}

Tensor Classifier::loss(const Tensor& probs, const std::vector<std::vector<int>>& golds) const {
  if (subtask_ == Subtask::binary) {
    std::vector<int> flat;
    flat.reserve(golds.size());
    for (const auto& g : golds) flat.push_back(g.at(0));
    return binary_loss(probs, flat);
  }
  return bce_loss(probs, golds);
}

ParameterList Classifier::parameters() const {
  ParameterList out = encoder_.named_parameters();
  ParameterList head = std::visit([](const auto& h) { return named_parameters(h); }, head_);
  out.insert(out.end(), head.begin(), head.end());
  return out;
}

void Classifier::load_values(const std::vector<std::vector<double>>& values) {
  ParameterList params = parameters();
  if (values.size() != params.size()) {
    throw ContractError("Classifier::load_values: parameter count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].tensor.mutable_values();
    if (values[i].size() != dst.size()) {
      throw ShapeError("Classifier::load_values: size mismatch for " + params[i].name);
    }
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

std::vector<std::vector<double>> Classifier::snapshot_values() const {
  std::vector<std::vector<double>> out;
  for (const NamedParameter& p : parameters()) {
    out.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
  }
  return out;
}

}  // namespace pclft
