// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "pclft/tensor.hpp"

namespace pclft {

/// Where a trainable tensor lives in the classifier.
enum class ParamSite { embeddings, layer, pooler, head };

struct NamedParameter {
  std::string name;
  Tensor tensor;
  ParamSite site = ParamSite::layer;
  /// Encoder layer index for ParamSite::layer, -1 otherwise.
  int layer = -1;
  /// False for biases and layer-norm parameters.
  bool decay = true;
};

using ParameterList = std::vector<NamedParameter>;

}  // namespace pclft
