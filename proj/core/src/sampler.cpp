// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#include "pclft/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "pclft/error.hpp"

namespace pclft {

ClassRatios class_ratios(std::span<const int> binary_labels) {
  const auto positives = static_cast<std::size_t>(
      std::count_if(binary_labels.begin(), binary_labels.end(), [](int y) { return y != 0; }));
  const std::size_t total = binary_labels.size();
  if (positives == 0 || positives == total) {
    throw DomainError("class ratios need both classes present (" + std::to_string(positives) +
                      " positives of " + std::to_string(total) + ")");
  }
  ClassRatios r;
  r.positive = static_cast<double>(positives) / static_cast<double>(total);
  r.negative = 1.0 - r.positive;
  return r;
}

SampleWeights wrs_weights(std::span<const int> binary_labels) {
  SampleWeights out;
  out.ratios = class_ratios(binary_labels);
  const double pos = 1.0 / std::sqrt(out.ratios.positive);
  const double neg = 1.0 / std::sqrt(out.ratios.negative);
  out.weights.reserve(binary_labels.size());
  for (int y : binary_labels) out.weights.push_back(y != 0 ? pos : neg);
  return out;
}

double expected_positive_share(const ClassRatios& ratios) {
  const double p = std::sqrt(ratios.positive), n = std::sqrt(ratios.negative);
  return p / (p + n);
}

std::vector<std::size_t> draw_epoch(std::span<const double> weights, std::size_t n,
                                    std::uint64_t seed) {
  if (n == 0) throw ContractError("draw_epoch: epoch length must be positive");
  if (weights.empty()) throw ContractError("draw_epoch: no weights");
  std::vector<double> cumulative(weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw DomainError("draw_epoch: weights must be finite and non-negative");
    }
    total += weights[i];
    cumulative[i] = total;
  }
  if (!(total > 0.0)) throw DomainError("draw_epoch: weights sum to zero");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
    // First index whose cumulative mass exceeds u.
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    // u can round up to total; fall back to the first index reaching it.
    if (it == cumulative.end()) it = std::lower_bound(cumulative.begin(), cumulative.end(), total);
    out[k] = static_cast<std::size_t>(it - cumulative.begin());
  }
  return out;
}

std::vector<std::size_t> shuffled_epoch(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace pclft
