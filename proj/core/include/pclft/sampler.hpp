// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

// Weighted random sampling for class imbalance. Each example is weighted by
// the inverse square root of its class ratio and an epoch draws as many
// indices, with replacement, as there are examples.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pclft {

struct ClassRatios {
  double positive = 0.0;
  double negative = 0.0;
};

struct SampleWeights {
  std::vector<double> weights;
  ClassRatios ratios;
};

/// Fraction of positive and negative labels (label != 0 counts as positive).
/// Throws DomainError when either class is absent.
ClassRatios class_ratios(std::span<const int> binary_labels);

/// 1/sqrt(kappa_p) for positives, 1/sqrt(kappa_n) for negatives.
SampleWeights wrs_weights(std::span<const int> binary_labels);

/// Expected share of positives in a weighted epoch:
/// sqrt(kappa_p) / (sqrt(kappa_p) + sqrt(kappa_n)).
double expected_positive_share(const ClassRatios& ratios);

/// n indices drawn independently with P(i) = w_i / sum_j w_j.
std::vector<std::size_t> draw_epoch(std::span<const double> weights, std::size_t n,
                                    std::uint64_t seed);
inline std::vector<std::size_t> draw_epoch(const SampleWeights& weights, std::size_t n,
                                           std::uint64_t seed) {
  return draw_epoch(weights.weights, n, seed);
}

/// A uniformly shuffled permutation of [0, n), used when weighting is off.
std::vector<std::size_t> shuffled_epoch(std::size_t n, std::uint64_t seed);

}  // namespace pclft
