// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "pclft/labels.hpp"

namespace pclft {

struct ConfusionCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;

  long total() const { return tp + fp + fn + tn; }
};

/// Counts with label 1 as the positive class.
ConfusionCounts confusion(std::span<const int> preds, std::span<const int> golds);

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Every 0/0 ratio is taken as 0.
PrecisionRecallF1 prf1(const ConfusionCounts& counts);

/// Precision, recall and F1 of the positive class.
PrecisionRecallF1 prf1_positive(std::span<const int> preds, std::span<const int> golds);

/// Harmonic mean 2PR/(P+R), 0 when P + R == 0.
double f1_from(double precision, double recall);

struct MacroF1 {
  std::array<double, kNumCategories> per_class{};
  double macro = 0.0;
};

/// One-vs-rest F1 per category and their unweighted mean. Categories absent
/// from both predictions and golds score 0 and still count in the mean.
MacroF1 macro_f1(const std::vector<std::vector<int>>& preds,
                 const std::vector<std::vector<int>>& golds);

/// Unweighted mean of already computed per-class scores.
double macro_average(std::span<const double> per_class);

/// "key=value" lines, one per metric.
std::string to_key_value(const PrecisionRecallF1& m);
std::string to_key_value(const MacroF1& m);

/// One tab-separated row (no trailing newline) plus its header.
std::string tsv_header(const PrecisionRecallF1&);
std::string tsv_row(const PrecisionRecallF1& m);
std::string tsv_header(const MacroF1&);
std::string tsv_row(const MacroF1& m);

}  // namespace pclft
