// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

// Seed-ensemble selection and hard-label majority voting.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pclft {

struct RunReport {
  std::uint64_t seed = 0;
  std::vector<double> fold_metrics;
  double mean_val = 0.0;
  std::string checkpoint;

  /// Fills mean_val with the arithmetic mean of fold_metrics.
  static RunReport from_folds(std::uint64_t seed, std::vector<double> fold_metrics,
                              std::string checkpoint = {});
};

/// The k reports with the highest mean_val, best first; equal means rank the
/// lower seed first.
std::vector<RunReport> select_top_k(std::vector<RunReport> reports, int k = 3);

/// Elementwise majority over an odd number of equal-length 0/1 vectors.
std::vector<int> vote_binary(const std::vector<std::vector<int>>& voters);

/// Per-label majority: voters[v][example][label].
std::vector<std::vector<int>> vote_multilabel(
    const std::vector<std::vector<std::vector<int>>>& voters);

/// Contents of a prediction file: `par_id<TAB>label` for the binary task or
/// `par_id<TAB>b1,...,b7` for the multi-label task.
struct PredictionSet {
  bool multilabel = false;
  std::vector<std::string> ids;
  /// One entry per example; binary rows hold a single value.
  std::vector<std::vector<int>> labels;

  std::vector<int> binary_labels() const;
};

PredictionSet read_predictions(const std::filesystem::path& path);
void write_predictions(std::ostream& out, const PredictionSet& set);
void write_predictions(const std::filesystem::path& path, const PredictionSet& set);

/// Majority vote over prediction sets that list the same ids in the same order.
PredictionSet fuse_predictions(std::span<const PredictionSet> sets);

}  // namespace pclft
