// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

// Grouped layer-wise learning-rate decay, AdamW, and the cosine-with-warmup
// schedule.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pclft/parameter.hpp"

namespace pclft {

enum class GroupRole { embeddings_lower, middle, upper, head };

std::string_view to_string(GroupRole role);

struct ParamGroup {
  GroupRole role = GroupRole::middle;
  std::vector<std::string> members;
  double base_lr = 0.0;
  double weight_decay = 0.01;
};

struct LlrdOptions {
  int groups = 3;
  double eta = 1e-5;
  double lambda = 1.6;
  double head_multiplier = 1.1;
  double weight_decay = 0.01;
};

/// Splits the encoder layers into `groups` contiguous sets bottom-up (the
/// lower sets take the remainder), attaches the embeddings to the first set,
/// and assigns set g (1-based) the rate eta * lambda^(g - ceil(G/2)). Lower
/// rates are derived by repeated division, so lr[g-1] == lr[g] / lambda holds
/// in floating point below the anchor. Above it each product is nudged by a
/// few ulps to satisfy the same identity where a double exists that does,
/// and is otherwise within one ulp. Pooler and head parameters form one
/// more group at head_multiplier times the top encoder rate.
std::vector<ParamGroup> build_grouped_llrd(const ParameterList& params, int n_layers,
                                           const LlrdOptions& options);

/// Every parameter in one group at `lr`.
std::vector<ParamGroup> build_single_group(const ParameterList& params, double lr,
                                           double weight_decay);

/// Throws ConfigError unless every parameter is in exactly one group and every
/// member names a known parameter.
void check_partition(const ParameterList& params, const std::vector<ParamGroup>& groups);

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with decoupled weight decay. Parameters flagged decay == false
/// (biases, layer norms) are never decayed.
class AdamW {
 public:
  struct Moments {
    std::vector<double> first;
    std::vector<double> second;
  };

  AdamW(ParameterList params, std::vector<ParamGroup> groups, AdamWOptions options = {});

  /// One update with effective rate base_lr * schedule_multiplier per group.
  void step(double schedule_multiplier);
  void zero_grad();

  long steps() const noexcept { return steps_; }
  const ParameterList& parameters() const noexcept { return params_; }
  const std::vector<ParamGroup>& groups() const noexcept { return groups_; }
  const AdamWOptions& options() const noexcept { return options_; }
  /// Parallel to parameters().
  const std::vector<Moments>& moments() const noexcept { return moments_; }
  /// Index into groups() for parameter i.
  std::size_t group_of(std::size_t i) const { return group_of_.at(i); }

  void restore(long steps, std::vector<Moments> moments);

 private:
  ParameterList params_;
  std::vector<ParamGroup> groups_;
  AdamWOptions options_;
  std::vector<std::size_t> group_of_;
  std::vector<Moments> moments_;
  long steps_ = 0;
};

struct ScheduleState {
  long step = 0;
  long total_steps = 1;
  double warmup_frac = 0.10;

  /// round(warmup_frac * total_steps)
  long warmup_steps() const;
};

/// Linear warmup to 1 over the warmup steps, then half-cosine decay to 0 at
/// total_steps.
double cosine_warmup_multiplier(const ScheduleState& state);

/// The same curve at a real-valued position t in [0, total_steps].
double cosine_warmup_multiplier_at(double t, long total_steps, long warmup_steps);

}  // namespace pclft
