// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#include "pclft/optim.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <unordered_map>

#include "pclft/error.hpp"

namespace pclft {

std::string_view to_string(GroupRole role) {
  switch (role) {
    case GroupRole::embeddings_lower: return "embeddings+lower";
    case GroupRole::middle: return "middle";
    case GroupRole::upper: return "upper";
    case GroupRole::head: return "head";
  }
  return "unknown";
}

namespace {

// lr * lambda, moved by at most a few ulps so that dividing the result by
// lambda gives back exactly lr.
double rate_above(double lr, double lambda) {
  const double product = lr * lambda;
  if (product / lambda == lr) return product;
  double down = product, up = product;
  for (int i = 0; i < 4; ++i) {
    down = std::nextafter(down, 0.0);
    up = std::nextafter(up, std::numeric_limits<double>::infinity());
    if (down / lambda == lr) return down;
    if (up / lambda == lr) return up;
  }
  return product;
}

}  // namespace

std::vector<ParamGroup> build_grouped_llrd(const ParameterList& params, int n_layers,
                                           const LlrdOptions& options) {
  const int G = options.groups;
  if (G < 1) throw ConfigError("grouped LLRD: need at least one group");
  if (G > n_layers) {
    throw ConfigError("grouped LLRD: " + std::to_string(G) + " groups exceed " +
                      std::to_string(n_layers) + " encoder layers");
  }
  if (!(options.lambda > 0.0)) throw ConfigError("grouped LLRD: lambda must be positive");
  if (!(options.eta > 0.0)) throw ConfigError("grouped LLRD: eta must be positive");
  if (!(options.head_multiplier > 0.0)) {
    throw ConfigError("grouped LLRD: head_multiplier must be positive");
  }

  // Rates anchored at eta for group ceil(G/2), walked outward.
  const int anchor = (G + 1) / 2;
  std::vector<double> lr(static_cast<std::size_t>(G) + 1);
  lr[static_cast<std::size_t>(anchor)] = options.eta;
  for (int g = anchor - 1; g >= 1; --g) lr[g] = lr[g + 1] / options.lambda;
  for (int g = anchor + 1; g <= G; ++g) lr[g] = rate_above(lr[g - 1], options.lambda);

  // Lower groups take the remainder layers.
  const int base = n_layers / G, rem = n_layers % G;
  std::vector<int> group_of_layer;
  for (int g = 1; g <= G; ++g) {
    const int count = base + (g <= rem ? 1 : 0);
    for (int i = 0; i < count; ++i) group_of_layer.push_back(g);
  }

  std::vector<ParamGroup> groups(static_cast<std::size_t>(G) + 1);
  for (int g = 1; g <= G; ++g) {
    ParamGroup& pg = groups[static_cast<std::size_t>(g - 1)];
    pg.role = g == 1 ? GroupRole::embeddings_lower : (g == G ? GroupRole::upper : GroupRole::middle);
    pg.base_lr = lr[g];
    pg.weight_decay = options.weight_decay;
  }
  ParamGroup& head = groups.back();
  head.role = GroupRole::head;
  head.base_lr = options.head_multiplier * lr[G];
  head.weight_decay = options.weight_decay;

  for (const NamedParameter& p : params) {
    switch (p.site) {
      case ParamSite::embeddings: groups.front().members.push_back(p.name); break;
      case ParamSite::layer: {
        if (p.layer < 0 || p.layer >= n_layers) {
          throw ConfigError("grouped LLRD: parameter " + p.name + " has layer index " +
                            std::to_string(p.layer) + " outside [0, " +
                            std::to_string(n_layers) + ")");
        }
        const int g = group_of_layer[static_cast<std::size_t>(p.layer)];
        groups[static_cast<std::size_t>(g - 1)].members.push_back(p.name);
        break;
      }
      case ParamSite::pooler:
      case ParamSite::head: head.members.push_back(p.name); break;
    }
  }
  check_partition(params, groups);
  return groups;
}

std::vector<ParamGroup> build_single_group(const ParameterList& params, double lr,
                                           double weight_decay) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  ParamGroup g;
  g.role = GroupRole::middle;
  g.base_lr = lr;
  g.weight_decay = weight_decay;
  for (const NamedParameter& p : params) g.members.push_back(p.name);
  return {g};
}

void check_partition(const ParameterList& params, const std::vector<ParamGroup>& groups) {
  std::unordered_map<std::string, int> seen;
  for (const NamedParameter& p : params) {
    if (!seen.emplace(p.name, 0).second) throw ConfigError("duplicate parameter name " + p.name);
  }
  for (const ParamGroup& g : groups) {
    for (const std::string& m : g.members) {
      auto it = seen.find(m);
      if (it == seen.end()) throw ConfigError("group member " + m + " is not a parameter");
      if (++it->second > 1) throw ConfigError("parameter " + m + " is in more than one group");
    }
  }
  for (const auto& [name, count] : seen) {
    if (count == 0) throw ConfigError("parameter " + name + " is in no group");
  }
}

AdamW::AdamW(ParameterList params, std::vector<ParamGroup> groups, AdamWOptions options)
    : params_(std::move(params)), groups_(std::move(groups)), options_(options) {
  check_partition(params_, groups_);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (groups_[g].weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
    for (const std::string& m : groups_[g].members) index[m] = g;
  }
  group_of_.reserve(params_.size());
  moments_.reserve(params_.size());
  for (const NamedParameter& p : params_) {
    group_of_.push_back(index.at(p.name));
    moments_.push_back({std::vector<double>(p.tensor.numel(), 0.0),
                        std::vector<double>(p.tensor.numel(), 0.0)});
  }
}

void AdamW::step(double schedule_multiplier) {
  for (const NamedParameter& p : params_) {
    if (!p.tensor.has_grad()) throw ContractError("AdamW: parameter " + p.name + " has no gradient");
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bias1 = 1.0 - std::pow(options_.beta1, t);
  const double bias2 = 1.0 - std::pow(options_.beta2, t);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    NamedParameter& p = params_[i];
    const ParamGroup& group = groups_[group_of_[i]];
    const double lr = group.base_lr * schedule_multiplier;
    const double decay = p.decay ? lr * group.weight_decay : 0.0;
    auto theta = p.tensor.mutable_values();
    const auto grad = p.tensor.grad();
    auto& m = moments_[i].first;
    auto& v = moments_[i].second;
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double g = grad[j];
      theta[j] -= decay * theta[j];
      m[j] = options_.beta1 * m[j] + (1.0 - options_.beta1) * g;
      v[j] = options_.beta2 * v[j] + (1.0 - options_.beta2) * g * g;
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      theta[j] -= lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
  }
}

void AdamW::zero_grad() {
  for (NamedParameter& p : params_) p.tensor.zero_grad();
}

void AdamW::restore(long steps, std::vector<Moments> moments) {
  if (steps < 0) throw ContractError("AdamW::restore: negative step count");
  if (moments.size() != params_.size()) {
    throw ContractError("AdamW::restore: moment count does not match parameter count");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (moments[i].first.size() != params_[i].tensor.numel() ||
        moments[i].second.size() != params_[i].tensor.numel()) {
      throw ContractError("AdamW::restore: moment size mismatch for " + params_[i].name);
    }
  }
  steps_ = steps;
  moments_ = std::move(moments);
}

long ScheduleState::warmup_steps() const {
  return std::lround(warmup_frac * static_cast<double>(total_steps));
}

double cosine_warmup_multiplier_at(double t, long total_steps, long warmup_steps) {
  if (total_steps <= 0) throw ContractError("schedule: total_steps must be positive");
  if (warmup_steps < 0 || warmup_steps > total_steps) {
    throw ContractError("schedule: warmup steps outside [0, total_steps]");
  }
  const double T = static_cast<double>(total_steps);
  const double w = static_cast<double>(warmup_steps);
  if (t < 0.0 || t > T) {
    throw ContractError("schedule: step " + std::to_string(t) + " outside [0, " +
                        std::to_string(total_steps) + "]");
  }
  if (t <= w) return warmup_steps == 0 ? 1.0 : t / w;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * (t - w) / (T - w)));
}

double cosine_warmup_multiplier(const ScheduleState& state) {
  if (!(state.warmup_frac >= 0.0 && state.warmup_frac <= 1.0)) {
    throw ContractError("schedule: warmup_frac must lie in [0, 1]");
  }
  return cosine_warmup_multiplier_at(static_cast<double>(state.step), state.total_steps,
                                     state.warmup_steps());
}

}  // namespace pclft
