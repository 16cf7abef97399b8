// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

// Binary checkpoint: magic, version, a JSON header (config, encoder shape,
// optimizer groups, step count, RNG state), then raw little-endian doubles
// for each parameter and its Adam moments.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pclft/model.hpp"
#include "pclft/optim.hpp"

namespace pclft {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct OptimizerState {
  std::vector<ParamGroup> groups;
  AdamWOptions options;
  long steps = 0;
  /// Parallel to the model's parameter list.
  std::vector<AdamW::Moments> moments;
};

struct Checkpoint {
  Subtask subtask = Subtask::binary;
  EncoderConfig encoder;
  std::map<std::string, std::string> config;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
  std::optional<OptimizerState> optimizer;
  /// Text form of a std::mt19937_64.
  std::string rng_state;

  static Checkpoint capture(const Classifier& model, const AdamW* optimizer,
                            const std::string& rng_state,
                            std::map<std::string, std::string> config);
  /// A classifier with this checkpoint's weights.
  Classifier restore_model() const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws ParseError on a bad magic, version or truncated payload.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// FNV-1a over the file bytes, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

std::string rng_to_string(const std::mt19937_64& rng);
std::mt19937_64 rng_from_string(const std::string& state);

}  // namespace pclft
