// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

// Fold training, k-fold model selection and the lambda sweep.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pclft/data.hpp"
#include "pclft/ensemble.hpp"
#include "pclft/error.hpp"
#include "pclft/metrics.hpp"
#include "pclft/model.hpp"
#include "pclft/optim.hpp"

namespace pclft {

struct RunConfig {
  int subtask = 1;
  int batch_size = 4;
  int max_len = 250;
  double dropout = 0.4;
  int epochs = 10;
  double eta = 1e-5;
  /// Unset means 1.6 for subtask 1 and 3.6 for subtask 2.
  std::optional<double> lambda;
  int groups = 3;
  double head_multiplier = 1.1;
  double weight_decay = 0.01;
  double warmup_frac = 0.10;
  int k_folds = 5;
  int eval_every_batches = 50;
  int patience_rounds = 10;
  std::uint64_t seed = 42;
  bool wrs = true;
  bool llrd = true;

  int d_model = 64;
  int n_heads = 4;
  int n_layers = 6;
  int d_ff = 256;
  int min_count = 1;

  std::filesystem::path train_path;
  /// Subtask-2 category file (one row per paragraph and category).
  std::filesystem::path labels_path;
  std::filesystem::path out_dir = "runs";
  bool header = false;

  double resolved_lambda() const;
  Subtask task() const { return subtask == 1 ? Subtask::binary : Subtask::multilabel; }
  EncoderConfig encoder_config(std::size_t vocab_size) const;
  /// Throws ConfigError naming the first invalid field.
  void validate() const;
  /// Every field as key=value pairs, lambda resolved.
  std::map<std::string, std::string> to_map() const;
};

/// Sets one field from its key=value spelling. Unknown keys throw ConfigError.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// One encoded paragraph. Binary golds hold a single 0/1 entry; multi-label
/// golds hold 7 bits.
struct Example {
  std::string id;
  std::vector<TokenId> tokens;
  std::vector<int> gold;
  bool positive = false;
};

std::vector<Example> encode_examples(const std::vector<ParagraphRecord>& records,
                                     const Vocabulary& vocab, const RunConfig& config);

/// Raised when the loss stops being finite; the message carries the last
/// schedule multiplier and the offending batch.
class NonFiniteLossError : public Error {
 public:
  using Error::Error;
};

struct Evaluation {
  long step = 0;
  int epoch = 0;
  double metric = 0.0;
  /// Mean training loss since the previous evaluation.
  double train_loss = 0.0;
};

struct ValidationScores {
  /// Positive-class F1 (subtask 1) or macro F1 (subtask 2).
  double metric = 0.0;
  PrecisionRecallF1 positive;
  std::optional<MacroF1> macro;
};

/// Hooks for tests and tooling.
struct FoldHooks {
  /// After every optimizer step.
  std::function<void(long step, const Classifier& model)> on_step;
  /// Stop after this many optimizer steps; 0 means no limit.
  long max_steps = 0;
};

struct FoldResult {
  Classifier model;
  ValidationScores best;
  std::vector<Evaluation> history;
  long steps = 0;
  long planned_steps = 0;
  bool early_stopped = false;
  std::string rng_state;
  AdamW optimizer;
};

/// Trains on `train` and selects the best evaluation on `val`. `seed`
/// drives initialization, dropout and epoch order.
FoldResult train_fold(const RunConfig& config, std::size_t vocab_size,
                      std::span<const Example> train, std::span<const Example> val,
                      std::uint64_t seed, const FoldHooks& hooks = {});

/// Probabilities per example, evaluated without a tape and without dropout.
std::vector<std::vector<double>> predict_probabilities(const Classifier& model,
                                                       std::span<const Example> examples);
/// Hard labels in prediction-file shape.
PredictionSet predict(const Classifier& model, std::span<const Example> examples);

ValidationScores score(const Classifier& model, std::span<const Example> examples);

struct KFoldResult {
  RunReport report;
  std::vector<FoldResult> folds;
  std::vector<std::filesystem::path> checkpoints;
};

/// Full rotation over k stratified folds. When out_dir is non-empty each
/// fold's best model is written there as fold<i>.ckpt.
KFoldResult run_kfold(const RunConfig& config, std::size_t vocab_size,
                      const std::vector<Example>& examples,
                      const std::filesystem::path& out_dir = {});

struct SweepRow {
  double lambda = 0.0;
  double mean = 0.0;
  double std = 0.0;
};

inline const std::vector<double> kLambdaGrid = {0.6, 1.6, 2.6, 3.6, 4.6, 5.6, 6.6};

std::vector<SweepRow> lambda_sweep(const RunConfig& config, std::size_t vocab_size,
                                   const std::vector<Example>& examples,
                                   std::span<const double> grid = kLambdaGrid);

/// `lambda<TAB>mean<TAB>std` per row.
std::string sweep_table(std::span<const SweepRow> rows);

}  // namespace pclft
