// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#include "pclft/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <spdlog/spdlog.h>
#include <sstream>

#include "pclft/checkpoint.hpp"
#include "pclft/sampler.hpp"

namespace pclft {

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto res = std::from_chars(value.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("config: " + key + " expects a number, got '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "off" || value == "no") return false;
  throw ConfigError("config: " + key + " expects true/false, got '" + value + "'");
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<Example> gather(const std::vector<Example>& all, const std::vector<std::size_t>& idx) {
  std::vector<Example> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(all[i]);
  return out;
}

std::string batch_ids(std::span<const Example> train, std::span<const std::size_t> rows) {
  std::string out;
  for (std::size_t r : rows) {
    if (!out.empty()) out += ',';
    out += train[r].id;
  }
  return out;
}

}  // namespace

double RunConfig::resolved_lambda() const {
  if (lambda) return *lambda;
  return subtask == 2 ? 3.6 : 1.6;
}

EncoderConfig RunConfig::encoder_config(std::size_t vocab_size) const {
  EncoderConfig e;
  e.vocab_size = static_cast<int>(vocab_size);
  e.d_model = d_model;
  e.n_heads = n_heads;
  e.n_layers = n_layers;
  e.d_ff = d_ff;
  e.max_len = max_len;
  e.dropout_rate = dropout;
  e.pad_id = kPadId;
  return e;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("config: ") + what);
  };
  require(subtask == 1 || subtask == 2, "subtask must be 1 or 2");
  require(batch_size > 0, "batch_size must be positive");
  require(max_len > 2, "max_len must leave room for [CLS] and [SEP]");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
  require(epochs > 0, "epochs must be positive");
  require(eta > 0.0 && std::isfinite(eta), "eta must be positive");
  require(resolved_lambda() > 0.0 && std::isfinite(resolved_lambda()), "lambda must be positive");
  require(groups > 0, "groups must be positive");
  require(groups <= n_layers, "groups cannot exceed n_layers");
  require(head_multiplier > 0.0, "head_multiplier must be positive");
  require(weight_decay >= 0.0, "weight_decay must be non-negative");
  require(warmup_frac >= 0.0 && warmup_frac <= 1.0, "warmup_frac must lie in [0, 1]");
  require(k_folds >= 2, "k_folds must be at least 2");
  require(eval_every_batches > 0, "eval_every_batches must be positive");
  require(patience_rounds > 0, "patience_rounds must be positive");
  require(d_model > 0 && n_heads > 0 && d_model % n_heads == 0,
          "d_model must be a positive multiple of n_heads");
  require(n_layers > 0 && d_ff > 0, "n_layers and d_ff must be positive");
  require(min_count > 0, "min_count must be positive");
}

std::map<std::string, std::string> RunConfig::to_map() const {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"subtask", std::to_string(subtask)},
      {"batch_size", std::to_string(batch_size)},
      {"max_len", std::to_string(max_len)},
      {"dropout", format_double(dropout)},
      {"epochs", std::to_string(epochs)},
      {"eta", format_double(eta)},
      {"lambda", format_double(resolved_lambda())},
      {"groups", std::to_string(groups)},
      {"head_multiplier", format_double(head_multiplier)},
      {"weight_decay", format_double(weight_decay)},
      {"warmup_frac", format_double(warmup_frac)},
      {"k_folds", std::to_string(k_folds)},
      {"eval_every_batches", std::to_string(eval_every_batches)},
      {"patience_rounds", std::to_string(patience_rounds)},
      {"seed", std::to_string(seed)},
      {"wrs", b(wrs)},
      {"llrd", b(llrd)},
      {"d_model", std::to_string(d_model)},
      {"n_heads", std::to_string(n_heads)},
      {"n_layers", std::to_string(n_layers)},
      {"d_ff", std::to_string(d_ff)},
      {"min_count", std::to_string(min_count)},
      {"train_path", train_path.string()},
      {"labels_path", labels_path.string()},
      {"out_dir", out_dir.string()},
      {"header", b(header)},
  };
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "subtask") c.subtask = parse_number<int>(key, value);
  else if (key == "batch_size") c.batch_size = parse_number<int>(key, value);
  else if (key == "max_len") c.max_len = parse_number<int>(key, value);
  else if (key == "dropout") c.dropout = parse_number<double>(key, value);
  else if (key == "epochs") c.epochs = parse_number<int>(key, value);
  else if (key == "eta") c.eta = parse_number<double>(key, value);
  else if (key == "lambda") c.lambda = parse_number<double>(key, value);
  else if (key == "groups") c.groups = parse_number<int>(key, value);
  else if (key == "head_multiplier") c.head_multiplier = parse_number<double>(key, value);
  else if (key == "weight_decay") c.weight_decay = parse_number<double>(key, value);
  else if (key == "warmup_frac") c.warmup_frac = parse_number<double>(key, value);
  else if (key == "k_folds") c.k_folds = parse_number<int>(key, value);
  else if (key == "eval_every_batches") c.eval_every_batches = parse_number<int>(key, value);
  else if (key == "patience_rounds") c.patience_rounds = parse_number<int>(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "wrs") c.wrs = parse_bool(key, value);
  else if (key == "llrd") c.llrd = parse_bool(key, value);
  else if (key == "d_model") c.d_model = parse_number<int>(key, value);
  else if (key == "n_heads") c.n_heads = parse_number<int>(key, value);
  else if (key == "n_layers") c.n_layers = parse_number<int>(key, value);
  else if (key == "d_ff") c.d_ff = parse_number<int>(key, value);
  else if (key == "min_count") c.min_count = parse_number<int>(key, value);
  else if (key == "train_path") c.train_path = value;
  else if (key == "labels_path") c.labels_path = value;
  else if (key == "out_dir") c.out_dir = value;
  else if (key == "header") c.header = parse_bool(key, value);
  else throw ConfigError("config: unknown key '" + key + "'");
}

std::vector<Example> encode_examples(const std::vector<ParagraphRecord>& records,
                                     const Vocabulary& vocab, const RunConfig& config) {
  std::vector<Example> out;
  out.reserve(records.size());
  for (const ParagraphRecord& r : records) {
    Example e;
    e.id = r.par_id;
    e.tokens = tokenize(compose_input(r), vocab, config.max_len);
    e.positive = is_positive(r);
    if (config.subtask == 1) {
      e.gold = {e.positive ? 1 : 0};
    } else {
      e.gold = r.categories.value_or(std::vector<int>(kNumCategories, 0));
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<std::vector<double>> predict_probabilities(const Classifier& model,
                                                       std::span<const Example> examples) {
  std::mt19937_64 unused(0);
  std::vector<std::vector<double>> out;
  out.reserve(examples.size());
  for (const Example& e : examples) {
    const Tensor probs = model.forward({e.tokens}, false, unused);
    out.emplace_back(probs.values().begin(), probs.values().end());
  }
  return out;
}

PredictionSet predict(const Classifier& model, std::span<const Example> examples) {
  PredictionSet set;
  set.multilabel = model.subtask() == Subtask::multilabel;
  for (const Example& e : examples) set.ids.push_back(e.id);
  for (const auto& p : predict_probabilities(model, examples)) {
    if (set.multilabel) set.labels.push_back(multilabel_decision(p));
    else set.labels.push_back({binary_decision(p)});
  }
  return set;
}

ValidationScores score(const Classifier& model, std::span<const Example> examples) {
  const PredictionSet preds = predict(model, examples);
  ValidationScores s;
  if (preds.multilabel) {
    std::vector<std::vector<int>> golds;
    for (const Example& e : examples) golds.push_back(e.gold);
    s.macro = macro_f1(preds.labels, golds);
    s.metric = s.macro->macro;
    std::vector<int> any_pred, any_gold;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      const auto& p = preds.labels[i];
      any_pred.push_back(std::any_of(p.begin(), p.end(), [](int v) { return v != 0; }) ? 1 : 0);
      any_gold.push_back(examples[i].positive ? 1 : 0);
    }
    s.positive = prf1_positive(any_pred, any_gold);
  } else {
    std::vector<int> golds;
    for (const Example& e : examples) golds.push_back(e.gold.at(0));
    s.positive = prf1_positive(preds.binary_labels(), golds);
    s.metric = s.positive.f1;
  }
  return s;
}

FoldResult train_fold(const RunConfig& config, std::size_t vocab_size,
                      std::span<const Example> train, std::span<const Example> val,
                      std::uint64_t seed, const FoldHooks& hooks) {
  config.validate();
  if (train.empty() || val.empty()) {
    throw ConfigError("train_fold: training and validation splits must be non-empty");
  }
  std::mt19937_64 rng(seed);
  Classifier model(config.task(), config.encoder_config(vocab_size), rng);
  const ParameterList params = model.parameters();
  std::vector<ParamGroup> groups =
      config.llrd
          ? build_grouped_llrd(params, config.n_layers,
                               LlrdOptions{config.groups, config.eta, config.resolved_lambda(),
                                           config.head_multiplier, config.weight_decay})
          : build_single_group(params, config.eta, config.weight_decay);
  AdamW opt(params, std::move(groups));

  const std::size_t n = train.size();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t per_epoch = (n + batch - 1) / batch;
  ScheduleState schedule{0, static_cast<long>(per_epoch) * config.epochs, config.warmup_frac};

  std::vector<double> weights;
  if (config.wrs) {
    std::vector<int> flags;
    for (const Example& e : train) flags.push_back(e.positive ? 1 : 0);
    const bool single_class = std::all_of(flags.begin(), flags.end(),
                                          [&](int f) { return f == flags.front(); });
    if (single_class) {
      spdlog::warn("weighted sampling: training split has a single class, sampling uniformly");
      weights.assign(n, 1.0);
    } else {
      weights = wrs_weights(flags).weights;
    }
  }

  std::vector<Evaluation> history;
  ValidationScores best;
  best.metric = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_values;
  std::vector<AdamW::Moments> best_moments;
  long best_steps = 0;
  std::string best_rng;
  int stale = 0;
  bool early = false;
  double loss_sum = 0.0;
  long loss_count = 0;
  double last_multiplier = 0.0;
  int epoch = 0;

  auto evaluate = [&]() {
    const ValidationScores s = score(model, val);
    history.push_back(Evaluation{opt.steps(), epoch, s.metric,
                                 loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0});
    loss_sum = 0.0;
    loss_count = 0;
    spdlog::debug("step {} epoch {} metric {:.4f}", opt.steps(), epoch, s.metric);
    if (s.metric > best.metric) {
      best = s;
      best_values = model.snapshot_values();
      best_moments = opt.moments();
      best_steps = opt.steps();
      best_rng = rng_to_string(rng);
      stale = 0;
    } else if (++stale >= config.patience_rounds) {
      early = true;
    }
  };

  bool stop = false;
  for (epoch = 1; epoch <= config.epochs && !stop; ++epoch) {
    const std::vector<std::size_t> order =
        config.wrs ? draw_epoch(weights, n, rng()) : shuffled_epoch(n, rng());
    for (std::size_t b = 0; b < per_epoch && !stop; ++b) {
      const std::span<const std::size_t> rows(order.data() + b * batch,
                                              std::min(batch, n - b * batch));
      std::vector<std::vector<TokenId>> tokens;
      std::vector<std::vector<int>> golds;
      for (std::size_t r : rows) {
        tokens.push_back(train[r].tokens);
        golds.push_back(train[r].gold);
      }
      auto non_finite = [&](const std::string& cause) {
        std::ostringstream msg;
        msg << "non-finite loss at step " << opt.steps() << " (epoch " << epoch
            << "); last lr multiplier " << last_multiplier << "; batch ids "
            << batch_ids(train, rows) << "; " << cause;
        return NonFiniteLossError(msg.str());
      };
      Tape tape;
      Tensor loss;
      try {
        TapeScope scope(tape);
        loss = model.loss(model.forward(tokens, true, rng), golds);
      } catch (const DomainError& e) {
        // Overflowed weights surface first as a non-finite activation.
        throw non_finite(e.what());
      }
      const double value = loss.item();
      if (!std::isfinite(value)) throw non_finite("loss " + std::to_string(value));
      tape.backward(loss);
      schedule.step = opt.steps();
      last_multiplier = cosine_warmup_multiplier(schedule);
      opt.step(last_multiplier);
      opt.zero_grad();
      loss_sum += value;
      ++loss_count;
      if (hooks.on_step) hooks.on_step(opt.steps(), model);

      if (opt.steps() % config.eval_every_batches == 0) {
        evaluate();
        stop = early;
      }
      if (hooks.max_steps > 0 && opt.steps() >= hooks.max_steps) stop = true;
    }
  }
  --epoch;
  if (history.empty() || history.back().step != opt.steps()) evaluate();

  const long steps = opt.steps();
  model.load_values(best_values);
  opt.restore(best_steps, best_moments);
  return FoldResult{std::move(model), best,  std::move(history), steps,
                    schedule.total_steps, early, best_rng,         std::move(opt)};
}

KFoldResult run_kfold(const RunConfig& config, std::size_t vocab_size,
                      const std::vector<Example>& examples,
                      const std::filesystem::path& out_dir) {
  config.validate();
  if (examples.empty()) throw ConfigError("kfold: empty dataset");
  std::vector<int> strata;
  if (config.subtask == 1) {
    for (const Example& e : examples) strata.push_back(e.positive ? 1 : 0);
  } else {
    std::vector<ParagraphRecord> records(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) records[i].categories = examples[i].gold;
    strata = multilabel_strata(records, config.k_folds);
  }
  const FoldAssignment folds = stratified_kfold(strata, config.k_folds, config.seed);
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  KFoldResult result;
  std::vector<double> metrics;
  std::size_t best_fold = 0;
  for (int f = 0; f < config.k_folds; ++f) {
    const std::vector<Example> train = gather(examples, folds.training(f));
    const std::vector<Example> val = gather(examples, folds.validation(f));
    const std::uint64_t fold_seed = splitmix64(config.seed ^ splitmix64(static_cast<std::uint64_t>(f)));
    FoldResult fr = train_fold(config, vocab_size, train, val, fold_seed);
    spdlog::info("fold {}/{}: metric {:.4f} after {} steps{}", f + 1, config.k_folds,
                 fr.best.metric, fr.steps, fr.early_stopped ? " (early stop)" : "");
    metrics.push_back(fr.best.metric);
    if (!out_dir.empty()) {
      const auto path = out_dir / ("fold" + std::to_string(f) + ".ckpt");
      save_checkpoint(path, Checkpoint::capture(fr.model, &fr.optimizer, fr.rng_state,
                                                config.to_map()));
      result.checkpoints.push_back(path);
    }
    if (result.folds.empty() || fr.best.metric > result.folds[best_fold].best.metric) {
      best_fold = result.folds.size();
    }
    result.folds.push_back(std::move(fr));
  }
  result.report = RunReport::from_folds(
      config.seed, metrics,
      result.checkpoints.empty() ? std::string() : result.checkpoints[best_fold].string());
  return result;
}

std::vector<SweepRow> lambda_sweep(const RunConfig& config, std::size_t vocab_size,
                                   const std::vector<Example>& examples,
                                   std::span<const double> grid) {
  if (grid.empty()) throw ConfigError("sweep: empty lambda grid");
  std::vector<SweepRow> rows;
  for (double lambda : grid) {
    RunConfig c = config;
    c.lambda = lambda;
    const KFoldResult r = run_kfold(c, vocab_size, examples);
    const auto& m = r.report.fold_metrics;
    double var = 0.0;
    for (double v : m) var += (v - r.report.mean_val) * (v - r.report.mean_val);
    var = m.size() > 1 ? var / static_cast<double>(m.size() - 1) : 0.0;
    rows.push_back(SweepRow{lambda, r.report.mean_val, std::sqrt(var)});
  }
  return rows;
}

std::string sweep_table(std::span<const SweepRow> rows) {
  std::string out = "lambda\tmean_metric\tstd\n";
  for (const SweepRow& r : rows) {
    out += format_double(r.lambda) + "\t" + format_double(r.mean) + "\t" + format_double(r.std) +
           "\n";
  }
  return out;
}

}  // namespace pclft
