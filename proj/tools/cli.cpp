// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <spdlog/spdlog.h>
#include <string>
#include <vector>

#include "pclft/checkpoint.hpp"
#include "pclft/trainer.hpp"

namespace pclft {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr const char* kDefaultTrainFile = "dontpatronizeme_pcl.tsv";
constexpr const char* kDefaultLabelsFile = "dontpatronizeme_categories.tsv";

// Usage problems detected after CLI11 has accepted the command line.
class UsageError : public Error {
 public:
  using Error::Error;
};

fs::path data_dir() {
  const char* dir = std::getenv(kDataDirEnv);
  return dir ? fs::path(dir) : fs::path();
}

fs::path resolve_data_path(const fs::path& given, const char* default_name) {
  const fs::path dir = data_dir();
  if (given.empty()) {
    if (dir.empty()) {
      throw UsageError(std::string("no data path given and ") + kDataDirEnv + " is not set");
    }
    return dir / default_name;
  }
  if (given.is_relative() && !fs::exists(given) && !dir.empty() && fs::exists(dir / given)) {
    return dir / given;
  }
  return given;
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw UsageError(what + " not found: " + p.string());
}

// key=value lines; blank lines and lines starting with '#' are skipped.
void apply_config_file(RunConfig& cfg, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

// Flags for every RunConfig field plus --config. Values are kept as text and
// applied through apply_setting after the config file, so flags win.
struct RunFlags {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_path;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key=value file; flags override it");
    for (const auto& [key, fallback] : RunConfig{}.to_map()) {
      std::string names = "--" + key;
      std::string dashed = key;
      for (char& c : dashed) c = c == '_' ? '-' : c;
      if (dashed != key) names += ",--" + dashed;
      options[key] = app->add_option(names, values[key], "default " + (fallback.empty() ? "none" : fallback));
    }
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) apply_setting(cfg, key, values.at(key));
    }
    cfg.validate();
    return cfg;
  }
};

struct Dataset {
  Vocabulary vocab;
  std::vector<Example> examples;
};

std::vector<ParagraphRecord> load_records(const RunConfig& cfg, bool need_categories) {
  const fs::path train = resolve_data_path(cfg.train_path, kDefaultTrainFile);
  require_file(train, "training file");
  std::vector<ParagraphRecord> records = load_subtask1_tsv(train, TsvOptions{cfg.header});
  if (need_categories) {
    const fs::path labels = resolve_data_path(cfg.labels_path, kDefaultLabelsFile);
    require_file(labels, "category file");
    records = attach_categories(std::move(records),
                                load_subtask2_labels(labels, TsvOptions{cfg.header}));
  }
  if (records.empty()) throw ConfigError("training file " + train.string() + " has no rows");
  return records;
}

Dataset load_dataset(const RunConfig& cfg) {
  const auto records = load_records(cfg, cfg.subtask == 2);
  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (const auto& r : records) texts.push_back(compose_input(r));
  Dataset d{Vocabulary::build(texts, static_cast<std::size_t>(cfg.min_count)), {}};
  d.examples = encode_examples(records, d.vocab, cfg);
  return d;
}

json history_json(const std::vector<Evaluation>& history) {
  json out = json::array();
  for (const Evaluation& e : history) {
    out.push_back({{"step", e.step}, {"epoch", e.epoch}, {"metric", e.metric},
                   {"train_loss", e.train_loss}});
  }
  return out;
}

json fold_json(const FoldResult& f) {
  return {{"best_metric", f.best.metric},
          {"precision", f.best.positive.precision},
          {"recall", f.best.positive.recall},
          {"f1", f.best.positive.f1},
          {"steps", f.steps},
          {"planned_steps", f.planned_steps},
          {"early_stopped", f.early_stopped},
          {"history", history_json(f.history)}};
}

json checkpoint_hashes(const std::vector<fs::path>& paths) {
  json out = json::object();
  for (const fs::path& p : paths) out[p.filename().string()] = file_hash(p);
  return out;
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json metadata(const std::string& command, const RunConfig& cfg, Clock::time_point started) {
  const double seconds = std::chrono::duration<double>(Clock::now() - started).count();
  return {{"command", command},
          {"config", cfg.to_map()},
          {"seed", cfg.seed},
          {"wall_clock_seconds", seconds}};
}

std::vector<double> parse_doubles(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const std::string& s : items) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size()) throw UsageError("expected a number, got '" + s + "'");
    out.push_back(v);
  }
  return out;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const auto started = Clock::now();
  const Dataset data = load_dataset(cfg);
  std::vector<int> strata;
  for (const Example& e : data.examples) strata.push_back(e.positive ? 1 : 0);
  if (cfg.subtask == 2) {
    std::vector<ParagraphRecord> records(data.examples.size());
    for (std::size_t i = 0; i < records.size(); ++i) records[i].categories = data.examples[i].gold;
    strata = multilabel_strata(records, cfg.k_folds);
  }
  // One stratified fold held out for validation.
  const FoldAssignment folds = stratified_kfold(strata, cfg.k_folds, cfg.seed);
  std::vector<Example> train, val;
  for (std::size_t i : folds.training(0)) train.push_back(data.examples[i]);
  for (std::size_t i : folds.validation(0)) val.push_back(data.examples[i]);

  const FoldResult r = train_fold(cfg, data.vocab.size(), train, val, cfg.seed);
  fs::create_directories(cfg.out_dir);
  const fs::path ckpt = cfg.out_dir / "model.ckpt";
  save_checkpoint(ckpt, Checkpoint::capture(r.model, &r.optimizer, r.rng_state, cfg.to_map()));
  data.vocab.save(cfg.out_dir / "vocab.txt");

  json meta = metadata("train", cfg, started);
  meta["folds"] = json::array({fold_json(r)});
  meta["checkpoints"] = checkpoint_hashes({ckpt});
  write_json(cfg.out_dir / "metadata.json", meta);

  out << "metric\t" << r.best.metric << "\n";
  out << to_key_value(r.best.positive);
  out << "checkpoint\t" << ckpt.string() << "\n";
  return 0;
}

int cmd_kfold(const RunConfig& base, const std::vector<std::uint64_t>& seeds, std::ostream& out) {
  const Dataset data = load_dataset(base);
  const std::vector<std::uint64_t> run_seeds = seeds.empty() ? std::vector{base.seed} : seeds;
  for (std::uint64_t seed : run_seeds) {
    const auto started = Clock::now();
    RunConfig cfg = base;
    cfg.seed = seed;
    if (run_seeds.size() > 1) cfg.out_dir = base.out_dir / ("seed" + std::to_string(seed));
    const KFoldResult r = run_kfold(cfg, data.vocab.size(), data.examples, cfg.out_dir);
    data.vocab.save(cfg.out_dir / "vocab.txt");

    json meta = metadata("kfold", cfg, started);
    meta["folds"] = json::array();
    for (const FoldResult& f : r.folds) meta["folds"].push_back(fold_json(f));
    meta["fold_metrics"] = r.report.fold_metrics;
    meta["mean_metric"] = r.report.mean_val;
    meta["checkpoints"] = checkpoint_hashes(r.checkpoints);
    write_json(cfg.out_dir / "metadata.json", meta);
    write_json(cfg.out_dir / "report.json", {{"seed", r.report.seed},
                                             {"fold_metrics", r.report.fold_metrics},
                                             {"mean_val", r.report.mean_val},
                                             {"checkpoint", r.report.checkpoint}});

    out << "seed\t" << seed << "\n";
    for (std::size_t f = 0; f < r.report.fold_metrics.size(); ++f) {
      out << "fold" << f << "\t" << r.report.fold_metrics[f] << "\n";
    }
    out << "mean\t" << r.report.mean_val << "\n";
  }
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::vector<double>& grid, std::ostream& out) {
  const auto started = Clock::now();
  const Dataset data = load_dataset(cfg);
  const std::vector<SweepRow> rows = lambda_sweep(cfg, data.vocab.size(), data.examples, grid);
  const std::string table = sweep_table(rows);
  fs::create_directories(cfg.out_dir);
  std::ofstream(cfg.out_dir / "sweep.tsv") << table;
  json meta = metadata("sweep", cfg, started);
  meta["sweep"] = json::array();
  for (const SweepRow& r : rows) {
    meta["sweep"].push_back({{"lambda", r.lambda}, {"mean_metric", r.mean}, {"std", r.std}});
  }
  write_json(cfg.out_dir / "metadata.json", meta);
  out << table;
  return 0;
}

struct PredictArgs {
  std::string checkpoint, vocab, input, output;
  bool header = false;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  require_file(a.checkpoint, "checkpoint");
  const fs::path vocab_path =
      a.vocab.empty() ? fs::path(a.checkpoint).parent_path() / "vocab.txt" : fs::path(a.vocab);
  require_file(vocab_path, "vocabulary");
  const fs::path input = resolve_data_path(a.input, kDefaultTrainFile);
  require_file(input, "input file");

  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const Classifier model = ck.restore_model();
  const Vocabulary vocab = Vocabulary::load(vocab_path);
  RunConfig cfg;
  cfg.subtask = ck.subtask == Subtask::binary ? 1 : 2;
  cfg.max_len = ck.encoder.max_len;
  const auto examples = encode_examples(load_subtask1_tsv(input, TsvOptions{a.header}), vocab, cfg);
  const PredictionSet preds = predict(model, examples);
  if (a.output.empty()) {
    write_predictions(out, preds);
  } else {
    write_predictions(fs::path(a.output), preds);
  }
  return 0;
}

struct EnsembleArgs {
  std::vector<std::string> preds, reports;
  int top_k = 3;
  std::string output;
};

RunReport read_report(const fs::path& path) {
  require_file(path, "report");
  std::ifstream in(path);
  json doc;
  try {
    in >> doc;
    return RunReport::from_folds(doc.at("seed").get<std::uint64_t>(),
                                 doc.at("fold_metrics").get<std::vector<double>>(),
                                 doc.value("checkpoint", std::string()));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

int cmd_ensemble(const EnsembleArgs& a, std::ostream& out) {
  if (a.preds.empty() == a.reports.empty()) {
    throw UsageError("ensemble needs exactly one of --preds or --reports");
  }
  if (!a.reports.empty()) {
    std::vector<RunReport> reports;
    for (const std::string& p : a.reports) reports.push_back(read_report(p));
    for (const RunReport& r : select_top_k(reports, a.top_k)) {
      out << r.seed << "\t" << r.mean_val << "\t" << r.checkpoint << "\n";
    }
    return 0;
  }
  std::vector<PredictionSet> sets;
  for (const std::string& p : a.preds) {
    require_file(p, "prediction file");
    sets.push_back(read_predictions(p));
  }
  const PredictionSet fused = fuse_predictions(sets);
  if (a.output.empty()) {
    write_predictions(out, fused);
  } else {
    write_predictions(fs::path(a.output), fused);
  }
  return 0;
}

struct EvaluateArgs {
  std::string gold, pred;
  int subtask = 1;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  require_file(a.gold, "gold file");
  require_file(a.pred, "prediction file");
  const PredictionSet gold = read_predictions(a.gold);
  const PredictionSet pred = read_predictions(a.pred);
  if ((a.subtask == 2) != gold.multilabel || gold.multilabel != pred.multilabel) {
    throw UsageError("evaluate: file layouts do not match subtask " + std::to_string(a.subtask));
  }
  // Align predictions to the gold order by id.
  std::map<std::string, std::size_t> row;
  for (std::size_t i = 0; i < pred.ids.size(); ++i) row[pred.ids[i]] = i;
  std::vector<std::vector<int>> p, g;
  for (std::size_t i = 0; i < gold.ids.size(); ++i) {
    const auto it = row.find(gold.ids[i]);
    if (it == row.end()) throw ContractError("evaluate: no prediction for id " + gold.ids[i]);
    p.push_back(pred.labels[it->second]);
    g.push_back(gold.labels[i]);
  }
  if (a.subtask == 1) {
    std::vector<int> pb, gb;
    for (std::size_t i = 0; i < p.size(); ++i) {
      pb.push_back(p[i].at(0));
      gb.push_back(g[i].at(0));
    }
    out << to_key_value(prf1_positive(pb, gb));
  } else {
    out << to_key_value(macro_f1(p, g));
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fine-tuning pipeline for patronizing-language classification", "pclft"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  RunFlags train_flags, kfold_flags, sweep_flags;
  CLI::App* train = app.add_subcommand("train", "train on one stratified split");
  train_flags.attach(train);

  CLI::App* kfold = app.add_subcommand("kfold", "k-fold rotation, one checkpoint per fold");
  kfold_flags.attach(kfold);
  std::vector<std::uint64_t> seeds;
  kfold->add_option("--seeds", seeds, "run once per seed into <out_dir>/seed<N>")->delimiter(',');

  CLI::App* sweep = app.add_subcommand("sweep", "k-fold run per lambda on a grid");
  sweep_flags.attach(sweep);
  std::vector<std::string> grid_text;
  sweep->add_option("--grid", grid_text, "comma-separated lambdas")->delimiter(',');

  PredictArgs predict_args;
  CLI::App* predict_cmd = app.add_subcommand("predict", "write a prediction file");
  predict_cmd->add_option("--checkpoint", predict_args.checkpoint)->required();
  predict_cmd->add_option("--vocab", predict_args.vocab, "default: vocab.txt next to the checkpoint");
  predict_cmd->add_option("--input", predict_args.input, "paragraph TSV");
  predict_cmd->add_option("--output", predict_args.output, "default: stdout");
  predict_cmd->add_flag("--header", predict_args.header, "input has a header row");

  EnsembleArgs ensemble_args;
  CLI::App* ensemble = app.add_subcommand("ensemble", "majority vote or top-k seed selection");
  ensemble->add_option("--preds", ensemble_args.preds, "odd number of prediction files")
      ->delimiter(',');
  ensemble->add_option("--reports", ensemble_args.reports, "report.json files from kfold")
      ->delimiter(',');
  ensemble->add_option("--top-k,--top_k", ensemble_args.top_k)->check(CLI::PositiveNumber);
  ensemble->add_option("--output", ensemble_args.output, "default: stdout");

  EvaluateArgs eval_args;
  CLI::App* evaluate = app.add_subcommand("evaluate", "score a prediction file against gold");
  evaluate->add_option("--gold", eval_args.gold)->required();
  evaluate->add_option("--pred", eval_args.pred)->required();
  evaluate->add_option("--subtask", eval_args.subtask)->check(CLI::IsMember({1, 2}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*train) return cmd_train(train_flags.resolve(), out);
    if (*kfold) return cmd_kfold(kfold_flags.resolve(), seeds, out);
    if (*sweep) {
      const std::vector<double> grid =
          grid_text.empty() ? kLambdaGrid : parse_doubles(grid_text);
      return cmd_sweep(sweep_flags.resolve(), grid, out);
    }
    if (*predict_cmd) return cmd_predict(predict_args, out);
    if (*ensemble) return cmd_ensemble(ensemble_args, out);
    if (*evaluate) return cmd_evaluate(eval_args, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace pclft
