// hyperseq: generate synthetic sessions, train, predict, evaluate and sweep.
//
// Exit codes: 0 success, 1 validation/usage, 2 data format, 3 internal.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hyperseq/dataio.hpp"
#include "hyperseq/eval.hpp"
#include "hyperseq/model.hpp"
#include "hyperseq/sweep.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace hyperseq;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kDataFormat = 2, kInternal = 3 };

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse:
    case ErrorCode::kFormat:
    case ErrorCode::kEmptyDataset:
    case ErrorCode::kEmptyTraining:
    case ErrorCode::kIo:
      return kDataFormat;
    default:
      return kUsage;
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_bool(const std::string& s) {
  if (s == "1" || s == "true" || s == "on" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "off" || s == "no") return false;
  throw Error(ErrorCode::kValidation, "expected a boolean, got '" + s + "'");
}

std::string json_scalar(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

// Applies a JSON config file to options the command line left unset.
// Top-level keys apply to the active subcommand; an object under a
// subcommand's name applies only to it.
void apply_config(CLI::App& root, CLI::App& sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kParse, "config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kParse, "config " + path + " must be a JSON object");

  auto known_elsewhere = [&](const std::string& key) {
    for (const CLI::App* other : root.get_subcommands({})) {
      if (other->get_name() == key || other->get_option_no_throw("--" + key) != nullptr) return true;
    }
    return false;
  };
  auto apply = [&](const nlohmann::json& obj, bool strict) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) continue;
      CLI::Option* opt = sub.get_option_no_throw("--" + key);
      if (opt == nullptr) {
        if (strict && !known_elsewhere(key)) throw Error(ErrorCode::kValidation, "unknown config key '" + key + "'");
        continue;
      }
      if (opt->count() > 0) continue;  // command line wins
      if (value.is_array()) {
        std::vector<std::string> items;
        for (const auto& v : value) items.push_back(json_scalar(v));
        opt->add_result(items);
      } else {
        opt->add_result(json_scalar(value));
      }
      opt->run_callback();
    }
  };
  if (j.contains(sub.get_name()) && j[sub.get_name()].is_object()) apply(j[sub.get_name()], true);
  apply(j, true);
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorCode::kValidation, std::string("missing required flag ") + flag);
}

struct ModelFlags {
  ModelConfig cfg;
  void add(CLI::App& app) {
    app.add_option("--dim", cfg.dim, "Hypervector dimension D")->capture_default_str();
    app.add_option("--ngram", cfg.n, "n-gram length n (prefix is n-1)")->capture_default_str();
    app.add_option("--shift", cfg.shift, "Cyclic shift per position")->capture_default_str();
    app.add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
    app.add_flag("--adaptive", cfg.adaptive, "Enable the adaptive memory");
    app.add_option("--adapt-weight", cfg.adapt_weight, "Weight of each adaptation event")->capture_default_str();
    app.add_option("--entry-bits", cfg.entry_bits, "Bits per accumulator entry (8, 16, 32)")->capture_default_str();
  }
};

struct DataFlags {
  std::string path;
  std::vector<std::string> exclude;
  std::string exclude_mode = "splice";
  void add(CLI::App& app) {
    app.add_option("--data", path, "Session dataset (JSON lines)");
    app.add_option("--exclude", exclude, "Labels to remove")->delimiter(',');
    app.add_option("--exclude-mode", exclude_mode, "splice | break-session")->capture_default_str();
  }
  Dataset load() const {
    require(path, "--data");
    ExclusionMode mode;
    if (exclude_mode == "splice") {
      mode = ExclusionMode::kSplice;
    } else if (exclude_mode == "break-session") {
      mode = ExclusionMode::kBreakSession;
    } else {
      throw Error(ErrorCode::kValidation, "--exclude-mode must be splice or break-session");
    }
    return load_sessions(fs::path(path), std::set<StateLabel>(exclude.begin(), exclude.end()), mode);
  }
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << std::fixed << v;
  return os.str();
}

// gen -------------------------------------------------------------------------

struct GenCommand {
  std::string spec_path;
  std::size_t labels = 9;
  std::size_t users = 21;
  std::size_t sessions = 5;
  std::size_t length = 100;
  std::uint64_t seed = 0;
  double perturbation = 0.0;
  std::string out;

  void add(CLI::App& app) {
    app.add_option("--spec", spec_path, "Markov spec JSON (default: uniform chain)");
    app.add_option("--labels", labels, "Label count of the default uniform chain")->capture_default_str();
    app.add_option("--users", users, "Number of users")->capture_default_str();
    app.add_option("--sessions", sessions, "Sessions per user")->capture_default_str();
    app.add_option("--length", length, "States per session")->capture_default_str();
    app.add_option("--seed", seed, "Master seed")->capture_default_str();
    app.add_option("--perturbation", perturbation, "Per-user perturbation in [0, 1]")->capture_default_str();
    app.add_option("--out", out, "Output dataset path");
  }

  int run() const {
    require(out, "--out");
    MarkovSpec spec;
    if (spec_path.empty()) {
      if (labels == 0) throw Error(ErrorCode::kValidation, "--labels must be >= 1");
      std::vector<StateLabel> names;
      for (std::size_t i = 0; i < labels; ++i) names.push_back("state" + std::to_string(i));
      spec = MarkovSpec::uniform(std::move(names));
    } else {
      spec = load_markov_spec(fs::path(spec_path));
    }
    const Dataset d = generate_synthetic(spec, users, sessions, length, seed, perturbation);
    save_sessions(d, fs::path(out));
    std::cout << "wrote " << d.sessions.size() << " sessions for " << d.users().size() << " users to " << out
              << '\n';
    return kOk;
  }
};

// train -----------------------------------------------------------------------

struct TrainCommand {
  DataFlags data;
  ModelFlags model;
  std::string out;
  bool quantize = false;

  void add(CLI::App& app) {
    data.add(app);
    model.add(app);
    app.add_option("--out", out, "Output model path");
    app.add_flag("--quantize", quantize, "Store memories as 1-bit signs (lossy)");
  }

  int run() const {
    require(out, "--out");
    model.cfg.validate();
    const Dataset d = data.load();
    const auto start = std::chrono::steady_clock::now();
    const Codebook cb = build_codebook(d.labels(), model.cfg.dim, model.cfg.seed);
    const auto sessions = d.state_sequences();
    const Model m = train(sessions, model.cfg, cb);
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    save_model(m, fs::path(out), SaveOptions{quantize});
    std::cout << "train_ngram_count " << m.train_ngram_count() << '\n'
              << "labels " << cb.size() << '\n'
              << "wall_time_ms " << ms << '\n';
    return kOk;
  }
};

// predict ---------------------------------------------------------------------

struct PredictCommand {
  std::string model_path;
  std::string prefix;

  void add(CLI::App& app) {
    app.add_option("--model", model_path, "Model file");
    app.add_option("--prefix", prefix, "Comma-separated prefix of n-1 labels");
  }

  int run() const {
    require(model_path, "--model");
    require(prefix, "--prefix");
    const Model m = load_model(fs::path(model_path));
    const auto labels = split_list(prefix);
    const auto expected = static_cast<std::size_t>(m.config().n - 1);
    if (labels.size() != expected) {
      throw Error(ErrorCode::kWrongArity, "--prefix needs exactly n-1 = " + std::to_string(expected) +
                                              " labels, got " + std::to_string(labels.size()));
    }
    const QueryResult r = m.predict_next(labels);
    std::vector<std::pair<StateLabel, double>> ranked(r.scores.begin(), r.scores.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::cout << r.predicted << '\n';
    for (const auto& [label, score] : ranked) std::cout << label << '\t' << fmt(score) << '\n';
    return kOk;
  }
};

// eval ------------------------------------------------------------------------

void write_events(const fs::path& path, const std::vector<PredictionEvent>& events) {
  std::ofstream out(path, std::ios::trunc);
  out << "user,session,position,predicted,actual,correct,unseen_prefix\n";
  for (const auto& e : events) {
    out << e.user_id << ',' << e.session_index << ',' << e.position << ',' << e.predicted << ',' << e.actual << ','
        << (e.correct ? 1 : 0) << ',' << (e.unseen_prefix ? 1 : 0) << '\n';
  }
}

struct EvalCommand {
  DataFlags data;
  ModelFlags model;
  std::string model_path;
  std::string strategy;
  std::size_t window = 30;
  double user_fraction = 18.0 / 21.0;
  double session_fraction = 0.8;
  bool chronological = false;
  std::string out;

  void add(CLI::App& app) {
    data.add(app);
    model.add(app);
    app.add_option("--model", model_path, "Evaluate this trained model on the whole dataset");
    app.add_option("--strategy", strategy, "disjoint | overlapping | kfold (train per split)");
    app.add_option("--window", window, "Sliding-window size for adaptive series")->capture_default_str();
    app.add_option("--user-fraction", user_fraction, "Disjoint split: fraction of users in train")
        ->capture_default_str();
    app.add_option("--session-fraction", session_fraction, "Overlapping split: fraction of sessions in train")
        ->capture_default_str();
    app.add_flag("--chronological", chronological, "Overlapping split keeps the earliest sessions for training");
    app.add_option("--out", out, "Output directory");
  }

  int run() const {
    require(out, "--out");
    if (window < 1) throw Error(ErrorCode::kValidation, "--window must be >= 1");
    const Dataset d = data.load();
    fs::create_directories(out);
    std::vector<FoldResult> folds;
    EvalReport report;
    if (!model_path.empty()) {
      if (!strategy.empty()) throw Error(ErrorCode::kValidation, "--model and --strategy are mutually exclusive");
      const Model m = load_model(fs::path(model_path));
      report = evaluate(m, d, model.cfg.adaptive);
      FoldResult f{"all", d.users(), report.events.size(), report.correct_count(), report.skipped_sessions,
                   report.overall_accuracy};
      folds.push_back(f);
    } else {
      model.cfg.validate();
      StrategyParams params{user_fraction, session_fraction, chronological};
      StrategyReport r = run_strategy(d, model.cfg, parse_strategy(strategy.empty() ? "disjoint" : strategy), params);
      report = std::move(r.report);
      folds = std::move(r.folds);
    }

    std::ofstream csv(fs::path(out) / "eval.csv", std::ios::trunc);
    csv << "fold,test_users,events,correct,accuracy,skipped_sessions\n";
    for (const auto& f : folds) {
      std::string users;
      for (const auto& u : f.test_users) users += (users.empty() ? "" : ";") + u;
      csv << f.label << ',' << users << ',' << f.events << ',' << f.correct << ',' << fmt(f.accuracy) << ','
          << f.skipped_sessions << '\n';
    }
    if (report.fold_mean_accuracy) {
      csv << "mean,," << report.events.size() << ',' << report.correct_count() << ','
          << fmt(*report.fold_mean_accuracy) << ',' << report.skipped_sessions << '\n';
    }
    write_events(fs::path(out) / "events.csv", report.events);
    const bool adaptive = report.config.adaptive && (model_path.empty() || model.cfg.adaptive);
    if (adaptive) {
      std::ofstream series(fs::path(out) / "series.json", std::ios::trunc);
      series << series_to_json(sliding_window_accuracy(report.events, window)) << '\n';
    }

    std::cout << "events " << report.events.size() << '\n'
              << "overall_accuracy " << fmt(report.overall_accuracy) << '\n';
    if (report.fold_mean_accuracy) std::cout << "fold_mean_accuracy " << fmt(*report.fold_mean_accuracy) << '\n';
    std::cout << "skipped_sessions " << report.skipped_sessions << '\n';
    return kOk;
  }
};

// sweep -----------------------------------------------------------------------

struct SweepCommand {
  DataFlags data;
  std::vector<Index> dims{1000, 5000, 10000, 20000};
  std::vector<int> ngrams{3, 5, 7, 9};
  std::vector<int> shifts{2, 4, 6};
  std::vector<std::string> adaptive{"false", "true"};
  std::vector<std::string> strategies{"disjoint", "overlapping", "kfold"};
  std::vector<std::uint64_t> seeds{0};
  SweepOptions opts;
  std::string out;

  void add(CLI::App& app) {
    data.add(app);
    app.add_option("--dim", dims, "Dimensions to sweep")->delimiter(',')->capture_default_str();
    app.add_option("--ngram", ngrams, "n-gram lengths to sweep")->delimiter(',')->capture_default_str();
    app.add_option("--shift", shifts, "Shifts to sweep")->delimiter(',')->capture_default_str();
    app.add_option("--adaptive", adaptive, "Adaptive settings to sweep (false,true)")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--strategy", strategies, "Split strategies to sweep")->delimiter(',')->capture_default_str();
    app.add_option("--seed", seeds, "Seeds to sweep")->delimiter(',')->capture_default_str();
    app.add_option("--adapt-weight", opts.adapt_weight, "Weight of each adaptation event")->capture_default_str();
    app.add_option("--entry-bits", opts.entry_bits, "Bits per accumulator entry")->capture_default_str();
    app.add_option("--window", opts.window, "Sliding-window size for adaptive series")->capture_default_str();
    app.add_option("--jobs", opts.jobs, "Cells evaluated in parallel")->capture_default_str();
    app.add_option("--out", out, "Output directory");
  }

  int run() {
    require(out, "--out");
    SweepGrid grid;
    grid.dims = dims;
    grid.ngram_lengths = ngrams;
    grid.shifts = shifts;
    grid.seeds = seeds;
    grid.adaptive.clear();
    for (const auto& a : adaptive) grid.adaptive.push_back(parse_bool(a));
    grid.strategies.clear();
    for (const auto& s : strategies) grid.strategies.push_back(parse_strategy(s));
    grid.validate();
    if (opts.jobs < 1) throw Error(ErrorCode::kValidation, "--jobs must be >= 1");
    const Dataset d = data.load();
    const auto start = std::chrono::steady_clock::now();
    const SweepSummary s = run_sweep(grid, d, fs::path(out), opts);
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    std::cout << "cells " << grid.cell_count() << '\n'
              << "computed " << s.computed << '\n'
              << "resumed " << s.resumed << '\n'
              << "skipped " << s.skipped << '\n'
              << "wall_time_ms " << ms << '\n';
    return kOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hyperseq: hyperdimensional next-state prediction"};
  app.require_subcommand(1);

  GenCommand gen;
  TrainCommand train_cmd;
  PredictCommand predict;
  EvalCommand eval;
  SweepCommand sweep;
  std::map<std::string, std::string> config_paths;

  auto* gen_app = app.add_subcommand("gen", "Generate a synthetic session dataset");
  auto* train_app = app.add_subcommand("train", "Train a model on a session dataset");
  auto* predict_app = app.add_subcommand("predict", "Predict the next state for a prefix");
  auto* eval_app = app.add_subcommand("eval", "Evaluate a model or a split strategy");
  auto* sweep_app = app.add_subcommand("sweep", "Run a hyperparameter grid");
  gen.add(*gen_app);
  train_cmd.add(*train_app);
  predict.add(*predict_app);
  eval.add(*eval_app);
  sweep.add(*sweep_app);
  for (CLI::App* sub : {gen_app, train_app, predict_app, eval_app, sweep_app}) {
    sub->add_option("--config", config_paths[sub->get_name()], "JSON config file; flags override it");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (const auto& path = config_paths[sub->get_name()]; !path.empty()) apply_config(app, *sub, path);
    if (sub == gen_app) return gen.run();
    if (sub == train_app) return train_cmd.run();
    if (sub == predict_app) return predict.run();
    if (sub == eval_app) return eval.run();
    return sweep.run();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}
