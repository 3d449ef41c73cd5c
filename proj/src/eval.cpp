#include "hyperseq/eval.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

namespace hyperseq {

std::size_t EvalReport::correct_count() const {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [](const auto& e) { return e.correct; }));
}

// Oracle --------------------------------------------------------------------

std::uint64_t OracleModel::total_count() const {
  std::uint64_t total = 0;
  for (const auto& [prefix, next] : counts) {
    for (const auto& [label, c] : next) total += c;
  }
  return total;
}

OracleModel build_oracle(std::span<const Session> sessions, int n) {
  OracleModel o;
  o.n = n;
  const auto len = static_cast<std::size_t>(n);
  for (const auto& s : sessions) {
    for (std::size_t i = 0; i + len <= s.size(); ++i) {
      Prefix prefix(s.begin() + static_cast<std::ptrdiff_t>(i), s.begin() + static_cast<std::ptrdiff_t>(i + len - 1));
      ++o.counts[std::move(prefix)][s[i + len - 1]];
    }
  }
  return o;
}

OracleModel build_oracle(const Dataset& train, int n) {
  const auto sessions = train.state_sequences();
  return build_oracle(sessions, n);
}

namespace {

struct TopTwo {
  StateLabel best;
  std::uint64_t best_count = 0;
  std::uint64_t runner_up = 0;
};

// std::map iterates labels in ascending order, so strict > keeps the smallest label on ties.
TopTwo top_two(const std::map<StateLabel, std::uint64_t>& next) {
  TopTwo t;
  for (const auto& [label, c] : next) {
    if (t.best.empty() || c > t.best_count) {
      if (!t.best.empty()) t.runner_up = t.best_count;
      t.best = label;
      t.best_count = c;
    } else if (c > t.runner_up) {
      t.runner_up = c;
    }
  }
  return t;
}

}  // namespace

std::optional<StateLabel> oracle_predict(const OracleModel& o, const Prefix& prefix) {
  const auto it = o.counts.find(prefix);
  if (it == o.counts.end() || it->second.empty()) return std::nullopt;
  return top_two(it->second).best;
}

AgreementReport oracle_agreement(const Model& m, const OracleModel& o, std::span<const Prefix> prefixes,
                                 std::uint64_t margin) {
  AgreementReport report;
  for (const auto& prefix : prefixes) {
    const auto it = o.counts.find(prefix);
    if (it == o.counts.end()) continue;
    const TopTwo t = top_two(it->second);
    if (t.best_count - t.runner_up < margin) continue;
    ++report.considered;
    const QueryResult q = m.predict_next(prefix);
    if (q.predicted == t.best) {
      ++report.agreed;
    } else {
      report.disagreements.push_back({prefix, t.best, q.predicted, t.best_count - t.runner_up});
    }
  }
  return report;
}

// Evaluation ----------------------------------------------------------------

EvalReport evaluate(const Model& m, const Dataset& test, bool adaptive_enabled, const EvalOptions& opts) {
  if (adaptive_enabled && !m.config().adaptive) {
    throw Error(ErrorCode::kAdaptationDisabled, "adaptive evaluation requested on a non-adaptive model");
  }
  EvalReport report;
  report.config = m.config();
  const auto n = static_cast<std::size_t>(m.config().n);
  const Codebook& cb = m.codebook();

  for (const auto& user : test.users()) {
    Model work = m;  // per-user adaptive memory
    std::set<Prefix> adapted;
    std::size_t user_events = 0;
    std::size_t user_correct = 0;
    for (const auto& session : test.sessions) {
      if (session.user_id != user) continue;
      const auto& states = session.states;
      for (std::size_t i = 0; i < states.size(); ++i) detail::lookup_at(cb, states, i);
      if (states.size() < n) {
        ++report.skipped_sessions;
        continue;
      }
      for (std::size_t pos = n - 1; pos < states.size(); ++pos) {
        const std::span<const StateLabel> window(states.data() + (pos + 1 - n), n);
        const auto prefix = window.first(n - 1);
        const std::vector<double> scores = score_keys(cb, work.query_frequency(prefix));
        const auto best = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());

        PredictionEvent e;
        e.user_id = user;
        e.session_index = session.session_index;
        e.position = pos;
        e.predicted = cb.labels()[best];
        e.actual = states[pos];
        e.correct = e.predicted == e.actual;
        Prefix key(prefix.begin(), prefix.end());
        e.unseen_prefix = !(opts.training != nullptr && opts.training->seen(key)) && !adapted.contains(key);
        user_correct += e.correct ? 1 : 0;
        ++user_events;
        report.events.push_back(std::move(e));

        if (adaptive_enabled) {
          work.adapt(window);
          adapted.insert(std::move(key));
        }
      }
    }
    if (user_events > 0) {
      report.per_user_accuracy[user] = static_cast<double>(user_correct) / static_cast<double>(user_events);
    }
  }
  report.overall_accuracy = report.events.empty()
                                ? 0.0
                                : static_cast<double>(report.correct_count()) / static_cast<double>(report.events.size());
  return report;
}

std::vector<UserSeries> sliding_window_accuracy(std::span<const PredictionEvent> events, std::size_t window) {
  if (window < 1) throw Error(ErrorCode::kValidation, "sliding window must be >= 1");
  std::vector<UserSeries> out;
  std::map<std::string, std::vector<bool>> streams;
  for (const auto& e : events) {
    auto [it, inserted] = streams.try_emplace(e.user_id);
    if (inserted) out.push_back({e.user_id, {}});
    it->second.push_back(e.correct);
  }
  for (auto& series : out) {
    const auto& stream = streams.at(series.user_id);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < stream.size(); ++i) {
      hits += stream[i] ? 1 : 0;
      if (i >= window) hits -= stream[i - window] ? 1 : 0;
      if (i + 1 >= window) series.points.emplace_back(i, static_cast<double>(hits) / static_cast<double>(window));
    }
  }
  return out;
}

std::string series_to_json(std::span<const UserSeries> series) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : series) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& [pos, acc] : s.points) points.push_back({pos, acc});
    out.push_back({{"user", s.user_id}, {"series", points}});
  }
  return out.dump();
}

double bayes_optimal_accuracy(const MarkovSpec& spec) {
  spec.validate();
  const Index k = spec.transition.rows();
  // The lazy chain (T + I) / 2 has the same stationary distribution and is aperiodic.
  const Eigen::MatrixXd lazy = 0.5 * (spec.transition + Eigen::MatrixXd::Identity(k, k));
  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(k, 1.0 / static_cast<double>(k));
  bool converged = false;
  for (int step = 0; step < 1'000'000; ++step) {
    Eigen::RowVectorXd next = pi * lazy;
    next /= next.sum();
    const double change = (next - pi).cwiseAbs().sum();
    pi = std::move(next);
    if (change < 1e-12) {
      converged = true;
      break;
    }
  }
  if (!converged) throw Error(ErrorCode::kConvergence, "stationary distribution did not converge");
  return (pi.transpose().array() * spec.transition.rowwise().maxCoeff().array()).sum();
}

// Strategies ------------------------------------------------------------------

const char* to_string(SplitStrategy s) noexcept {
  switch (s) {
    case SplitStrategy::kDisjoint: return "disjoint";
    case SplitStrategy::kOverlapping: return "overlapping";
    case SplitStrategy::kLeaveOneUserOut: return "kfold";
  }
  return "?";
}

SplitStrategy parse_strategy(const std::string& name) {
  if (name == "disjoint") return SplitStrategy::kDisjoint;
  if (name == "overlapping") return SplitStrategy::kOverlapping;
  if (name == "kfold" || name == "loo") return SplitStrategy::kLeaveOneUserOut;
  throw Error(ErrorCode::kValidation, "unknown split strategy '" + name + "' (disjoint | overlapping | kfold)");
}

namespace {

FoldResult summarize(std::string label, const Dataset& test, const EvalReport& r) {
  FoldResult f;
  f.label = std::move(label);
  f.test_users = test.users();
  f.events = r.events.size();
  f.correct = r.correct_count();
  f.skipped_sessions = r.skipped_sessions;
  f.accuracy = r.overall_accuracy;
  return f;
}

void append(EvalReport& into, EvalReport&& part) {
  for (auto& [user, acc] : part.per_user_accuracy) into.per_user_accuracy[user] = acc;
  into.skipped_sessions += part.skipped_sessions;
  std::move(part.events.begin(), part.events.end(), std::back_inserter(into.events));
}

}  // namespace

StrategyReport run_strategy(const Dataset& data, const ModelConfig& cfg, SplitStrategy strategy,
                            const StrategyParams& params) {
  cfg.validate();
  const auto labels = data.labels();
  const Codebook cb = build_codebook(labels, cfg.dim, cfg.seed);
  StrategyReport out;
  out.report.config = cfg;

  if (strategy != SplitStrategy::kLeaveOneUserOut) {
    const SplitResult split = strategy == SplitStrategy::kDisjoint
                                  ? split_disjoint(data, params.disjoint_train_fraction, cfg.seed)
                                  : split_overlapping(data, params.overlapping_train_fraction, cfg.seed,
                                                      params.chronological);
    const auto sessions = split.train.state_sequences();
    const Model m = train(sessions, cfg, cb);
    const OracleModel seen = build_oracle(sessions, cfg.n);
    out.report = evaluate(m, split.test, cfg.adaptive, {&seen});
    out.folds.push_back(summarize("all", split.test, out.report));
    return out;
  }

  // Leave-one-user-out: fold memory = total - held-out user's partial sum.
  const auto users = data.users();
  if (users.size() < 2) throw Error(ErrorCode::kInsufficientUsers, "leave-one-user-out needs >= 2 users");
  ModelConfig wide = cfg;
  wide.entry_bits = 32;
  std::vector<PartialMemory> partials;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> total = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>::Zero(cfg.dim);
  std::uint64_t total_windows = 0;
  for (const auto& user : users) {
    const auto sessions = data.for_user(user).state_sequences();
    partials.push_back(encode_sessions(sessions, wide, cb));
    total += partials.back().sum.values().cast<std::int64_t>();
    total_windows += partials.back().windows;
  }
  double fold_sum = 0.0;
  for (std::size_t u = 0; u < users.size(); ++u) {
    const Dataset test = data.for_user(users[u]);
    Dataset train_part;
    train_part.label_universe = data.label_universe;
    for (const auto& s : data.sessions) {
      if (s.user_id != users[u]) train_part.sessions.push_back(s);
    }
    const std::uint64_t windows = total_windows - partials[u].windows;
    if (windows == 0) throw Error(ErrorCode::kEmptyTraining, "fold " + users[u] + " has no training windows");
    const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> fold = total - partials[u].sum.values().cast<std::int64_t>();
    Accumulator base = Accumulator::from_values(std::span(fold.data(), fold.size()), cfg.entry_bits);
    const Model m = Model::from_parts(cfg, cb, std::move(base), Accumulator::zeros(cfg.dim, cfg.entry_bits),
                                      windows, 0);
    const OracleModel seen = build_oracle(train_part, cfg.n);
    EvalReport r = evaluate(m, test, cfg.adaptive, {&seen});
    out.folds.push_back(summarize(users[u], test, r));
    fold_sum += r.overall_accuracy;
    append(out.report, std::move(r));
  }
  out.report.fold_mean_accuracy = fold_sum / static_cast<double>(users.size());
  out.report.overall_accuracy =
      out.report.events.empty()
          ? 0.0
          : static_cast<double>(out.report.correct_count()) / static_cast<double>(out.report.events.size());
  return out;
}

}  // namespace hyperseq
