#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperseq/dataio.hpp"
#include "hyperseq/model.hpp"

namespace hyperseq {

struct PredictionEvent {
  std::string user_id;
  std::uint64_t session_index = 0;
  std::size_t position = 0;  // index of the predicted state within its session
  StateLabel predicted;
  StateLabel actual;
  bool correct = false;
  bool unseen_prefix = false;

  friend bool operator==(const PredictionEvent&, const PredictionEvent&) = default;
};

struct EvalReport {
  double overall_accuracy = 0.0;
  std::map<std::string, double> per_user_accuracy;
  std::optional<double> fold_mean_accuracy;  // leave-one-user-out only
  std::vector<PredictionEvent> events;
  std::size_t skipped_sessions = 0;  // shorter than n
  ModelConfig config;

  std::size_t correct_count() const;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Counting oracle ----------------------------------------------------------

using Prefix = std::vector<StateLabel>;

/// Exact continuation counts of every training n-window.
struct OracleModel {
  int n = 0;
  std::map<Prefix, std::map<StateLabel, std::uint64_t>> counts;

  std::uint64_t total_count() const;
  bool seen(const Prefix& prefix) const { return counts.contains(prefix); }
};

OracleModel build_oracle(const Dataset& train, int n);
OracleModel build_oracle(std::span<const Session> sessions, int n);

/// Count-argmax continuation; ties go to the smallest label; nullopt if unseen.
std::optional<StateLabel> oracle_predict(const OracleModel& o, const Prefix& prefix);

struct Disagreement {
  Prefix prefix;
  StateLabel oracle;
  StateLabel predicted;
  std::uint64_t count_gap = 0;  // oracle top count minus runner-up count
};

struct AgreementReport {
  std::size_t considered = 0;  // prefixes passing the margin filter
  std::size_t agreed = 0;
  std::vector<Disagreement> disagreements;

  double fraction() const { return considered == 0 ? 1.0 : static_cast<double>(agreed) / considered; }
};

/// Compares predict_next with the oracle on prefixes whose top count beats
/// the runner-up by at least `margin`.
AgreementReport oracle_agreement(const Model& m, const OracleModel& o, std::span<const Prefix> prefixes,
                                 std::uint64_t margin = 2);

// Evaluation ---------------------------------------------------------------

struct EvalOptions {
  /// Training prefixes for the unseen_prefix flag; when null only prefixes
  /// adapted on so far count as seen.
  const OracleModel* training = nullptr;
};

/// Test-then-train evaluation. For every test session, positions n-1..end
/// are predicted from their (n-1)-prefix; with `adaptive_enabled` the true
/// window is adapted on after it is scored. Each user starts from the
/// model's adaptive state as given.
EvalReport evaluate(const Model& m, const Dataset& test, bool adaptive_enabled, const EvalOptions& opts = {});

struct UserSeries {
  std::string user_id;
  std::vector<std::pair<std::size_t, double>> points;  // (event index, window accuracy)

  friend bool operator==(const UserSeries&, const UserSeries&) = default;
};

/// Per-user moving accuracy over `window` consecutive events. Users keep
/// the order of first appearance; users with fewer events get an empty series.
std::vector<UserSeries> sliding_window_accuracy(std::span<const PredictionEvent> events, std::size_t window);

std::string series_to_json(std::span<const UserSeries> series);

/// Sum over s of pi(s) * max_t T[s, t], pi the stationary distribution.
double bayes_optimal_accuracy(const MarkovSpec& spec);

// Split strategies -----------------------------------------------------------

enum class SplitStrategy { kDisjoint, kOverlapping, kLeaveOneUserOut };

const char* to_string(SplitStrategy s) noexcept;
SplitStrategy parse_strategy(const std::string& name);

struct StrategyParams {
  double disjoint_train_fraction = 18.0 / 21.0;
  double overlapping_train_fraction = 0.8;
  bool chronological = false;
};

struct FoldResult {
  std::string label;  // "all" or the held-out user id
  std::vector<std::string> test_users;
  std::size_t events = 0;
  std::size_t correct = 0;
  std::size_t skipped_sessions = 0;
  double accuracy = 0.0;
};

struct StrategyReport {
  EvalReport report;             // all events across folds
  std::vector<FoldResult> folds;
};

/// Splits `data` (seeded by cfg.seed), builds the codebook over the data's
/// label universe, trains and evaluates with adaptation iff cfg.adaptive.
/// Leave-one-user-out folds reuse per-user partial memories: each training
/// window is encoded once for the whole cross-validation.
StrategyReport run_strategy(const Dataset& data, const ModelConfig& cfg, SplitStrategy strategy,
                            const StrategyParams& params = {});

}  // namespace hyperseq
