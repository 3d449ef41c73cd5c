#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "hyperseq/model.hpp"

namespace hyperseq {

struct SessionRecord {
  std::string user_id;
  std::uint64_t session_index = 0;
  Session states;

  friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

struct Dataset {
  std::vector<SessionRecord> sessions;
  std::set<StateLabel> label_universe;

  /// Distinct user ids in ascending order.
  std::vector<std::string> users() const;
  std::vector<Session> state_sequences() const;
  std::vector<StateLabel> labels() const { return {label_universe.begin(), label_universe.end()}; }
  /// Sessions of one user, in dataset order.
  Dataset for_user(const std::string& user) const;
  /// Throws kValidation on duplicate (user, session) keys, empty sessions, or labels outside the universe.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct SplitResult {
  Dataset train;
  Dataset test;
};

enum class ExclusionMode {
  kSplice,        // drop excluded states and join the neighbours
  kBreakSession,  // cut the session at each excluded state
};

// JSON lines: {"user": string, "session": integer, "states": [string, ...]}
Dataset load_sessions(std::istream& in, const std::set<StateLabel>& excluded = {},
                      ExclusionMode mode = ExclusionMode::kSplice);
Dataset load_sessions(const std::filesystem::path& path, const std::set<StateLabel>& excluded = {},
                      ExclusionMode mode = ExclusionMode::kSplice);
void save_sessions(const Dataset& d, std::ostream& out);
void save_sessions(const Dataset& d, const std::filesystem::path& path);

/// Order-1 Markov chain over labels.
struct MarkovSpec {
  std::vector<StateLabel> labels;
  Eigen::VectorXd initial;
  Eigen::MatrixXd transition;  // row-stochastic, rows/cols in label order

  void validate() const;
  static MarkovSpec uniform(std::vector<StateLabel> labels);
};

// JSON object: {"labels": [...], "initial": [...], "transition": [[...], ...]}
MarkovSpec load_markov_spec(std::istream& in);
MarkovSpec load_markov_spec(const std::filesystem::path& path);
void save_markov_spec(const MarkovSpec& spec, std::ostream& out);

/// Transition matrix of user `user_index`: (1 - rho) * T + rho * P_u, where
/// P_u is a random permutation matrix (a personal successor for every state).
Eigen::MatrixXd personal_transition(const MarkovSpec& spec, std::size_t user_index, std::uint64_t seed,
                                    double perturbation);

/// Synthetic dataset; users are named "user00", "user01", ... and sessions
/// are numbered from 0. Fully determined by the arguments.
Dataset generate_synthetic(const MarkovSpec& spec, std::size_t users, std::size_t sessions_per_user,
                           std::size_t session_len, std::uint64_t seed, double per_user_perturbation);

/// Whole users to train or test; ceil(fraction * users) train users.
SplitResult split_disjoint(const Dataset& d, double train_user_fraction, std::uint64_t seed);

/// Per user, floor(fraction * n_u) sessions (clamped to [1, n_u - 1]) train.
/// `chronological` takes the lowest session indices instead of a seeded shuffle.
SplitResult split_overlapping(const Dataset& d, double train_fraction, std::uint64_t seed,
                              bool chronological = false);

/// One fold per user in ascending user order; that user's sessions are the test set.
std::vector<SplitResult> folds_leave_one_user_out(const Dataset& d);

}  // namespace hyperseq
