#include "hyperseq/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace hyperseq {

using nlohmann::json;

std::vector<std::string> Dataset::users() const {
  std::set<std::string> ids;
  for (const auto& s : sessions) ids.insert(s.user_id);
  return {ids.begin(), ids.end()};
}

std::vector<Session> Dataset::state_sequences() const {
  std::vector<Session> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) out.push_back(s.states);
  return out;
}

Dataset Dataset::for_user(const std::string& user) const {
  Dataset out;
  out.label_universe = label_universe;
  for (const auto& s : sessions) {
    if (s.user_id == user) out.sessions.push_back(s);
  }
  return out;
}

void Dataset::validate() const {
  std::set<std::pair<std::string, std::uint64_t>> keys;
  for (const auto& s : sessions) {
    if (s.states.empty()) throw Error(ErrorCode::kValidation, "empty session for user " + s.user_id);
    if (!keys.emplace(s.user_id, s.session_index).second) {
      throw Error(ErrorCode::kValidation,
                  "duplicate session " + s.user_id + "/" + std::to_string(s.session_index));
    }
    for (const auto& state : s.states) {
      if (!label_universe.contains(state)) throw Error(ErrorCode::kValidation, "label outside universe: " + state);
    }
  }
}

// JSON lines --------------------------------------------------------------

Dataset load_sessions(std::istream& in, const std::set<StateLabel>& excluded, ExclusionMode mode) {
  Dataset d;
  std::map<std::string, std::uint64_t> next_piece;  // per-user renumbering in break mode
  std::set<std::pair<std::string, std::uint64_t>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    SessionRecord rec;
    try {
      const json j = json::parse(line);
      rec.user_id = j.at("user").get<std::string>();
      const auto index = j.at("session").get<std::int64_t>();
      if (index < 0) throw Error(ErrorCode::kParse, "negative session index");
      rec.session_index = static_cast<std::uint64_t>(index);
      rec.states = j.at("states").get<std::vector<std::string>>();
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.emplace(rec.user_id, rec.session_index).second) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": duplicate session " + rec.user_id + "/" +
                                         std::to_string(rec.session_index));
    }
    for (const auto& s : rec.states) {
      if (s.empty()) throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": empty state label");
    }

    std::vector<Session> pieces(1);
    for (auto& state : rec.states) {
      if (excluded.contains(state)) {
        if (mode == ExclusionMode::kBreakSession && !pieces.back().empty()) pieces.emplace_back();
        continue;
      }
      pieces.back().push_back(std::move(state));
    }
    if (mode == ExclusionMode::kSplice) {
      if (pieces.front().empty()) continue;
      rec.states = std::move(pieces.front());
      for (const auto& s : rec.states) d.label_universe.insert(s);
      d.sessions.push_back(std::move(rec));
      continue;
    }
    for (auto& piece : pieces) {
      if (piece.empty()) continue;
      SessionRecord part{rec.user_id, next_piece[rec.user_id]++, std::move(piece)};
      for (const auto& s : part.states) d.label_universe.insert(s);
      d.sessions.push_back(std::move(part));
    }
  }
  if (d.sessions.empty()) throw Error(ErrorCode::kEmptyDataset, "no sessions left after filtering");
  return d;
}

Dataset load_sessions(const std::filesystem::path& path, const std::set<StateLabel>& excluded,
                      ExclusionMode mode) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return load_sessions(in, excluded, mode);
}

void save_sessions(const Dataset& d, std::ostream& out) {
  for (const auto& s : d.sessions) {
    out << json{{"user", s.user_id}, {"session", s.session_index}, {"states", s.states}}.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing sessions");
}

void save_sessions(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  save_sessions(d, out);
}

// Markov spec -------------------------------------------------------------

void MarkovSpec::validate() const {
  const auto k = static_cast<Index>(labels.size());
  if (k == 0) throw Error(ErrorCode::kValidation, "markov spec has no labels");
  if (std::set<StateLabel>(labels.begin(), labels.end()).size() != labels.size()) {
    throw Error(ErrorCode::kValidation, "markov spec labels are not unique");
  }
  if (initial.size() != k) throw Error(ErrorCode::kValidation, "initial distribution has wrong length");
  if (transition.rows() != k || transition.cols() != k) {
    throw Error(ErrorCode::kValidation, "transition matrix must be square over the labels");
  }
  if ((initial.array() < 0.0).any() || std::abs(initial.sum() - 1.0) > 1e-9) {
    throw Error(ErrorCode::kValidation, "initial distribution must be non-negative and sum to 1");
  }
  for (Index r = 0; r < k; ++r) {
    if ((transition.row(r).array() < 0.0).any() || std::abs(transition.row(r).sum() - 1.0) > 1e-9) {
      throw Error(ErrorCode::kValidation, "transition row " + std::to_string(r) + " is not a distribution");
    }
  }
}

MarkovSpec MarkovSpec::uniform(std::vector<StateLabel> labels) {
  const auto k = static_cast<Index>(labels.size());
  MarkovSpec spec{std::move(labels), Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k)),
                  Eigen::MatrixXd::Constant(k, k, 1.0 / static_cast<double>(k))};
  spec.validate();
  return spec;
}

MarkovSpec load_markov_spec(std::istream& in) {
  MarkovSpec spec;
  try {
    const json j = json::parse(in);
    spec.labels = j.at("labels").get<std::vector<std::string>>();
    const auto initial = j.at("initial").get<std::vector<double>>();
    const auto rows = j.at("transition").get<std::vector<std::vector<double>>>();
    spec.initial = Eigen::Map<const Eigen::VectorXd>(initial.data(), static_cast<Index>(initial.size()));
    spec.transition.resize(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows[0].size()) throw Error(ErrorCode::kParse, "ragged transition matrix");
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        spec.transition(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
      }
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kParse, std::string("markov spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

MarkovSpec load_markov_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return load_markov_spec(in);
}

void save_markov_spec(const MarkovSpec& spec, std::ostream& out) {
  json rows = json::array();
  for (Index r = 0; r < spec.transition.rows(); ++r) {
    std::vector<double> row;
    for (Index c = 0; c < spec.transition.cols(); ++c) row.push_back(spec.transition(r, c));
    rows.push_back(row);
  }
  std::vector<double> initial(spec.initial.data(), spec.initial.data() + spec.initial.size());
  out << json{{"labels", spec.labels}, {"initial", initial}, {"transition", rows}}.dump(2) << '\n';
}

// Synthetic generator -----------------------------------------------------

Eigen::MatrixXd personal_transition(const MarkovSpec& spec, std::size_t user_index, std::uint64_t seed,
                                    double perturbation) {
  if (!(perturbation >= 0.0 && perturbation <= 1.0)) {
    throw Error(ErrorCode::kValidation, "per-user perturbation must lie in [0, 1]");
  }
  const auto k = static_cast<Index>(spec.labels.size());
  if (perturbation == 0.0) return spec.transition;
  std::vector<Index> successor(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) successor[static_cast<std::size_t>(i)] = i;
  SeedStream stream(seed, "synthetic/perturbation/" + std::to_string(user_index));
  stream.shuffle(successor);
  Eigen::MatrixXd personal = (1.0 - perturbation) * spec.transition;
  for (Index i = 0; i < k; ++i) personal(i, successor[static_cast<std::size_t>(i)]) += perturbation;
  return personal;
}

Dataset generate_synthetic(const MarkovSpec& spec, std::size_t users, std::size_t sessions_per_user,
                           std::size_t session_len, std::uint64_t seed, double per_user_perturbation) {
  spec.validate();
  if (users == 0) throw Error(ErrorCode::kValidation, "users must be >= 1");
  if (sessions_per_user == 0) throw Error(ErrorCode::kValidation, "sessions per user must be >= 1");
  if (session_len == 0) throw Error(ErrorCode::kValidation, "session length must be >= 1");
  if (!(per_user_perturbation >= 0.0 && per_user_perturbation <= 1.0)) {
    throw Error(ErrorCode::kValidation, "per-user perturbation must lie in [0, 1]");
  }
  const std::size_t width = std::max<std::size_t>(2, std::to_string(users - 1).size());

  Dataset d;
  d.label_universe.insert(spec.labels.begin(), spec.labels.end());
  for (std::size_t u = 0; u < users; ++u) {
    std::string id = std::to_string(u);
    id = "user" + std::string(width - id.size(), '0') + id;
    const Eigen::MatrixXd personal = personal_transition(spec, u, seed, per_user_perturbation);
    SeedStream stream(seed, "synthetic/sessions/" + std::to_string(u));
    for (std::size_t s = 0; s < sessions_per_user; ++s) {
      SessionRecord rec{id, s, {}};
      rec.states.reserve(session_len);
      std::size_t state = stream.categorical(spec.initial);
      rec.states.push_back(spec.labels[state]);
      for (std::size_t t = 1; t < session_len; ++t) {
        state = stream.categorical(personal.row(static_cast<Index>(state)));
        rec.states.push_back(spec.labels[state]);
      }
      d.sessions.push_back(std::move(rec));
    }
  }
  return d;
}

// Splits ------------------------------------------------------------------

namespace {

Dataset subset(const Dataset& d, const std::set<std::pair<std::string, std::uint64_t>>& keys, bool inside) {
  Dataset out;
  out.label_universe = d.label_universe;
  for (const auto& s : d.sessions) {
    if (keys.contains({s.user_id, s.session_index}) == inside) out.sessions.push_back(s);
  }
  return out;
}

std::size_t clamp_count(std::size_t k, std::size_t total) { return std::clamp<std::size_t>(k, 1, total - 1); }

void require_fraction(double f) {
  if (!(f > 0.0 && f < 1.0)) throw Error(ErrorCode::kValidation, "split fraction must lie in (0, 1)");
}

}  // namespace

SplitResult split_disjoint(const Dataset& d, double train_user_fraction, std::uint64_t seed) {
  require_fraction(train_user_fraction);
  std::vector<std::string> users = d.users();
  if (users.size() < 2) throw Error(ErrorCode::kInsufficientUsers, "disjoint split needs >= 2 users");
  SeedStream stream(seed, "split/disjoint");
  stream.shuffle(users);
  const double exact = train_user_fraction * static_cast<double>(users.size());
  const std::size_t k = clamp_count(static_cast<std::size_t>(std::ceil(exact - 1e-9)), users.size());
  const std::set<std::string> train_users(users.begin(), users.begin() + static_cast<std::ptrdiff_t>(k));
  std::set<std::pair<std::string, std::uint64_t>> keys;
  for (const auto& s : d.sessions) {
    if (train_users.contains(s.user_id)) keys.emplace(s.user_id, s.session_index);
  }
  return {subset(d, keys, true), subset(d, keys, false)};
}

SplitResult split_overlapping(const Dataset& d, double train_fraction, std::uint64_t seed, bool chronological) {
  require_fraction(train_fraction);
  std::map<std::string, std::vector<std::uint64_t>> per_user;
  for (const auto& s : d.sessions) per_user[s.user_id].push_back(s.session_index);
  std::set<std::pair<std::string, std::uint64_t>> keys;
  for (auto& [user, indices] : per_user) {
    if (indices.size() < 2) {
      throw Error(ErrorCode::kInsufficientSessions, "user " + user + " has fewer than 2 sessions");
    }
    std::sort(indices.begin(), indices.end());
    if (!chronological) {
      SeedStream stream(seed, "split/overlapping/" + user);
      stream.shuffle(indices);
    }
    const double exact = train_fraction * static_cast<double>(indices.size());
    const std::size_t k = clamp_count(static_cast<std::size_t>(std::floor(exact + 1e-9)), indices.size());
    for (std::size_t i = 0; i < k; ++i) keys.emplace(user, indices[i]);
  }
  return {subset(d, keys, true), subset(d, keys, false)};
}

std::vector<SplitResult> folds_leave_one_user_out(const Dataset& d) {
  const std::vector<std::string> users = d.users();
  if (users.size() < 2) throw Error(ErrorCode::kInsufficientUsers, "leave-one-user-out needs >= 2 users");
  std::vector<SplitResult> folds;
  folds.reserve(users.size());
  for (const auto& user : users) {
    SplitResult fold;
    fold.train.label_universe = d.label_universe;
    fold.test.label_universe = d.label_universe;
    for (const auto& s : d.sessions) (s.user_id == user ? fold.test : fold.train).sessions.push_back(s);
    folds.push_back(std::move(fold));
  }
  return folds;
}

}  // namespace hyperseq
