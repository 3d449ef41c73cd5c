#include <gtest/gtest.h>

#include "hyperseq/eval.hpp"
#include "test_support.hpp"

using namespace hyperseq;
using hyperseq::testing::make_labels;

namespace {

ModelConfig config(Index dim, int n, bool adaptive = false, std::uint64_t seed = 0) {
  ModelConfig cfg;
  cfg.dim = dim;
  cfg.n = n;
  cfg.shift = 2;
  cfg.adaptive = adaptive;
  cfg.seed = seed;
  return cfg;
}

MarkovSpec cycle3() {
  MarkovSpec spec;
  spec.labels = {"a", "b", "c"};
  spec.initial = Eigen::Vector3d(1, 0, 0);
  spec.transition = Eigen::Matrix3d::Zero();
  spec.transition(0, 1) = spec.transition(1, 2) = spec.transition(2, 0) = 1.0;
  return spec;
}

Model train_dataset(const Dataset& d, const ModelConfig& cfg) {
  return train(d.state_sequences(), cfg, build_codebook(d.labels(), cfg.dim, cfg.seed));
}

PredictionEvent ev(const std::string& user, bool correct) {
  PredictionEvent e;
  e.user_id = user;
  e.correct = correct;
  return e;
}

TEST(Evaluate, DeterministicChainIsPerfect) {
  const Dataset d = generate_synthetic(cycle3(), 2, 2, 12, 0, 0.0);
  const EvalReport r = evaluate(train_dataset(d, config(2000, 3)), d, false);
  EXPECT_EQ(r.overall_accuracy, 1.0);
  EXPECT_EQ(r.events.size(), 2u * 2u * 10u);
  EXPECT_EQ(r.per_user_accuracy.size(), 2u);
}

TEST(Evaluate, NoiseModelIsAtChance) {
  const MarkovSpec uniform = MarkovSpec::uniform(make_labels(9));
  const Dataset train_d = generate_synthetic(uniform, 5, 4, 100, 1, 0.0);
  const Dataset test_d = generate_synthetic(uniform, 3, 4, 100, 2, 0.0);
  const EvalReport r = evaluate(train_dataset(train_d, config(10000, 3)), test_d, false);
  ASSERT_GE(r.events.size(), 1000u);
  EXPECT_NEAR(r.overall_accuracy, 1.0 / 9.0, 0.05);
}

TEST(Evaluate, AdaptiveRequiresAdaptiveModel) {
  const Dataset d = generate_synthetic(cycle3(), 1, 1, 5, 0, 0.0);
  try {
    evaluate(train_dataset(d, config(256, 3)), d, true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAdaptationDisabled);
  }
}

TEST(Evaluate, IdempotentAndSkipsShortSessions) {
  Dataset d = generate_synthetic(MarkovSpec::uniform(make_labels(4)), 2, 3, 20, 3, 0.0);
  d.sessions.push_back({"user00", 99, {"s0", "s1"}});
  const Model m = train_dataset(d, config(1000, 3));
  const EvalReport a = evaluate(m, d, false);
  EXPECT_EQ(a, evaluate(m, d, false));
  EXPECT_EQ(a.skipped_sessions, 1u);
  EXPECT_EQ(a.events.size(), 2u * 3u * 18u);
}

TEST(Evaluate, TestThenTrainWithPerUserReset) {
  Dataset d;
  d.label_universe = {"a", "b", "c", "d"};
  d.sessions = {{"u1", 0, {"a", "b", "c", "a", "b", "c"}}, {"u2", 0, {"a", "b", "c", "a", "b", "c"}}};
  ModelConfig cfg = config(4000, 3, true);
  const std::vector<Session> unrelated{{"d", "d", "d"}};
  const Model empty_base = train(unrelated, cfg, build_codebook(d.labels(), cfg.dim, 0));
  const EvalReport r = evaluate(empty_base, d, true);
  ASSERT_EQ(r.events.size(), 8u);
  // Windows (a,b,c) (b,c,a) (c,a,b) are new on first sight; (a,b,c) repeats and is then known.
  for (std::size_t user = 0; user < 2; ++user) {
    const auto* e = &r.events[user * 4];
    EXPECT_TRUE(e[0].unseen_prefix);
    EXPECT_TRUE(e[2].unseen_prefix);
    EXPECT_FALSE(e[3].unseen_prefix);
    EXPECT_TRUE(e[3].correct);
    EXPECT_EQ(e[3].predicted, "c");
  }
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(r.events[i].correct, r.events[i + 4].correct);
  EXPECT_EQ(empty_base.adapt_event_count(), 0u);
}

TEST(SlidingWindow, Arithmetic) {
  std::vector<PredictionEvent> all_correct(30, ev("u", true));
  const auto one = sliding_window_accuracy(all_correct, 30);
  ASSERT_EQ(one.size(), 1u);
  ASSERT_EQ(one[0].points.size(), 1u);
  EXPECT_EQ(one[0].points[0], (std::pair<std::size_t, double>{29, 1.0}));

  const std::vector<PredictionEvent> cwc{ev("u", true), ev("u", false), ev("u", true)};
  EXPECT_EQ(sliding_window_accuracy(cwc, 2)[0].points,
            (std::vector<std::pair<std::size_t, double>>{{1, 0.5}, {2, 0.5}}));
  EXPECT_EQ(sliding_window_accuracy(cwc, 1)[0].points,
            (std::vector<std::pair<std::size_t, double>>{{0, 1.0}, {1, 0.0}, {2, 1.0}}));
  EXPECT_TRUE(sliding_window_accuracy(cwc, 4)[0].points.empty());
  EXPECT_THROW(sliding_window_accuracy(cwc, 0), Error);
}

TEST(SlidingWindow, PerUserStreams) {
  const std::vector<PredictionEvent> events{ev("u", true), ev("v", false), ev("u", true), ev("v", false)};
  const auto series = sliding_window_accuracy(events, 2);
  ASSERT_EQ(series.size(), 2u);
  EXPECT_EQ(series[0].points, (std::vector<std::pair<std::size_t, double>>{{1, 1.0}}));
  EXPECT_EQ(series[1].points, (std::vector<std::pair<std::size_t, double>>{{1, 0.0}}));
  EXPECT_EQ(series_to_json(series), R"([{"series":[[1,1.0]],"user":"u"},{"series":[[1,0.0]],"user":"v"}])");
}

TEST(Oracle, CountsAndPredicts) {
  const std::vector<Session> sessions{{"a", "b", "c"}, {"a", "b", "c"}, {"a", "b", "d"}};
  const OracleModel o = build_oracle(sessions, 3);
  EXPECT_EQ(oracle_predict(o, {"a", "b"}), "c");
  EXPECT_EQ(oracle_predict(o, {"b", "a"}), std::nullopt);
  EXPECT_EQ(o.total_count(), 3u);
  const OracleModel tie = build_oracle(std::vector<Session>{{"a", "d"}, {"a", "c"}}, 2);
  EXPECT_EQ(oracle_predict(tie, {"a"}), "c");
}

TEST(Oracle, AgreementSingleWindowAndDimensionDependence) {
  const std::vector<Session> one{{"a", "b", "c"}};
  const std::vector<StateLabel> labels{"a", "b", "c"};
  const Model m = train(one, config(1000, 3), build_codebook(labels, 1000, 0));
  const std::vector<Prefix> prefixes{{"a", "b"}};
  const AgreementReport r = oracle_agreement(m, build_oracle(one, 3), prefixes, 1);
  EXPECT_EQ(r.considered, 1u);
  EXPECT_EQ(r.fraction(), 1.0);

  // Random windows over 9 labels; tiny D should agree measurably less often.
  const auto labels9 = make_labels(9);
  std::size_t agreed_big = 0, agreed_tiny = 0, considered = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SeedStream s(seed, "test/windows");
    std::vector<Session> windows;
    for (int i = 0; i < 500; ++i) {
      windows.push_back({labels9[s.below(3)], labels9[s.below(3)], labels9[s.below(9)]});
    }
    const OracleModel o = build_oracle(windows, 3);
    std::vector<Prefix> all;
    for (const auto& [prefix, next] : o.counts) all.push_back(prefix);
    const auto big = oracle_agreement(train(windows, config(20000, 3, false, seed),
                                            build_codebook(labels9, 20000, seed)),
                                      o, all);
    const auto tiny =
        oracle_agreement(train(windows, config(64, 3, false, seed), build_codebook(labels9, 64, seed)), o, all);
    EXPECT_EQ(big.considered, tiny.considered);
    agreed_big += big.agreed;
    agreed_tiny += tiny.agreed;
    considered += big.considered;
  }
  ASSERT_GT(considered, 0u);
  EXPECT_GE(static_cast<double>(agreed_big) / considered, 0.95);
  EXPECT_LT(agreed_tiny, agreed_big);
}

TEST(BayesOptimal, KnownChains) {
  EXPECT_NEAR(bayes_optimal_accuracy(cycle3()), 1.0, 1e-12);
  EXPECT_NEAR(bayes_optimal_accuracy(MarkovSpec::uniform(make_labels(9))), 1.0 / 9.0, 1e-12);
  MarkovSpec two;
  two.labels = {"p", "q"};
  two.initial = Eigen::Vector2d(0.5, 0.5);
  two.transition.resize(2, 2);
  two.transition << 0.9, 0.1, 0.2, 0.8;
  // pi_p * 0.1 = pi_q * 0.2 with pi_p + pi_q = 1 -> pi = (2/3, 1/3).
  EXPECT_NEAR(bayes_optimal_accuracy(two), 2.0 / 3.0 * 0.9 + 1.0 / 3.0 * 0.8, 1e-9);
}

TEST(Strategy, LeaveOneUserOutMatchesExplicitFolds) {
  const Dataset d = generate_synthetic(MarkovSpec::uniform(make_labels(5)), 4, 3, 30, 11, 0.5);
  for (bool adaptive : {false, true}) {
    const ModelConfig cfg = config(1000, 3, adaptive, 7);
    const StrategyReport r = run_strategy(d, cfg, SplitStrategy::kLeaveOneUserOut);
    const auto folds = folds_leave_one_user_out(d);
    ASSERT_EQ(r.folds.size(), folds.size());
    double mean = 0.0;
    std::vector<PredictionEvent> events;
    for (std::size_t i = 0; i < folds.size(); ++i) {
      const Model m = train(folds[i].train.state_sequences(), cfg, build_codebook(d.labels(), cfg.dim, cfg.seed));
      const OracleModel seen = build_oracle(folds[i].train, cfg.n);
      const EvalReport e = evaluate(m, folds[i].test, adaptive, {&seen});
      EXPECT_EQ(r.folds[i].accuracy, e.overall_accuracy);
      mean += e.overall_accuracy;
      events.insert(events.end(), e.events.begin(), e.events.end());
    }
    EXPECT_EQ(r.report.events, events);
    ASSERT_TRUE(r.report.fold_mean_accuracy.has_value());
    EXPECT_NEAR(*r.report.fold_mean_accuracy, mean / static_cast<double>(folds.size()), 1e-12);
  }
}

TEST(Strategy, DisjointAndOverlappingRun) {
  const Dataset d = generate_synthetic(MarkovSpec::uniform(make_labels(5)), 7, 3, 30, 1, 0.0);
  const StrategyReport dis = run_strategy(d, config(1000, 3), SplitStrategy::kDisjoint);
  EXPECT_EQ(dis.folds.size(), 1u);
  EXPECT_EQ(dis.folds[0].test_users.size(), 1u);  // ceil(18/21 * 7) = 6 train users
  EXPECT_FALSE(dis.report.fold_mean_accuracy.has_value());
  const StrategyReport over = run_strategy(d, config(1000, 3), SplitStrategy::kOverlapping);
  EXPECT_EQ(over.report.events.size(), 7u * 28u);
  EXPECT_EQ(parse_strategy("kfold"), SplitStrategy::kLeaveOneUserOut);
  EXPECT_THROW(parse_strategy("random"), Error);
}

}  // namespace
