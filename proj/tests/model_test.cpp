#include <gtest/gtest.h>

#include <sstream>

#include "hyperseq/eval.hpp"
#include "hyperseq/model.hpp"
#include "test_support.hpp"

using namespace hyperseq;
using hyperseq::testing::make_labels;

namespace {

const std::vector<StateLabel> kAbcd{"a", "b", "c", "d", "x", "y"};

ModelConfig config(Index dim, int n, int shift = 2, bool adaptive = false) {
  ModelConfig cfg;
  cfg.dim = dim;
  cfg.n = n;
  cfg.shift = shift;
  cfg.adaptive = adaptive;
  return cfg;
}

Model train_on(const std::vector<Session>& sessions, const ModelConfig& cfg, const std::vector<StateLabel>& labels) {
  return train(sessions, cfg, build_codebook(labels, cfg.dim, cfg.seed));
}

TEST(Train, SingleWindow) {
  const auto cfg = config(512, 2);
  const Model m = train_on({{"a", "b"}}, cfg, kAbcd);
  const std::vector<Hypervector> w{m.codebook().lookup("a"), m.codebook().lookup("b")};
  EXPECT_EQ(m.base(), Accumulator::from_hypervector(encode_ngram(w, cfg.encoder()), cfg.entry_bits));
  EXPECT_EQ(m.train_ngram_count(), 1u);
  EXPECT_TRUE(m.adaptive().is_zero());
}

TEST(Train, DuplicationEqualsDoubleWeight) {
  const auto cfg = config(1000, 3);
  const Session s{"a", "b", "c", "d", "a"};
  const Model twice = train_on({s, s}, cfg, kAbcd);
  const Codebook cb = build_codebook(kAbcd, cfg.dim, cfg.seed);
  auto expected = Accumulator::zeros(cfg.dim, cfg.entry_bits);
  for (const auto& rec : session_ngrams(s, cb, cfg.encoder())) bundle_accumulate(expected, rec.encoding, 2);
  EXPECT_EQ(twice.base(), expected);
}

TEST(Train, SessionOrderIrrelevant) {
  const auto cfg = config(1000, 3);
  std::vector<Session> sessions{{"a", "b", "c", "d"}, {"d", "c", "b"}, {"x", "y", "x", "a", "b"}};
  const Model first = train_on(sessions, cfg, kAbcd);
  std::swap(sessions[0], sessions[2]);
  EXPECT_EQ(first.base(), train_on(sessions, cfg, kAbcd).base());
}

TEST(Train, EmptyTrainingAndUnknownLabels) {
  const auto cfg = config(256, 3);
  try {
    train_on({{"a", "b"}, {"c"}}, cfg, kAbcd);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyTraining);
  }
  EXPECT_THROW(train_on({{"a", "b", "q"}}, cfg, kAbcd), Error);
}

TEST(Train, SinglePassCounter) {
  const auto cfg = config(1000, 3);
  const std::vector<Session> sessions{{"a", "b", "c", "d", "x"}, {"y", "x"}, {"a", "a", "a", "a"}};
  encoding_counter() = 0;
  const Model m = train_on(sessions, cfg, kAbcd);
  EXPECT_EQ(encoding_counter(), 5u);
  EXPECT_EQ(m.train_ngram_count(), 5u);
  EXPECT_EQ(build_oracle(sessions, 3).total_count(), 5u);
}

TEST(Query, ExactSingleBindingRetrieval) {
  const Model m = train_on({{"a", "b", "c"}}, config(1000, 3), kAbcd);
  const std::vector<StateLabel> prefix{"a", "b"};
  const QueryResult r = m.predict_next(prefix);
  EXPECT_EQ(r.predicted, "c");
  EXPECT_EQ(r.scores.at("c"), 1.0);
  EXPECT_EQ(r.scores.size(), kAbcd.size());
  EXPECT_EQ(r.raw_r, m.query_frequency(prefix));
}

TEST(Query, SmallestArity) {
  const Model m = train_on({{"a", "b"}}, config(256, 2), kAbcd);
  const std::vector<StateLabel> prefix{"a"};
  EXPECT_EQ(m.predict_next(prefix).predicted, "b");
}

// Frequency algebra: 3 x c and 1 x d after [a, b], checked against the counting oracle.
TEST(Query, FrequencyRankingMatchesOracle) {
  const std::vector<Session> sessions{{"a", "b", "c"}, {"a", "b", "c"}, {"a", "b", "c"}, {"a", "b", "d"}};
  const OracleModel oracle = build_oracle(sessions, 3);
  const std::vector<StateLabel> prefix{"a", "b"};
  ASSERT_EQ(oracle_predict(oracle, prefix), "c");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto cfg = config(10000, 3);
    cfg.seed = seed;
    const QueryResult r = train_on(sessions, cfg, kAbcd).predict_next(prefix);
    EXPECT_EQ(r.predicted, "c");
    for (const auto& [label, score] : r.scores) {
      if (label != "c") EXPECT_GT(r.scores.at("c"), score);
      if (label != "c" && label != "d") EXPECT_GT(r.scores.at("d"), score);
    }
  }
}

TEST(Query, UnseenPrefixIsNoise) {
  const std::vector<Session> sessions{{"a", "b", "c", "d", "a", "b", "d"}};
  const Model m = train_on(sessions, config(10000, 3), kAbcd);
  const std::vector<StateLabel> prefix{"x", "y"};
  for (const auto& [label, score] : m.predict_next(prefix).scores) EXPECT_LT(std::abs(score), 0.06) << label;
}

TEST(Query, MajorityRecovery) {
  std::vector<Session> sessions;
  for (int i = 0; i < 7; ++i) sessions.push_back({"a", "b", "c"});
  for (int i = 0; i < 3; ++i) sessions.push_back({"a", "b", "d"});
  const std::vector<StateLabel> prefix{"a", "b"};
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto cfg = config(20000, 3);
    cfg.seed = seed;
    hits += train_on(sessions, cfg, kAbcd).predict_next(prefix).predicted == "c" ? 1 : 0;
  }
  EXPECT_GE(hits, 19);
}

TEST(Query, ErrorsAndPurity) {
  const Model m = train_on({{"a", "b", "c"}}, config(512, 3), kAbcd);
  const std::vector<StateLabel> short_prefix{"a"};
  const std::vector<StateLabel> unknown{"a", "zz"};
  try {
    m.predict_next(short_prefix);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kWrongArity);
  }
  EXPECT_THROW(m.predict_next(unknown), Error);

  const Model snapshot = m;
  const std::vector<StateLabel> prefix{"b", "c"};
  (void)m.predict_next(prefix);
  EXPECT_EQ(m, snapshot);

  const Model empty(config(512, 3), build_codebook(kAbcd, 512, 0));
  try {
    empty.predict_next(prefix);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroNorm);
  }
}

TEST(Adapt, SingleEventMemory) {
  Model m(config(1000, 3, 2, true), build_codebook(kAbcd, 1000, 0));
  const std::vector<StateLabel> window{"a", "b", "c"};
  m.adapt(window);
  EXPECT_EQ(m.adapt_event_count(), 1u);
  EXPECT_FALSE(m.adaptive().is_zero());
  const std::vector<StateLabel> prefix{"a", "b"};
  EXPECT_EQ(m.predict_next(prefix).predicted, "c");
  m.reset_adaptive();
  EXPECT_TRUE(m.adaptive().is_zero());
  EXPECT_EQ(m.adapt_event_count(), 0u);
}

TEST(Adapt, OverridesBaseWithMoreEvidence) {
  const std::vector<Session> sessions{{"a", "b", "c"}, {"a", "b", "c"}, {"a", "b", "c"}};
  Model m = train_on(sessions, config(20000, 3, 2, true), kAbcd);
  const std::vector<StateLabel> prefix{"a", "b"};
  const std::vector<StateLabel> window{"a", "b", "d"};
  EXPECT_EQ(m.predict_next(prefix).predicted, "c");
  for (int i = 0; i < 4; ++i) m.adapt(window);
  EXPECT_EQ(m.predict_next(prefix).predicted, "d");
}

TEST(Adapt, UnrelatedPrefixBarelyMoves) {
  // The prefix needs some mass of its own, otherwise the extra window's
  // norm alone shifts every cosine.
  std::vector<Session> sessions(5, Session{"x", "y", "a"});
  sessions.insert(sessions.end(), 2, Session{"x", "y", "b"});
  sessions.push_back({"c", "d", "a"});
  Model m = train_on(sessions, config(10000, 3, 2, true), kAbcd);
  const std::vector<StateLabel> prefix{"x", "y"};
  const auto before = m.predict_next(prefix).scores;
  const std::vector<StateLabel> window{"a", "b", "c"};
  m.adapt(window);
  const auto after = m.predict_next(prefix).scores;
  for (const auto& [label, score] : before) EXPECT_LT(std::abs(after.at(label) - score), 0.06) << label;
}

TEST(Adapt, DisabledAndArity) {
  Model m = train_on({{"a", "b", "c"}}, config(256, 3), kAbcd);
  const std::vector<StateLabel> window{"a", "b", "c"};
  try {
    m.adapt(window);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAdaptationDisabled);
  }
  Model a(config(256, 3, 2, true), build_codebook(kAbcd, 256, 0));
  const std::vector<StateLabel> pair{"a", "b"};
  EXPECT_THROW(a.adapt(pair), Error);
}

TEST(Adapt, ConstantOperationCount) {
  Model m(config(2000, 5, 2, true), build_codebook(kAbcd, 2000, 0));
  const std::vector<StateLabel> w1{"a", "b", "c", "d", "x"};
  const std::vector<StateLabel> w2{"y", "y", "y", "y", "y"};
  reset_op_counters();
  m.adapt(w1);
  const std::uint64_t first = op_counters().total();
  for (int i = 0; i < 10; ++i) {
    reset_op_counters();
    m.adapt(i % 2 ? w1 : w2);
    EXPECT_EQ(op_counters().total(), first);
    EXPECT_EQ(op_counters().bundles, 1u);
  }
}

TEST(Persistence, RoundTripAllWidths) {
  for (int bits : {8, 16, 32}) {
    auto cfg = config(1000, 3, 4, true);
    cfg.entry_bits = bits;
    cfg.seed = 17;
    Model m = train_on({{"a", "b", "c", "d", "a", "b", "x"}, {"y", "x", "a"}}, cfg, kAbcd);
    const std::vector<StateLabel> window{"a", "b", "d"};
    m.adapt(window);
    std::stringstream buf;
    save_model(m, buf);
    EXPECT_EQ(buf.str().size(), model_file_size(cfg, m.codebook().labels()));
    const Model loaded = load_model(buf);
    EXPECT_EQ(loaded, m);
  }
}

TEST(Persistence, FileSizeFormula) {
  auto cfg = config(10000, 3, 4, true);
  cfg.entry_bits = 16;
  const auto labels = make_labels(9, "state");  // 6-byte labels
  // header 44 + labels 9 * (2 + 6) + codebook 9 * 1250 + memories 2 * 10000 * 2 + crc 4
  EXPECT_EQ(model_file_size(cfg, labels), 44u + 72u + 11250u + 40000u + 4u);
  Model m(cfg, build_codebook(labels, cfg.dim, 0));
  std::stringstream buf;
  save_model(m, buf);
  EXPECT_EQ(buf.str().size(), 51370u);
}

TEST(Persistence, CorruptionDetected) {
  const Model m = train_on({{"a", "b", "c"}}, config(256, 3), kAbcd);
  std::stringstream buf;
  save_model(m, buf);
  const std::string good = buf.str();

  auto expect_format_error = [](std::string bytes, const std::string& field) {
    std::stringstream in(bytes);
    try {
      load_model(in);
      FAIL() << field;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kFormat);
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  std::string flipped = good;
  flipped[flipped.size() - 1] ^= 0x01;
  expect_format_error(flipped, "checksum");
  std::string payload = good;
  payload[60] ^= 0x10;
  expect_format_error(payload, "checksum");
  std::string magic = good;
  magic[0] = 'X';
  expect_format_error(magic, "magic");
  expect_format_error(good.substr(0, 3), "magic");
}

TEST(Persistence, OneBitQuantizedSave) {
  auto cfg = config(2000, 3);
  const Model m = train_on({{"a", "b", "c"}, {"a", "b", "c"}, {"x", "y", "d"}}, cfg, kAbcd);
  std::stringstream buf;
  save_model(m, buf, SaveOptions{true});
  EXPECT_EQ(buf.str().size(), model_file_size(cfg, m.codebook().labels(), SaveOptions{true}));
  const Model q = load_model(buf);
  for (Index i = 0; i < q.base().dim(); ++i) ASSERT_TRUE(q.base()[i] == 1 || q.base()[i] == -1);
  const std::vector<StateLabel> prefix{"a", "b"};
  EXPECT_EQ(q.predict_next(prefix).predicted, "c");
}

TEST(Persistence, FileRoundTrip) {
  const Model m = train_on({{"a", "b", "c", "d"}}, config(640, 3), kAbcd);
  const auto path = std::filesystem::temp_directory_path() / "hyperseq_model_test.bin";
  save_model(m, path);
  EXPECT_EQ(load_model(path), m);
  std::filesystem::remove(path);
  EXPECT_THROW(load_model(path), Error);
}

}  // namespace
