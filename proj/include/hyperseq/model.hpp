#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "hyperseq/codebook.hpp"
#include "hyperseq/hdvec.hpp"
#include "hyperseq/seqencode.hpp"

namespace hyperseq {

struct ModelConfig {
  Index dim = 10000;
  int n = 3;
  int shift = 4;
  std::uint64_t seed = 0;
  bool adaptive = false;
  std::int64_t adapt_weight = 1;
  int entry_bits = 16;

  EncoderConfig encoder() const { return {n, shift, dim}; }
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct QueryResult {
  StateLabel predicted;
  std::map<StateLabel, double> scores;
  Accumulator raw_r;
};

/// Base memory (bundled training n-grams) plus an adaptive memory fed online.
/// Queries read the exact integer sum of the two.
class Model {
 public:
  Model(ModelConfig cfg, Codebook cb);

  /// Reassembles a model from stored state; validates dimensions.
  static Model from_parts(ModelConfig cfg, Codebook cb, Accumulator base, Accumulator adaptive,
                          std::uint64_t train_ngram_count, std::uint64_t adapt_event_count);

  const ModelConfig& config() const noexcept { return cfg_; }
  const Codebook& codebook() const noexcept { return cb_; }
  const Accumulator& base() const noexcept { return base_; }
  const Accumulator& adaptive() const noexcept { return adaptive_; }
  std::uint64_t train_ngram_count() const noexcept { return train_ngram_count_; }
  std::uint64_t adapt_event_count() const noexcept { return adapt_event_count_; }

  /// base + adaptive at full 32-bit width.
  Accumulator memory() const;

  /// R = (base + adaptive) bound with the prefix query.
  Accumulator query_frequency(std::span<const StateLabel> prefix) const;
  QueryResult predict_next(std::span<const StateLabel> prefix) const;

  /// adaptive += adapt_weight * encode_ngram(window).
  void adapt(std::span<const StateLabel> window);
  void reset_adaptive();

  /// Bundles one already-encoded training n-gram into the base memory.
  void add_training_encoding(const Hypervector& encoding);

  friend bool operator==(const Model&, const Model&) = default;

 private:
  std::vector<Hypervector> lookup_all(std::span<const StateLabel> labels, std::size_t arity) const;

  ModelConfig cfg_;
  Codebook cb_;
  Accumulator base_;
  Accumulator adaptive_;
  std::uint64_t train_ngram_count_ = 0;
  std::uint64_t adapt_event_count_ = 0;
};

using Session = std::vector<StateLabel>;

/// Single pass over every contiguous n-window of every session.
/// Throws kEmptyTraining when no session has at least n states.
Model train(std::span<const Session> sessions, const ModelConfig& cfg, const Codebook& cb);

/// Bundled encodings of a set of sessions, for exact merge-based training.
struct PartialMemory {
  Accumulator sum;
  std::uint64_t windows = 0;
};

PartialMemory encode_sessions(std::span<const Session> sessions, const ModelConfig& cfg, const Codebook& cb);

// Model file --------------------------------------------------------------

inline constexpr std::uint16_t kModelFormatVersion = 1;

struct SaveOptions {
  /// Store accumulators as 1-bit signs instead of entry_bits integers (lossy).
  bool sign_quantize = false;
};

void save_model(const Model& m, std::ostream& out, const SaveOptions& opts = {});
void save_model(const Model& m, const std::filesystem::path& path, const SaveOptions& opts = {});
Model load_model(std::istream& in);
Model load_model(const std::filesystem::path& path);

/// Exact size in bytes of a saved model file.
std::size_t model_file_size(const ModelConfig& cfg, std::span<const StateLabel> labels,
                            const SaveOptions& opts = {});

}  // namespace hyperseq
