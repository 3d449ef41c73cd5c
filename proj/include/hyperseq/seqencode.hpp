#pragma once

// Positional n-gram encoding. Slot i of an n-gram is rotated by
// (n - 1 - i) * shift before all slots are bound together, so the newest
// state is unrotated and order is preserved.

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "hyperseq/codebook.hpp"
#include "hyperseq/hdvec.hpp"

namespace hyperseq {

struct EncoderConfig {
  int n = 3;
  int shift = 1;
  Index dim = 10000;

  /// Throws kInvalidConfig unless n >= 2, shift >= 1 and shift * (n - 1) < dim.
  void validate() const;
};

/// Number of n-gram encodings produced on this thread (direct or sliding).
std::uint64_t& encoding_counter() noexcept;

Hypervector encode_ngram(std::span<const Hypervector> vectors, const EncoderConfig& cfg);

/// The query for an (n-1)-prefix: rotate(encode of the prefix under n-1
/// slots, shift). bind(encode_query(w[:-1]), w[-1]) == encode_ngram(w).
Hypervector encode_query(std::span<const Hypervector> prefix, const EncoderConfig& cfg);

/// Rolling n-gram encoder: each advance costs two binds and two rotations
/// whatever the position in the session.
class SlidingEncoder {
 public:
  SlidingEncoder(std::span<const Hypervector> first_window, const EncoderConfig& cfg);

  /// Slides the window by one and returns the new encoding.
  const Hypervector& advance(const Hypervector& incoming);

  const Hypervector& current() const noexcept { return current_; }
  const std::deque<Hypervector>& window() const noexcept { return window_; }
  const EncoderConfig& config() const noexcept { return cfg_; }

 private:
  EncoderConfig cfg_;
  Hypervector current_;
  std::deque<Hypervector> window_;
};

inline SlidingEncoder sliding_init(std::span<const Hypervector> first_window, const EncoderConfig& cfg) {
  return SlidingEncoder(first_window, cfg);
}

inline const Hypervector& sliding_advance(SlidingEncoder& enc, const Hypervector& incoming) {
  return enc.advance(incoming);
}

struct NgramRecord {
  std::vector<StateLabel> prefix;
  StateLabel target;
  Hypervector encoding;
};

/// One record per contiguous n-window of the session; shorter sessions give
/// none. Throws kUnknownLabel naming the label and its position.
std::vector<NgramRecord> session_ngrams(std::span<const StateLabel> session, const Codebook& cb,
                                        const EncoderConfig& cfg);

/// Calls `sink(encoding)` for every n-window of the session without
/// materializing records; the training hot path.
template <typename Sink>
void for_each_ngram(std::span<const StateLabel> session, const Codebook& cb, const EncoderConfig& cfg,
                    Sink&& sink);

namespace detail {
const Hypervector& lookup_at(const Codebook& cb, std::span<const StateLabel> session, std::size_t pos);
}

template <typename Sink>
void for_each_ngram(std::span<const StateLabel> session, const Codebook& cb, const EncoderConfig& cfg,
                    Sink&& sink) {
  const auto n = static_cast<std::size_t>(cfg.n);
  if (session.size() < n) return;
  std::vector<Hypervector> first;
  first.reserve(n);
  for (std::size_t i = 0; i < n; ++i) first.push_back(detail::lookup_at(cb, session, i));
  SlidingEncoder enc(first, cfg);
  sink(enc.current());
  for (std::size_t i = n; i < session.size(); ++i) sink(enc.advance(detail::lookup_at(cb, session, i)));
}

}  // namespace hyperseq
