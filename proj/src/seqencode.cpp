#include "hyperseq/seqencode.hpp"

#include <string>

namespace hyperseq {

void EncoderConfig::validate() const {
  if (dim < 1) throw Error(ErrorCode::kInvalidDimension, "dim must be >= 1");
  if (n < 2) throw Error(ErrorCode::kInvalidConfig, "n-gram length must be >= 2");
  if (shift < 1) throw Error(ErrorCode::kInvalidConfig, "shift must be >= 1");
  if (static_cast<Index>(shift) * (n - 1) >= dim) {
    throw Error(ErrorCode::kInvalidConfig, "shift * (n - 1) = " + std::to_string(shift * (n - 1)) +
                                               " must be < dim = " + std::to_string(dim));
  }
}

std::uint64_t& encoding_counter() noexcept {
  thread_local std::uint64_t count = 0;
  return count;
}

namespace {

void require_arity(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw Error(ErrorCode::kWrongArity,
                std::string(what) + " expects " + std::to_string(want) + " vectors, got " + std::to_string(got));
  }
}

// Encode over an arbitrary number of slots.
Hypervector encode_slots(std::span<const Hypervector> vectors, const EncoderConfig& cfg) {
  const auto slots = static_cast<std::int64_t>(vectors.size());
  for (const auto& v : vectors) detail::require_same_dim(cfg.dim, v.dim(), "encode");
  Hypervector out = permute(vectors[0], (slots - 1) * cfg.shift);
  for (std::int64_t i = 1; i < slots; ++i) {
    out = bind(out, permute(vectors[static_cast<std::size_t>(i)], (slots - 1 - i) * cfg.shift));
  }
  return out;
}

}  // namespace

Hypervector encode_ngram(std::span<const Hypervector> vectors, const EncoderConfig& cfg) {
  require_arity(vectors.size(), static_cast<std::size_t>(cfg.n), "encode_ngram");
  ++encoding_counter();
  return encode_slots(vectors, cfg);
}

Hypervector encode_query(std::span<const Hypervector> prefix, const EncoderConfig& cfg) {
  require_arity(prefix.size(), static_cast<std::size_t>(cfg.n - 1), "encode_query");
  return permute(encode_slots(prefix, cfg), cfg.shift);
}

SlidingEncoder::SlidingEncoder(std::span<const Hypervector> first_window, const EncoderConfig& cfg)
    : cfg_(cfg), current_(encode_ngram(first_window, cfg)), window_(first_window.begin(), first_window.end()) {}

const Hypervector& SlidingEncoder::advance(const Hypervector& incoming) {
  detail::require_same_dim(cfg_.dim, incoming.dim(), "sliding_advance");
  const Hypervector& outgoing = window_.front();
  // Unbind the oldest slot, age every remaining slot by one shift, bind the newcomer.
  Hypervector stripped = bind(current_, permute(outgoing, static_cast<std::int64_t>(cfg_.n - 1) * cfg_.shift));
  current_ = bind(permute(stripped, cfg_.shift), incoming);
  window_.pop_front();
  window_.push_back(incoming);
  ++encoding_counter();
  return current_;
}

namespace detail {

const Hypervector& lookup_at(const Codebook& cb, std::span<const StateLabel> session, std::size_t pos) {
  if (!cb.contains(session[pos])) {
    throw Error(ErrorCode::kUnknownLabel, "'" + session[pos] + "' at position " + std::to_string(pos));
  }
  return cb.lookup(session[pos]);
}

}  // namespace detail

std::vector<NgramRecord> session_ngrams(std::span<const StateLabel> session, const Codebook& cb,
                                        const EncoderConfig& cfg) {
  for (std::size_t i = 0; i < session.size(); ++i) detail::lookup_at(cb, session, i);
  std::vector<NgramRecord> records;
  const auto n = static_cast<std::size_t>(cfg.n);
  if (session.size() < n) return records;
  records.reserve(session.size() - n + 1);
  std::size_t start = 0;
  for_each_ngram(session, cb, cfg, [&](const Hypervector& encoding) {
    NgramRecord rec;
    rec.prefix.assign(session.begin() + static_cast<std::ptrdiff_t>(start),
                      session.begin() + static_cast<std::ptrdiff_t>(start + n - 1));
    rec.target = session[start + n - 1];
    rec.encoding = encoding;
    records.push_back(std::move(rec));
    ++start;
  });
  return records;
}

}  // namespace hyperseq
