#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hyperseq/hdvec.hpp"

namespace hyperseq {

using StateLabel = std::string;

/// Bijection between state labels and random hypervectors. Entries are kept
/// in ascending label order; each vector is drawn from the sub-stream
/// "codebook/<label>" of the master seed, so adding labels never changes the
/// vectors of existing ones.
class Codebook {
 public:
  Codebook() = default;

  /// Reassembles a codebook from stored entries (used when loading a model).
  static Codebook from_entries(std::vector<StateLabel> labels, std::vector<Hypervector> vectors,
                               std::uint64_t seed);

  const Hypervector& lookup(std::string_view label) const;
  std::size_t index_of(std::string_view label) const;
  bool contains(std::string_view label) const;

  const std::vector<StateLabel>& labels() const noexcept { return labels_; }
  const std::vector<Hypervector>& vectors() const noexcept { return vectors_; }
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  Index dim() const noexcept { return dim_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// D x |labels| matrix whose columns are the codebook vectors, for batched scoring.
  const Eigen::MatrixXd& key_matrix() const noexcept { return keys_; }

  friend bool operator==(const Codebook& a, const Codebook& b) {
    return a.dim_ == b.dim_ && a.seed_ == b.seed_ && a.labels_ == b.labels_ && a.vectors_ == b.vectors_;
  }

  friend Codebook build_codebook(std::span<const StateLabel> labels, Index dim, std::uint64_t seed);

 private:
  void finalize();

  std::vector<StateLabel> labels_;
  std::vector<Hypervector> vectors_;
  Eigen::MatrixXd keys_;
  Index dim_ = 0;
  std::uint64_t seed_ = 0;
};

/// One random hypervector per label. Throws on duplicate or empty labels.
Codebook build_codebook(std::span<const StateLabel> labels, Index dim, std::uint64_t seed);

struct Decoded {
  StateLabel label;
  double similarity = 0.0;
  std::map<StateLabel, double> scores;
};

/// Cosine similarity of `r` against every key, in label order.
std::vector<double> score_keys(const Codebook& cb, const Accumulator& r);

/// Nearest key by cosine similarity; exact ties go to the lexicographically
/// smallest label.
Decoded decode_nearest(const Codebook& cb, const Accumulator& r);

/// Label list as a JSON array string.
std::string labels_to_json(const Codebook& cb);

}  // namespace hyperseq
