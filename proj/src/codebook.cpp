#include "hyperseq/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

namespace hyperseq {

namespace {

// Redraws on a (vanishingly unlikely at realistic D) collision so the map stays injective.
Hypervector draw_unique(Index dim, std::uint64_t seed, const StateLabel& label,
                        const std::vector<Hypervector>& taken) {
  for (int attempt = 0;; ++attempt) {
    std::string name = "codebook/" + label;
    if (attempt > 0) name += "#" + std::to_string(attempt);
    SeedStream stream(seed, name);
    Hypervector v = random_hypervector(dim, stream);
    if (std::find(taken.begin(), taken.end(), v) == taken.end()) return v;
  }
}

}  // namespace

Codebook build_codebook(std::span<const StateLabel> labels, Index dim, std::uint64_t seed) {
  if (dim < 1) throw Error(ErrorCode::kInvalidDimension, "dim must be >= 1");
  if (labels.empty()) throw Error(ErrorCode::kEmptyCodebook, "no labels");
  std::vector<StateLabel> sorted(labels.begin(), labels.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].empty()) throw Error(ErrorCode::kValidation, "empty state label");
    if (i > 0 && sorted[i] == sorted[i - 1]) throw Error(ErrorCode::kDuplicateLabel, sorted[i]);
  }
  if (dim < 63 && sorted.size() > (std::size_t{1} << dim)) {
    throw Error(ErrorCode::kInvalidDimension, "dim too small for an injective codebook");
  }

  Codebook cb;
  cb.dim_ = dim;
  cb.seed_ = seed;
  cb.labels_ = std::move(sorted);
  cb.vectors_.reserve(cb.labels_.size());
  for (const auto& label : cb.labels_) cb.vectors_.push_back(draw_unique(dim, seed, label, cb.vectors_));
  cb.finalize();
  return cb;
}

Codebook Codebook::from_entries(std::vector<StateLabel> labels, std::vector<Hypervector> vectors,
                                std::uint64_t seed) {
  if (labels.empty()) throw Error(ErrorCode::kEmptyCodebook, "no labels");
  if (labels.size() != vectors.size()) throw Error(ErrorCode::kValidation, "label/vector count mismatch");
  if (!std::is_sorted(labels.begin(), labels.end()) ||
      std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
    throw Error(ErrorCode::kValidation, "labels must be unique and sorted");
  }
  Codebook cb;
  cb.dim_ = vectors.front().dim();
  for (const auto& v : vectors) detail::require_same_dim(cb.dim_, v.dim(), "codebook entry");
  cb.seed_ = seed;
  cb.labels_ = std::move(labels);
  cb.vectors_ = std::move(vectors);
  cb.finalize();
  return cb;
}

void Codebook::finalize() {
  keys_.resize(dim_, static_cast<Index>(vectors_.size()));
  for (std::size_t j = 0; j < vectors_.size(); ++j) {
    keys_.col(static_cast<Index>(j)) = vectors_[j].values().cast<double>();
  }
}

std::size_t Codebook::index_of(std::string_view label) const {
  const auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) throw Error(ErrorCode::kUnknownLabel, std::string(label));
  return static_cast<std::size_t>(it - labels_.begin());
}

bool Codebook::contains(std::string_view label) const {
  return std::binary_search(labels_.begin(), labels_.end(), label);
}

const Hypervector& Codebook::lookup(std::string_view label) const { return vectors_[index_of(label)]; }

std::vector<double> score_keys(const Codebook& cb, const Accumulator& r) {
  if (cb.empty()) throw Error(ErrorCode::kEmptyCodebook, "decode against an empty codebook");
  detail::require_same_dim(cb.dim(), r.dim(), "decode");
  const Eigen::VectorXd rd = r.values().cast<double>();
  const double r_norm2 = rd.squaredNorm();
  if (r_norm2 == 0.0) throw Error(ErrorCode::kZeroNorm, "query result is all zero");
  // Dot products of integer vectors are exact in double below 2^53.
  const Eigen::VectorXd dots = cb.key_matrix().transpose() * rd;
  const double denom = std::sqrt(r_norm2 * static_cast<double>(cb.dim()));
  std::vector<double> scores(cb.size());
  for (std::size_t j = 0; j < scores.size(); ++j) {
    scores[j] = std::clamp(dots[static_cast<Index>(j)] / denom, -1.0, 1.0);
  }
  return scores;
}

Decoded decode_nearest(const Codebook& cb, const Accumulator& r) {
  const std::vector<double> scores = score_keys(cb, r);
  std::size_t best = 0;
  for (std::size_t j = 1; j < scores.size(); ++j) {
    if (scores[j] > scores[best]) best = j;
  }
  Decoded out;
  out.label = cb.labels()[best];
  out.similarity = scores[best];
  for (std::size_t j = 0; j < scores.size(); ++j) out.scores.emplace(cb.labels()[j], scores[j]);
  return out;
}

std::string labels_to_json(const Codebook& cb) { return nlohmann::json(cb.labels()).dump(); }

}  // namespace hyperseq
