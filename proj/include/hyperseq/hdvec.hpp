#pragma once

// Bipolar hypervectors, integer bundling accumulators, and the MAP operations
// over them: bind (elementwise product), bundle (elementwise sum), permute
// (cyclic rotation), and cosine similarity.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>

#include "hyperseq/error.hpp"
#include "hyperseq/rng.hpp"

namespace hyperseq {

template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Per-thread counts of D-length vector operations. Used by tests to check the
/// constant-cost contracts of sliding encoding and adaptation.
struct OpCounters {
  std::uint64_t binds = 0;
  std::uint64_t permutes = 0;
  std::uint64_t bundles = 0;
  std::uint64_t accumulator_binds = 0;

  std::uint64_t total() const noexcept { return binds + permutes + bundles + accumulator_binds; }
};

inline OpCounters& op_counters() noexcept {
  thread_local OpCounters counters;
  return counters;
}

inline void reset_op_counters() noexcept { op_counters() = OpCounters{}; }

namespace detail {

inline void require_same_dim(Index a, Index b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace detail

/// Dense vector with every element in {-1, +1}.
template <typename Scalar = std::int8_t>
class BasicHypervector {
 public:
  using Storage = DenseVector<Scalar>;

  BasicHypervector() = default;

  /// The binding identity.
  static BasicHypervector ones(Index dim) {
    if (dim < 1) throw Error(ErrorCode::kInvalidDimension, "dim must be >= 1");
    return BasicHypervector(Storage::Ones(dim));
  }

  /// Validating constructor; every value must be -1 or +1.
  template <typename Range>
  static BasicHypervector from_values(const Range& values) {
    Storage storage(static_cast<Index>(std::size(values)));
    if (storage.size() < 1) throw Error(ErrorCode::kInvalidDimension, "empty hypervector");
    Index i = 0;
    for (auto v : values) {
      if (v != 1 && v != -1) {
        throw Error(ErrorCode::kValidation, "hypervector element " + std::to_string(i) + " is not +-1");
      }
      storage[i++] = static_cast<Scalar>(v);
    }
    return BasicHypervector(std::move(storage));
  }

  static BasicHypervector from_values(std::initializer_list<int> values) {
    return from_values<std::initializer_list<int>>(values);
  }

  /// Wraps storage the caller guarantees to be bipolar.
  static BasicHypervector from_storage_unchecked(Storage storage) {
    return BasicHypervector(std::move(storage));
  }

  Index dim() const noexcept { return values_.size(); }
  Scalar operator[](Index i) const { return values_[i]; }
  const Storage& values() const noexcept { return values_; }

  BasicHypervector negated() const { return BasicHypervector(-values_); }

  friend bool operator==(const BasicHypervector& a, const BasicHypervector& b) {
    return a.dim() == b.dim() && a.values_ == b.values_;
  }

 private:
  explicit BasicHypervector(Storage storage) : values_(std::move(storage)) {}

  Storage values_;
};

/// Signed integer counts, saturating at a configured bit width. The range is
/// symmetric, [-(2^(B-1) - 1), 2^(B-1) - 1], so sign flips never overflow.
template <typename Scalar = std::int32_t>
class BasicAccumulator {
 public:
  using Storage = DenseVector<Scalar>;

  BasicAccumulator() = default;

  static BasicAccumulator zeros(Index dim, int entry_bits = kMaxBits) {
    if (dim < 1) throw Error(ErrorCode::kInvalidDimension, "dim must be >= 1");
    return BasicAccumulator(Storage::Zero(dim), entry_bits);
  }

  template <typename Range>
  static BasicAccumulator from_values(const Range& values, int entry_bits = kMaxBits) {
    Storage storage(static_cast<Index>(std::size(values)));
    if (storage.size() < 1) throw Error(ErrorCode::kInvalidDimension, "empty accumulator");
    BasicAccumulator acc(Storage::Zero(storage.size()), entry_bits);
    Index i = 0;
    for (auto v : values) acc.values_[i++] = acc.clamp(static_cast<std::int64_t>(v));
    return acc;
  }

  static BasicAccumulator from_values(std::initializer_list<std::int64_t> values, int entry_bits = kMaxBits) {
    return from_values<std::initializer_list<std::int64_t>>(values, entry_bits);
  }

  /// Wraps storage the caller guarantees to lie within the entry_bits range.
  static BasicAccumulator from_storage_unchecked(Storage storage, int entry_bits) {
    return BasicAccumulator(std::move(storage), entry_bits);
  }

  template <typename HvScalar>
  static BasicAccumulator from_hypervector(const BasicHypervector<HvScalar>& v, int entry_bits = kMaxBits) {
    return BasicAccumulator(v.values().template cast<Scalar>(), entry_bits);
  }

  Index dim() const noexcept { return values_.size(); }
  Scalar operator[](Index i) const { return values_[i]; }
  const Storage& values() const noexcept { return values_; }
  int entry_bits() const noexcept { return entry_bits_; }
  std::int64_t limit() const noexcept { return (std::int64_t{1} << (entry_bits_ - 1)) - 1; }
  bool is_zero() const { return values_.isZero(); }

  Scalar clamp(std::int64_t v) const noexcept {
    const std::int64_t lim = limit();
    return static_cast<Scalar>(std::clamp(v, -lim, lim));
  }

  /// acc += weight * v, saturating.
  template <typename HvScalar>
  void add(const BasicHypervector<HvScalar>& v, std::int64_t weight = 1) {
    detail::require_same_dim(dim(), v.dim(), "bundle");
    if (weight < 1) throw Error(ErrorCode::kValidation, "bundle weight must be >= 1");
    ++op_counters().bundles;
    const std::int64_t lim = limit();
    if (values_.cwiseAbs().maxCoeff() <= lim - weight) {
      values_ += static_cast<Scalar>(weight) * v.values().template cast<Scalar>();
      return;
    }
    for (Index i = 0; i < dim(); ++i) {
      values_[i] = static_cast<Scalar>(std::clamp(std::int64_t{values_[i]} + weight * v[i], -lim, lim));
    }
  }

  /// Elementwise saturating sum of two accumulators (partial-sum merge).
  void merge(const BasicAccumulator& other) {
    detail::require_same_dim(dim(), other.dim(), "merge");
    const std::int64_t lim = limit();
    for (Index i = 0; i < dim(); ++i) {
      values_[i] = static_cast<Scalar>(std::clamp(std::int64_t{values_[i]} + other.values_[i], -lim, lim));
    }
  }

  void set_zero() { values_.setZero(); }

  friend bool operator==(const BasicAccumulator& a, const BasicAccumulator& b) {
    return a.dim() == b.dim() && a.values_ == b.values_;
  }

  static constexpr int kMaxBits = std::numeric_limits<Scalar>::digits + 1;

 private:
  BasicAccumulator(Storage storage, int entry_bits) : values_(std::move(storage)), entry_bits_(entry_bits) {
    if (entry_bits_ < 2 || entry_bits_ > kMaxBits) {
      throw Error(ErrorCode::kInvalidConfig, "entry_bits out of range: " + std::to_string(entry_bits_));
    }
  }

  Storage values_;
  int entry_bits_ = kMaxBits;
};

using Hypervector = BasicHypervector<std::int8_t>;
using Accumulator = BasicAccumulator<std::int32_t>;

/// Each element independently -1 or +1 with probability 1/2.
inline Hypervector random_hypervector(Index dim, SeedStream& stream) {
  if (dim < 1) throw Error(ErrorCode::kInvalidDimension, "dim must be >= 1");
  Hypervector::Storage values(dim);
  std::uint64_t word = 0;
  for (Index i = 0; i < dim; ++i) {
    if (i % 64 == 0) word = stream.next();
    values[i] = (word >> (i % 64)) & 1U ? std::int8_t{1} : std::int8_t{-1};
  }
  return Hypervector::from_storage_unchecked(std::move(values));
}

template <typename Scalar>
BasicHypervector<Scalar> bind(const BasicHypervector<Scalar>& a, const BasicHypervector<Scalar>& b) {
  detail::require_same_dim(a.dim(), b.dim(), "bind");
  ++op_counters().binds;
  return BasicHypervector<Scalar>::from_storage_unchecked(a.values().cwiseProduct(b.values()));
}

/// Cyclic rotation: result[(i + positions) mod dim] = v[i].
template <typename Scalar>
BasicHypervector<Scalar> permute(const BasicHypervector<Scalar>& v, std::int64_t positions) {
  ++op_counters().permutes;
  const Index dim = v.dim();
  if (dim == 0) return v;
  const Index p = static_cast<Index>(((positions % dim) + dim) % dim);
  typename BasicHypervector<Scalar>::Storage out(dim);
  out.head(p) = v.values().tail(p);
  out.tail(dim - p) = v.values().head(dim - p);
  return BasicHypervector<Scalar>::from_storage_unchecked(std::move(out));
}

template <typename AccScalar, typename HvScalar>
void bundle_accumulate(BasicAccumulator<AccScalar>& acc, const BasicHypervector<HvScalar>& v,
                       std::int64_t weight = 1) {
  acc.add(v, weight);
}

/// result[i] = acc[i] * v[i]; exact because the range is symmetric.
template <typename AccScalar, typename HvScalar>
BasicAccumulator<AccScalar> bind_accumulator(const BasicAccumulator<AccScalar>& acc,
                                             const BasicHypervector<HvScalar>& v) {
  detail::require_same_dim(acc.dim(), v.dim(), "bind_accumulator");
  ++op_counters().accumulator_binds;
  return BasicAccumulator<AccScalar>::from_storage_unchecked(
      acc.values().cwiseProduct(v.values().template cast<AccScalar>()), acc.entry_bits());
}

/// Cosine similarity of two real-valued (or integer) Eigen vectors.
/// Throws kZeroNorm when either input is all zero.
template <typename DerivedA, typename DerivedB>
double cosine_similarity(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  detail::require_same_dim(a.size(), b.size(), "cosine_similarity");
  const auto ad = a.template cast<double>();
  const auto bd = b.template cast<double>();
  const double dot = ad.dot(bd);
  const double na = ad.squaredNorm();
  const double nb = bd.squaredNorm();
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::kZeroNorm, "cosine similarity of a zero vector");
  // sqrt(na * nb) keeps perfect squares exact, so identical bipolar inputs give exactly 1.
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

template <typename Scalar>
double cosine_similarity(const BasicHypervector<Scalar>& a, const BasicHypervector<Scalar>& b) {
  return cosine_similarity(a.values(), b.values());
}

template <typename AccScalar, typename HvScalar>
double cosine_similarity(const BasicAccumulator<AccScalar>& a, const BasicHypervector<HvScalar>& b) {
  return cosine_similarity(a.values(), b.values());
}

/// sign(acc[i]); zeros are resolved by draws from `tie_stream`.
template <typename AccScalar>
Hypervector sign_quantize(const BasicAccumulator<AccScalar>& acc, SeedStream& tie_stream) {
  if (acc.dim() < 1) throw Error(ErrorCode::kInvalidDimension, "empty accumulator");
  Hypervector::Storage out(acc.dim());
  std::uint64_t word = 0;
  int bits_left = 0;
  for (Index i = 0; i < acc.dim(); ++i) {
    if (acc[i] > 0) {
      out[i] = 1;
    } else if (acc[i] < 0) {
      out[i] = -1;
    } else {
      if (bits_left == 0) {
        word = tie_stream.next();
        bits_left = 64;
      }
      out[i] = (word & 1U) ? std::int8_t{1} : std::int8_t{-1};
      word >>= 1;
      --bits_left;
    }
  }
  return Hypervector::from_storage_unchecked(std::move(out));
}

}  // namespace hyperseq
