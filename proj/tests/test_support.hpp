#pragma once

// Test-only oracles. They compute expected values straight from index
// formulas and never call the library's permute/bind/encode paths.

#include <cstdint>
#include <string>
#include <vector>

#include "hyperseq/hdvec.hpp"

namespace hyperseq::testing {

/// Encode by the index formula:
/// out[i] = prod_j v_j[(i - (slots - 1 - j) * shift) mod D].
inline std::vector<int> naive_encode(const std::vector<std::vector<int>>& vs, int shift) {
  const auto dim = static_cast<std::int64_t>(vs.front().size());
  const auto slots = static_cast<std::int64_t>(vs.size());
  std::vector<int> out(static_cast<std::size_t>(dim), 1);
  for (std::int64_t j = 0; j < slots; ++j) {
    const std::int64_t rot = (slots - 1 - j) * shift;
    for (std::int64_t i = 0; i < dim; ++i) {
      const std::int64_t src = (((i - rot) % dim) + dim) % dim;
      out[static_cast<std::size_t>(i)] *= vs[static_cast<std::size_t>(j)][static_cast<std::size_t>(src)];
    }
  }
  return out;
}

inline std::vector<int> to_ints(const Hypervector& v) {
  std::vector<int> out(static_cast<std::size_t>(v.dim()));
  for (Index i = 0; i < v.dim(); ++i) out[static_cast<std::size_t>(i)] = v[i];
  return out;
}

inline std::vector<std::string> make_labels(std::size_t count, const std::string& stem = "s") {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(stem + std::to_string(i));
  return out;
}

}  // namespace hyperseq::testing
