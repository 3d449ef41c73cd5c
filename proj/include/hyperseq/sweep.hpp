#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hyperseq/dataio.hpp"
#include "hyperseq/eval.hpp"

namespace hyperseq {

struct SweepGrid {
  std::vector<Index> dims{1000, 5000, 10000, 20000};
  std::vector<int> ngram_lengths{3, 5, 7, 9};
  std::vector<int> shifts{2, 4, 6};
  std::vector<bool> adaptive{false, true};
  std::vector<SplitStrategy> strategies{SplitStrategy::kDisjoint, SplitStrategy::kOverlapping,
                                        SplitStrategy::kLeaveOneUserOut};
  std::vector<std::uint64_t> seeds{0};

  void validate() const;
  std::size_t cell_count() const;
};

struct SweepCell {
  std::uint64_t seed = 0;
  Index dim = 0;
  int n = 0;
  int shift = 0;
  bool adaptive = false;
  SplitStrategy strategy = SplitStrategy::kDisjoint;

  /// Stable identifier, e.g. "seed0_d1000_n3_s2_a1_disjoint".
  std::string key() const;
};

/// Cartesian product in seed, dim, n, shift, adaptive, strategy order.
std::vector<SweepCell> expand(const SweepGrid& grid);

struct SweepOptions {
  std::int64_t adapt_weight = 1;
  int entry_bits = 16;
  std::size_t window = 30;  // sliding-window size for adaptive series
  std::size_t jobs = 1;
  StrategyParams params;
};

struct SweepSummary {
  std::size_t computed = 0;
  std::size_t resumed = 0;  // already present in the output table
  std::size_t skipped = 0;  // invalid cells
};

inline constexpr const char* kSweepCsvHeader =
    "seed,dim,n,shift,adaptive,strategy,overall_accuracy,fold_mean_accuracy,events,skipped_sessions,wall_time_ms,"
    "status";

/// Runs every cell not yet present in <out_dir>/sweep.csv, appending one row
/// per cell as it finishes; adaptive cells also write
/// <out_dir>/series/<key>.json. Cells run on `jobs` threads.
SweepSummary run_sweep(const SweepGrid& grid, const Dataset& data, const std::filesystem::path& out_dir,
                       const SweepOptions& opts = {});

}  // namespace hyperseq
