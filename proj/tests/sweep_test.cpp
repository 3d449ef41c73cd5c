#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "hyperseq/sweep.hpp"
#include "test_support.hpp"

using namespace hyperseq;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hyperseq_sweep_" + name);
  fs::remove_all(dir);
  return dir;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

Dataset small_data() {
  return generate_synthetic(MarkovSpec::uniform(hyperseq::testing::make_labels(4)), 4, 3, 20, 5, 0.3);
}

SweepGrid one_cell(bool adaptive) {
  SweepGrid g;
  g.dims = {500};
  g.ngram_lengths = {3};
  g.shifts = {2};
  g.adaptive = {adaptive};
  g.strategies = {SplitStrategy::kLeaveOneUserOut};
  return g;
}

TEST(Sweep, DefaultGridHas288CellsPerSeed) {
  SweepGrid g;
  EXPECT_EQ(g.cell_count(), 288u);
  const auto cells = expand(g);
  ASSERT_EQ(cells.size(), 288u);
  EXPECT_EQ(cells.front().key(), "seed0_d1000_n3_s2_a0_disjoint");
  EXPECT_EQ(cells.back().key(), "seed0_d20000_n9_s6_a1_kfold");
  g.seeds = {0, 1};
  EXPECT_EQ(expand(g).size(), 576u);
}

TEST(Sweep, SingleCellWritesOneRowAndResumes) {
  const fs::path dir = fresh_dir("single");
  const auto first = run_sweep(one_cell(true), small_data(), dir);
  EXPECT_EQ(first.computed, 1u);
  const auto lines = read_lines(dir / "sweep.csv");
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], kSweepCsvHeader);
  EXPECT_TRUE(lines[1].starts_with("0,500,3,2,1,kfold,"));
  EXPECT_TRUE(lines[1].ends_with(",ok"));
  EXPECT_TRUE(fs::exists(dir / "series" / "seed0_d500_n3_s2_a1_kfold.json"));

  const auto again = run_sweep(one_cell(true), small_data(), dir);
  EXPECT_EQ(again.computed, 0u);
  EXPECT_EQ(again.resumed, 1u);
  EXPECT_EQ(read_lines(dir / "sweep.csv").size(), 2u);
  fs::remove_all(dir);
}

TEST(Sweep, InvalidCellIsSkippedNotFatal) {
  const fs::path dir = fresh_dir("invalid");
  SweepGrid g = one_cell(false);
  g.dims = {8, 500};
  g.ngram_lengths = {9};
  const auto summary = run_sweep(g, small_data(), dir);
  EXPECT_EQ(summary.skipped, 1u);
  EXPECT_EQ(summary.computed, 1u);
  const auto lines = read_lines(dir / "sweep.csv");
  ASSERT_EQ(lines.size(), 3u);
  std::size_t skipped_rows = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) skipped_rows += lines[i].find(",skipped: ") != std::string::npos;
  EXPECT_EQ(skipped_rows, 1u);
  fs::remove_all(dir);
}

TEST(Sweep, ParallelMatchesSerialAccuracies) {
  SweepGrid g = one_cell(false);
  g.shifts = {2, 4};
  g.strategies = {SplitStrategy::kDisjoint, SplitStrategy::kOverlapping};
  const fs::path a = fresh_dir("serial"), b = fresh_dir("parallel");
  SweepOptions opts;
  run_sweep(g, small_data(), a, opts);
  opts.jobs = 3;
  run_sweep(g, small_data(), b, opts);
  auto strip = [](std::vector<std::string> lines) {
    for (auto& l : lines) {
      // drop wall_time_ms and status, which differ run to run
      for (int k = 0; k < 2; ++k) l = l.substr(0, l.rfind(','));
    }
    std::sort(lines.begin(), lines.end());
    return lines;
  };
  EXPECT_EQ(strip(read_lines(a / "sweep.csv")), strip(read_lines(b / "sweep.csv")));
  fs::remove_all(a);
  fs::remove_all(b);
}

}  // namespace
