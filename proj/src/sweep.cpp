#include "hyperseq/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace hyperseq {

void SweepGrid::validate() const {
  if (dims.empty() || ngram_lengths.empty() || shifts.empty() || adaptive.empty() || strategies.empty() ||
      seeds.empty()) {
    throw Error(ErrorCode::kValidation, "every sweep grid list must be non-empty");
  }
}

std::size_t SweepGrid::cell_count() const {
  return dims.size() * ngram_lengths.size() * shifts.size() * adaptive.size() * strategies.size() * seeds.size();
}

std::string SweepCell::key() const {
  std::ostringstream os;
  os << "seed" << seed << "_d" << dim << "_n" << n << "_s" << shift << "_a" << (adaptive ? 1 : 0) << '_'
     << to_string(strategy);
  return os.str();
}

std::vector<SweepCell> expand(const SweepGrid& grid) {
  grid.validate();
  std::vector<SweepCell> cells;
  cells.reserve(grid.cell_count());
  for (auto seed : grid.seeds)
    for (auto dim : grid.dims)
      for (auto n : grid.ngram_lengths)
        for (auto shift : grid.shifts)
          for (bool adaptive : grid.adaptive)
            for (auto strategy : grid.strategies) cells.push_back({seed, dim, n, shift, adaptive, strategy});
  return cells;
}

namespace {

std::string row_key(const std::vector<std::string>& fields) {
  // seed, dim, n, shift, adaptive, strategy
  return "seed" + fields[0] + "_d" + fields[1] + "_n" + fields[2] + "_s" + fields[3] + "_a" + fields[4] + "_" +
         fields[5];
}

std::set<std::string> completed_cells(const std::filesystem::path& csv) {
  std::set<std::string> done;
  std::ifstream in(csv);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() >= 12) done.insert(row_key(fields));
  }
  return done;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << v;
  return os.str();
}

}  // namespace

SweepSummary run_sweep(const SweepGrid& grid, const Dataset& data, const std::filesystem::path& out_dir,
                       const SweepOptions& opts) {
  const auto cells = expand(grid);
  std::filesystem::create_directories(out_dir / "series");
  const auto csv_path = out_dir / "sweep.csv";
  const std::set<std::string> done = completed_cells(csv_path);
  const bool fresh = !std::filesystem::exists(csv_path) || std::filesystem::file_size(csv_path) == 0;

  std::ofstream csv(csv_path, std::ios::app);
  if (!csv) throw Error(ErrorCode::kIo, "cannot open " + csv_path.string());
  if (fresh) csv << kSweepCsvHeader << '\n' << std::flush;

  std::vector<SweepCell> todo;
  SweepSummary summary;
  for (const auto& c : cells) {
    if (done.contains(c.key())) {
      ++summary.resumed;
    } else {
      todo.push_back(c);
    }
  }

  std::mutex writer;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      const SweepCell& c = todo[i];
      ModelConfig cfg;
      cfg.dim = c.dim;
      cfg.n = c.n;
      cfg.shift = c.shift;
      cfg.seed = c.seed;
      cfg.adaptive = c.adaptive;
      cfg.adapt_weight = opts.adapt_weight;
      cfg.entry_bits = opts.entry_bits;

      std::ostringstream row;
      row << c.seed << ',' << c.dim << ',' << c.n << ',' << c.shift << ',' << (c.adaptive ? 1 : 0) << ','
          << to_string(c.strategy) << ',';
      bool skipped = false;
      try {
        const auto start = std::chrono::steady_clock::now();
        cfg.validate();
        const StrategyReport r = run_strategy(data, cfg, c.strategy, opts.params);
        const auto ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
        row << format_double(r.report.overall_accuracy) << ','
            << (r.report.fold_mean_accuracy ? format_double(*r.report.fold_mean_accuracy) : std::string()) << ','
            << r.report.events.size() << ',' << r.report.skipped_sessions << ',' << ms << ",ok";
        if (c.adaptive) {
          std::ofstream series(out_dir / "series" / (c.key() + ".json"), std::ios::trunc);
          series << series_to_json(sliding_window_accuracy(r.report.events, opts.window)) << '\n';
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInvalidConfig && e.code() != ErrorCode::kEmptyTraining &&
            e.code() != ErrorCode::kInsufficientUsers && e.code() != ErrorCode::kInsufficientSessions) {
          std::lock_guard lock(writer);
          if (!failure) failure = std::current_exception();
          return;
        }
        std::string reason = e.what();
        std::replace(reason.begin(), reason.end(), ',', ';');
        row << ",,0,0,0,skipped: " << reason;
        skipped = true;
      }
      std::lock_guard lock(writer);
      csv << row.str() << '\n' << std::flush;
      ++(skipped ? summary.skipped : summary.computed);
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, todo.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return summary;
}

}  // namespace hyperseq
