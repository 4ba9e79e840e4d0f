#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tlidar/fsa.hpp"

namespace tlidar {

/// An aggregation strategy under benchmark.
struct Strategy {
  enum class Kind { kDirect, kStepped, kFsa };

  Kind kind = Kind::kDirect;
  int step = 1;             // kStepped only
  GroupDivision division;   // kFsa only

  static Strategy direct() { return {}; }
  static Strategy stepped(int step);
  static Strategy fsa(GroupDivision division);

  /// "direct", "stepped:N" or "fsa" (using `division`). UsageError otherwise.
  static Strategy parse(const std::string& text, const GroupDivision& division);

  std::string name() const;
  AggregatedCloud run(std::span<const SequenceFrame> frames, FrameIndex t, int window) const;
};

inline constexpr std::size_t kDefaultBytesPerPoint = 16;  // xyz + intensity as float32

struct BenchOptions {
  FrameIndex t_first = 0;
  FrameIndex t_last = -1;  // < 0: last loaded frame
  int window = 16;
  int repeats = 3;
  std::size_t bytes_per_point = kDefaultBytesPerPoint;
};

struct BenchRow {
  std::string strategy;
  std::string division;  // empty unless fsa
  int window = 0;
  std::size_t frames = 0;
  std::size_t points = 0;  // summed over frames
  std::size_t bytes = 0;   // points * bytes_per_point
  double milliseconds = 0.0;  // median over repeats, all frames
  std::vector<std::size_t> per_frame_points;
};

struct BenchReport {
  std::size_t bytes_per_point = kDefaultBytesPerPoint;
  std::vector<BenchRow> rows;

  std::string to_table() const;
  /// One JSON object per line; timing omitted when include_timing is false.
  std::string to_machine(bool include_timing = true) const;
};

BenchReport run_bench(std::span<const SequenceFrame> frames, std::span<const Strategy> strategies,
                      const BenchOptions& options);

/// One row per window size for a single strategy.
BenchReport run_window_sweep(std::span<const SequenceFrame> frames, const Strategy& strategy,
                             std::span<const int> windows, const BenchOptions& options);

}  // namespace tlidar
