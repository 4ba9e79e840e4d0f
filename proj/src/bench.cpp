#include "tlidar/bench.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tlidar/errors.hpp"

namespace tlidar {

Strategy Strategy::stepped(int step) {
  if (step < 1) throw UsageError("stepped strategy needs step >= 1");
  Strategy s;
  s.kind = Kind::kStepped;
  s.step = step;
  return s;
}

Strategy Strategy::fsa(GroupDivision division) {
  division.validate();
  Strategy s;
  s.kind = Kind::kFsa;
  s.division = std::move(division);
  return s;
}

Strategy Strategy::parse(const std::string& text, const GroupDivision& division) {
  if (text == "direct") return direct();
  if (text == "fsa") return fsa(division);
  if (text.rfind("stepped:", 0) == 0) {
    try {
      std::size_t used = 0;
      const int step = std::stoi(text.substr(8), &used);
      if (used == text.size() - 8) return stepped(step);
    } catch (const std::exception&) {
    }
  }
  throw UsageError("unknown strategy '" + text + "'; valid: direct, stepped:N, fsa");
}

std::string Strategy::name() const {
  switch (kind) {
    case Kind::kDirect:
      return "direct";
    case Kind::kStepped:
      return "stepped:" + std::to_string(step);
    case Kind::kFsa:
      return "fsa";
  }
  return "?";
}

AggregatedCloud Strategy::run(std::span<const SequenceFrame> frames, FrameIndex t,
                              int window) const {
  switch (kind) {
    case Kind::kDirect:
      return aggregate_direct(frames, t, window);
    case Kind::kStepped:
      return aggregate_stepped(frames, t, window, step);
    case Kind::kFsa: {
      GroupDivision d = division;
      d.window = window;
      return aggregate_fsa(frames, t, d);
    }
  }
  throw UsageError("unknown strategy kind");
}

namespace {

BenchRow bench_one(std::span<const SequenceFrame> frames, const Strategy& strategy, int window,
                   const BenchOptions& options) {
  if (frames.empty()) throw InvalidInputError("bench needs at least one frame");
  if (options.repeats < 1) throw UsageError("repeats must be >= 1");
  const FrameIndex last = options.t_last < 0 ? frames.back().index : options.t_last;
  std::vector<FrameIndex> targets;
  for (const auto& f : frames) {
    if (f.index >= options.t_first && f.index <= last) targets.push_back(f.index);
  }
  if (targets.empty()) throw InvalidInputError("bench frame range selects no frames");

  BenchRow row;
  row.strategy = strategy.name();
  row.division = strategy.kind == Strategy::Kind::kFsa ? strategy.division.name : "";
  row.window = window;
  row.frames = targets.size();
  std::vector<double> timings;
  for (int r = 0; r < options.repeats; ++r) {
    std::vector<std::size_t> counts;
    counts.reserve(targets.size());
    const auto start = std::chrono::steady_clock::now();
    for (FrameIndex t : targets) counts.push_back(strategy.run(frames, t, window).size());
    const auto stop = std::chrono::steady_clock::now();
    timings.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    if (r == 0) row.per_frame_points = std::move(counts);
  }
  std::sort(timings.begin(), timings.end());
  const std::size_t mid = timings.size() / 2;
  row.milliseconds = timings.size() % 2 ? timings[mid] : 0.5 * (timings[mid - 1] + timings[mid]);
  for (std::size_t c : row.per_frame_points) row.points += c;
  row.bytes = row.points * options.bytes_per_point;
  return row;
}

}  // namespace

BenchReport run_bench(std::span<const SequenceFrame> frames, std::span<const Strategy> strategies,
                      const BenchOptions& options) {
  if (options.window < 0) throw UsageError("window must be >= 0");
  BenchReport report;
  report.bytes_per_point = options.bytes_per_point;
  for (const auto& s : strategies) report.rows.push_back(bench_one(frames, s, options.window, options));
  return report;
}

BenchReport run_window_sweep(std::span<const SequenceFrame> frames, const Strategy& strategy,
                             std::span<const int> windows, const BenchOptions& options) {
  BenchReport report;
  report.bytes_per_point = options.bytes_per_point;
  for (int w : windows) {
    if (w < 1) throw UsageError("sweep windows must be >= 1");
    report.rows.push_back(bench_one(frames, strategy, w, options));
  }
  return report;
}

std::string BenchReport::to_table() const {
  std::ostringstream out;
  out << std::left << std::setw(14) << "strategy" << std::setw(12) << "division" << std::right
      << std::setw(8) << "window" << std::setw(8) << "frames" << std::setw(14) << "points"
      << std::setw(16) << "bytes" << std::setw(12) << "ms" << "\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(14) << r.strategy << std::setw(12)
        << (r.division.empty() ? "-" : r.division) << std::right << std::setw(8) << r.window
        << std::setw(8) << r.frames << std::setw(14) << r.points << std::setw(16) << r.bytes
        << std::setw(12) << std::fixed << std::setprecision(3) << r.milliseconds << "\n";
  }
  return out.str();
}

std::string BenchReport::to_machine(bool include_timing) const {
  std::string out;
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["strategy"] = r.strategy;
    j["division"] = r.division;
    j["window"] = r.window;
    j["frames"] = r.frames;
    j["points"] = r.points;
    j["bytes_per_point"] = bytes_per_point;
    j["bytes"] = r.bytes;
    if (include_timing) j["ms"] = r.milliseconds;
    j["per_frame_points"] = r.per_frame_points;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace tlidar
