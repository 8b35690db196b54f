#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "reach/trajectory.hpp"
#include "reach/transitions.hpp"

namespace reach {

struct BenchRun {
  std::size_t dataset = 0;  // trajectory count
  unsigned workers = 1;
  unsigned run = 0;
  double seconds = 0.0;
};

struct BenchSummary {
  std::size_t dataset = 0;
  unsigned workers = 1;
  double mean_seconds = 0.0;
  double median_seconds = 0.0;
  /// t_ideal / t_mean with t_ideal = t_base * (base_workers / workers).
  double efficiency = 1.0;
};

struct BenchReport {
  unsigned repeats = 0;
  std::vector<BenchRun> runs;
  std::vector<BenchSummary> summary;
  std::vector<std::pair<std::size_t, std::uint64_t>> digests;  // dataset size -> content digest

  /// CSV with header `dataset,workers,run,seconds,efficiency`. Summary rows
  /// carry run = "mean"; per-run rows are included when `per_run` is set.
  void write_csv(std::ostream& out, bool per_run) const;
};

/// Strong-scaling efficiency of `measured` seconds on `workers` relative to
/// `base_seconds` on `base_workers`.
double strong_scaling_efficiency(double base_seconds, unsigned base_workers, double measured, unsigned workers);

double median(std::vector<double> v);

/// Times build_reachability_map on `set` for every worker count, `repeats`
/// times each. The first entry of `workers` is the efficiency baseline.
void bench_dataset(const TrajectorySet& set, const SummaryParams& params, const std::vector<unsigned>& workers,
                   unsigned repeats, BenchReport& report);

/// Least-squares slope of log(mean seconds) against log(dataset size) over
/// summary rows with the given worker count.
double power_law_exponent(const BenchReport& report, unsigned workers);

}  // namespace reach
