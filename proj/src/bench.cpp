#include "reach/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "reach/error.hpp"
#include "reach/summary.hpp"

namespace reach {

double strong_scaling_efficiency(double base_seconds, unsigned base_workers, double measured, unsigned workers) {
  const double ideal = base_seconds * static_cast<double>(base_workers) / static_cast<double>(workers);
  return ideal / measured;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

void bench_dataset(const TrajectorySet& set, const SummaryParams& params, const std::vector<unsigned>& workers,
                   unsigned repeats, BenchReport& report) {
  if (workers.empty()) throw ParameterError("bench needs at least one worker count");
  if (repeats < 1) throw ParameterError("repeats must be >= 1");
  report.repeats = repeats;
  report.digests.emplace_back(set.trajectories.size(), digest(set));

  double base_mean = 0.0;
  for (std::size_t wi = 0; wi < workers.size(); ++wi) {
    const unsigned w = workers[wi];
    std::vector<double> times;
    for (unsigned r = 0; r < repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      const auto map = build_reachability_map(set, params, w);
      const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start;
      if (map.empty() && !set.trajectories.empty()) throw Error("benchmark produced an empty map");
      times.push_back(el.count());
      report.runs.push_back(BenchRun{set.trajectories.size(), w, r, el.count()});
    }
    BenchSummary s;
    s.dataset = set.trajectories.size();
    s.workers = w;
    s.mean_seconds = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
    s.median_seconds = median(times);
    if (wi == 0) base_mean = s.mean_seconds;
    s.efficiency = wi == 0 ? 1.0 : strong_scaling_efficiency(base_mean, workers[0], s.mean_seconds, w);
    report.summary.push_back(s);
  }
}

void BenchReport::write_csv(std::ostream& out, bool per_run) const {
  out << "dataset,workers,run,seconds,efficiency\n";
  for (const auto& s : summary) {
    out << s.dataset << ',' << s.workers << ",mean," << s.mean_seconds << ',' << s.efficiency << '\n';
    if (!per_run) continue;
    double base = 0.0;
    unsigned base_w = 1;
    for (const auto& b : summary) {
      if (b.dataset == s.dataset) {
        base = b.mean_seconds;
        base_w = b.workers;
        break;
      }
    }
    for (const auto& r : runs) {
      if (r.dataset != s.dataset || r.workers != s.workers) continue;
      out << r.dataset << ',' << r.workers << ',' << r.run << ',' << r.seconds << ','
          << strong_scaling_efficiency(base, base_w, r.seconds, r.workers) << '\n';
    }
  }
}

double power_law_exponent(const BenchReport& report, unsigned workers) {
  std::vector<double> lx, ly;
  for (const auto& s : report.summary) {
    if (s.workers != workers || s.dataset == 0 || s.mean_seconds <= 0) continue;
    lx.push_back(std::log(static_cast<double>(s.dataset)));
    ly.push_back(std::log(s.mean_seconds));
  }
  if (lx.size() < 2) return std::nan("");
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  return den > 0 ? num / den : std::nan("");
}

}  // namespace reach
