// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
//
//   reach_acceptance [--work-dir DIR] [--only N[,N...]]
//
// REACH_TDRIVE_DIR, when set, points at the full public T-Drive release for
// the trajectory-count check of criterion 7.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "commands.hpp"
#include "reach/bench.hpp"
#include "reach/binary_io.hpp"
#include "reach/markov.hpp"
#include "reach/raster.hpp"
#include "reach/summary.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace reach;
using Clock = std::chrono::steady_clock;

namespace {

enum class Verdict { pass, fail, not_applicable };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome pass(std::string d) { return {Verdict::pass, std::move(d)}; }
Outcome fail(std::string d) { return {Verdict::fail, std::move(d)}; }

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fixed(double v, int digits = 2) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << v;
  return o.str();
}

std::string sci(double v) {
  std::ostringstream o;
  o << std::scientific << std::setprecision(2) << v;
  return o.str();
}

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "reach_cli");
  std::ostringstream o, e;
  const int rc = reach::cli::run(args, o, e);
  if (out) *out = o.str();
  return rc;
}

double key_value(const std::string& text, const std::string& key) {
  const auto at = text.find("\n" + key + "=");
  if (at == std::string::npos) return std::nan("");
  return std::stod(text.substr(at + key.size() + 2));
}

// 200 seeded sets shared by criteria 1-3
struct OracleSet {
  TrajectorySet set;
  SummaryParams params;
};

std::vector<OracleSet> oracle_sets() {
  std::vector<OracleSet> out;
  std::mt19937_64 rng(20240601);
  for (int i = 0; i < 200; ++i) {
    OracleSet o;
    o.set = reach::testing::random_small_set(rng, 50, 20, 12);
    o.params.delta_r = 1 + i % 3;
    out.push_back(std::move(o));
  }
  return out;
}

// --- criteria --------------------------------------------------------------------

Outcome oracle_equivalence(const std::vector<OracleSet>& sets) {
  const auto start = Clock::now();
  std::size_t unit_mismatch = 0, gauss_mismatch = 0;
  double worst_rel = 0.0;
  for (const auto& o : sets) {
    const auto ref = brute_force_reference(o.set, o.params);
    for (unsigned w : {1u, 2u, 4u, 8u}) {
      if (!(build_reachability_map(o.set, o.params, w) == ref)) ++unit_mismatch;
    }
    auto g = o.params;
    g.weighting = Weighting::gaussian;
    g.sigma_d = 6.0;
    g.sigma_t = 45.0;
    const auto gref = brute_force_reference(o.set, g);
    for (unsigned w : {1u, 2u, 4u, 8u}) {
      const auto got = build_reachability_map(o.set, g, w);
      if (got.size() != gref.size()) {
        ++gauss_mismatch;
        continue;
      }
      for (std::size_t i = 0; i < got.size(); ++i) {
        const auto& a = gref.nodes()[i];
        const auto& b = got.nodes()[i];
        const auto cmp = [&](const SparseChannel& x, const SparseChannel& y) {
          if (a.node != b.node || x.size() != y.size()) return false;
          for (std::size_t k = 0; k < x.size(); ++k) {
            const auto ex = x.entries()[k], ey = y.entries()[k];
            if (ex.idx != ey.idx) return false;
            const double rel = std::abs(ex.count - ey.count) / std::abs(ex.count);
            worst_rel = std::max(worst_rel, rel);
            if (rel > 1e-9) return false;
          }
          return true;
        };
        if (!cmp(a.emission, b.emission) || !cmp(a.absorption, b.absorption)) {
          ++gauss_mismatch;
          break;
        }
      }
    }
  }
  const double el = seconds_since(start);
  std::string d = "200 sets x workers {1,2,4,8}: unit mismatches " + std::to_string(unit_mismatch) +
                  ", gaussian mismatches " + std::to_string(gauss_mismatch) + " (max rel err " + sci(worst_rel) +
                  "), " + fixed(el) + " s";
  if (unit_mismatch || gauss_mismatch || el >= 60.0) return fail(d);
  return pass(d);
}

Outcome duality_conservation(const std::vector<OracleSet>& sets) {
  std::size_t broken = 0, checked = 0;
  for (const auto& o : sets) {
    const auto& p = o.params;
    const auto map = build_reachability_map(o.set, p, 4);
    double pairs = 0;
    for (const auto& tr : o.set.trajectories)
      for (std::size_t k = 0; k < tr.size(); ++k)
        for (std::size_t l = k; l < tr.size(); ++l)
          if (in_neighborhood(tr.records[k].tile, tr.records[l].tile, p.delta_r)) pairs += 1;
    if (map.total_emission() != pairs || map.total_absorption() != pairs) ++broken;
    for (const auto& n : map.nodes()) {
      for (const auto& e : n.absorption.entries()) {
        ++checked;
        const auto off = inverse_index(e.idx, p.delta_r);
        const auto* other = map.find(TileCoord{p.q, static_cast<std::uint32_t>(n.node.x + off.dx),
                                               static_cast<std::uint32_t>(n.node.y + off.dy)});
        if (!other || other->emission.get(mirror_index(e.idx, p.delta_r)) != e.count) ++broken;
      }
    }
  }
  const std::string d =
      std::to_string(checked) + " absorption entries matched against mirrored emission entries, mass totals checked on "
      "200 sets, violations " + std::to_string(broken);
  return broken ? fail(d) : pass(d);
}

Outcome center_entry(const std::vector<OracleSet>& sets) {
  std::size_t nodes = 0, broken = 0;
  for (const auto& o : sets) {
    const auto c = center_index(o.params.delta_r);
    const auto r = o.params.delta_r;
    const auto map = build_reachability_map(o.set, o.params, 2);
    for (const auto& n : map.nodes()) {
      ++nodes;
      const auto d = densify(map, n.node);
      if (n.emission.get(c) != n.absorption.get(c) || d.at(r, r, Channel::emission) != d.at(r, r, Channel::absorption) ||
          n.absorption.get(c) <= 0.0) {
        ++broken;
      }
    }
  }
  const std::string d = std::to_string(nodes) + " active nodes, center entries differing " + std::to_string(broken);
  return broken ? fail(d) : pass(d);
}

Outcome cke(const fs::path& work) {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  int failures = 0;
  for (int i = 0; i < 50; ++i) {
    const auto set = reach::testing::random_small_set(rng, 12, 12, 8);
    std::ostringstream csv;
    write_generic_csv(set, csv);
    const auto path = (work / ("cke_" + std::to_string(i) + ".csv")).string();
    io::write_file_atomic(path, csv.str());
    std::string out;
    const int rc = cli({"verify-cke", "--input", path, "--workers", "2"}, &out);
    const double res = key_value(out, "residual");
    if (rc != 0 || out.find("status=pass") == std::string::npos || !(res < 1e-9)) ++failures;
    if (std::isfinite(res)) worst = std::max(worst, res);
  }

  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst7 = 0.0;
  for (int i = 0; i < 200; ++i) {
    std::vector<TileCoord> tiles;
    for (std::uint32_t s = 0; s < 5; ++s) tiles.push_back({24, s, 0});
    TransitionMatrix m{ActiveIndex(tiles), 5, std::vector<double>(25)};
    for (std::size_t r = 0; r < 5; ++r) {
      double z = 0;
      for (std::size_t c = 0; c < 5; ++c) z += m.p[r * 5 + c] = u(rng);
      for (std::size_t c = 0; c < 5; ++c) m.p[r * 5 + c] /= z;
    }
    const auto p2 = two_step(m);
    for (std::size_t f = 0; f < 5; ++f)
      for (std::size_t t = 0; t < 5; ++t) {
        double sum = 0;
        for (std::size_t v = 0; v < 5; ++v) sum += contribution(m, v, f, t);
        worst7 = std::max(worst7, std::abs(sum - p2[f * 5 + t]));
      }
  }
  const std::string d = "50 CLI instances: failures " + std::to_string(failures) + ", max residual " + sci(worst) +
                        "; 200 random 5-state chains: max two-step residual " + sci(worst7);
  return failures || !(worst7 < 1e-12) ? fail(d) : pass(d);
}

Outcome determinism(const fs::path& work) {
  const auto csv = (work / "determinism.csv").string();
  if (cli({"gen-synthetic", "--seed", "11", "--count", "3000", "--model", "road-grid", "--n-min", "20", "--n-max",
           "80", "--output", csv}) != 0) {
    return fail("could not generate input");
  }
  std::string first;
  std::vector<std::string> sizes;
  for (const char* w : {"1", "2", "4", "8"}) {
    const auto out = (work / (std::string("det_w") + w + ".rsum")).string();
    if (cli({"summarize", "--input", csv, "--workers", w, "--output", out}) != 0) return fail("summarize failed");
    const auto bytes = io::read_file(out);
    if (first.empty()) first = bytes;
    if (bytes != first) return fail(std::string("RSUM from --workers ") + w + " differs from --workers 1");
    sizes.push_back(std::to_string(bytes.size()));
  }
  return pass("3000 road-grid trips, RSUM byte-identical for workers {1,2,4,8} (" + sizes.front() + " bytes)");
}

Outcome scaling() {
  const unsigned cores = std::thread::hardware_concurrency();
  const auto start = Clock::now();
  SummaryParams p;
  const auto set = synth_trajectories(bench_preset(64000, 7));
  BenchReport report;
  bench_dataset(set, p, {1, 2, 4}, 7, report);
  const double el = seconds_since(start);
  std::vector<double> med(3);
  for (std::size_t i = 0; i < 3; ++i) med[i] = report.summary[i].median_seconds;
  const double speedup = med[0] / med[2];
  const bool monotone = med[1] <= med[0] && med[2] <= med[1];
  std::string d = "64000-trip preset, median of 7: t1 " + fixed(med[0], 3) + " s, t2 " + fixed(med[1], 3) + " s, t4 " +
                  fixed(med[2], 3) + " s, speedup(4) " + fixed(speedup) + ", monotone " + (monotone ? "yes" : "no") +
                  ", " + fixed(el, 0) + " s total";
  if (el >= 900.0) return fail(d + " (over the 15 min budget)");
  if (cores < 4) {
    return {Verdict::not_applicable, d + "; host reports " + std::to_string(cores) +
                                         " hardware thread(s), the threshold needs >= 4 cores"};
  }
  return speedup >= 2.0 && monotone ? pass(d) : fail(d);
}

Outcome tdrive(const fs::path& work) {
  const std::string fixture = std::string(REACH_FIXTURES) + "/tdrive";
  const auto out = (work / "tdrive.csv").string();
  std::string text;
  if (cli({"preprocess-tdrive", "--input", fixture, "--output", out}, &text) != 0) return fail("fixture preprocessing failed");
  const auto set = parse_csv_file(out, {}).set;
  std::vector<std::pair<std::string, std::size_t>> got;
  for (const auto& t : set.trajectories) got.emplace_back(t.id, t.size());
  // hand-enumerated: taxi 1 spans two days (one duplicate fix), taxi 2 one
  // day, taxi 3 three non-consecutive days split at local midnight
  const std::vector<std::pair<std::string, std::size_t>> want{
      {"1_20080202", 3}, {"1_20080203", 2}, {"2_20080204", 4}, {"3_20080205", 1}, {"3_20080206", 2}, {"3_20080208", 2}};
  if (got != want) return fail("3-taxi fixture: got " + std::to_string(got.size()) + " trajectories, want 6");
  std::string d = "3-taxi fixture: 6 trajectories with golden ids and lengths";

  const char* full = std::getenv("REACH_TDRIVE_DIR");
  if (full && fs::is_directory(full)) {
    const auto big = (work / "tdrive_full.csv").string();
    if (cli({"preprocess-tdrive", "--input", full, "--output", big}, &text) != 0) return fail(d + "; full dataset failed");
    const auto at = text.find("trajectories: ");
    const auto m = std::stoull(text.substr(at + 14));
    d += "; full dataset: " + std::to_string(m) + " trajectories (want 68851)";
    return m == 68851 ? pass(d) : fail(d);
  }
  return pass(d + "; full dataset not supplied (REACH_TDRIVE_DIR unset)");
}

Outcome lars() {
  std::mt19937_64 rng(4242);
  std::size_t bad = 0;
  const TileCoord origin{24, 13813495, 6357295};
  for (int i = 0; i < 100; ++i) {
    const auto set = reach::testing::random_small_set(rng, 30, 20, 20);
    const WindowSpec win{origin, 16 + static_cast<std::uint32_t>(i % 9), 16 + static_cast<std::uint32_t>(i % 7)};
    const auto c = crm(set, win), h = hcrm(set, win), s = sc(set, win);
    auto want_c = RasterWindow::zeros(origin, win.h, win.w, c.channel_names);
    auto want_h = RasterWindow::zeros(origin, win.h, win.w, h.channel_names);
    auto want_s = RasterWindow::zeros(origin, win.h, win.w, s.channel_names);
    for (const auto& tr : set.trajectories) {
      for (std::size_t k = 0; k < tr.size(); ++k) {
        const auto& t = tr.records[k].tile;
        if (t.x < origin.x || t.y < origin.y || t.x - origin.x >= win.w || t.y - origin.y >= win.h) continue;
        const auto row = t.y - origin.y, col = t.x - origin.x;
        want_c.at(row, col) += 1;
        if (k == 0) continue;
        const auto& prev = tr.records[k - 1];
        const auto a = tile_centroid(prev.tile), b = tile_centroid(t);
        if (prev.tile != t) want_h.at(row, col, static_cast<std::uint32_t>(initial_bearing_deg(a, b) / 30.0) % 12) += 1;
        const double mph = (prev.tile == t ? 0.0 : haversine_m(a, b)) / double(tr.records[k].t - prev.t) * 2.2369362921;
        want_s.at(row, col, std::min(13u, static_cast<std::uint32_t>(mph / 5.0))) += 1;
      }
    }
    bad += (c.data != want_c.data) + (h.data != want_h.data) + (s.data != want_s.data);
  }
  const auto empty = reach::testing::set_of({});
  const WindowSpec def{origin};
  const auto h = hcrm(empty, def), s = sc(empty, def);
  const bool dims = h.h == 256 && h.w == 256 && h.c == 12 && s.h == 256 && s.w == 256 && s.c == 14;
  const std::string d = "100 random sets: rasters differing from recount " + std::to_string(bad) +
                        "; default hcrm " + std::to_string(h.h) + "x" + std::to_string(h.w) + "x" +
                        std::to_string(h.c) + ", sc " + std::to_string(s.h) + "x" + std::to_string(s.w) + "x" +
                        std::to_string(s.c);
  return bad || !dims ? fail(d) : pass(d);
}

Outcome round_trips(const fs::path& work) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> val(-1e9, 1e9);
  std::uniform_int_distribution<std::uint32_t> dim(1, 6);
  int mismatches = 0;
  for (int i = 0; i < 40; ++i) {
    SummaryParams p;
    p.delta_r = 1 + i % 4;
    if (i % 2) {
      p.weighting = Weighting::gaussian;
      p.sigma_d = 3.0 + i;
      p.sigma_t = 17.5;
    }
    const auto map = build_reachability_map(reach::testing::random_small_set(rng), p, 2);
    const auto a = (work / "rt_a.rsum").string(), b = (work / "rt_b.rsum").string();
    write_rsum(map, a);
    write_rsum(read_rsum(a), b);
    mismatches += io::read_file(a) != io::read_file(b);

    Tensor t{i % 3 ? DType::f64 : DType::f32, {dim(rng), dim(rng), dim(rng)}, {}};
    for (std::size_t k = 0; k < t.element_count(); ++k) t.values.push_back(val(rng));
    const auto ta = (work / "rt_a.rten").string(), tb = (work / "rt_b.rten").string();
    write_rten(t, ta);
    write_rten(read_rten(ta), tb);
    mismatches += io::read_file(ta) != io::read_file(tb);
  }
  const std::string d = "40 random RSUM + 40 random RTEN payloads, write-read-write mismatches " +
                        std::to_string(mismatches);
  return mismatches ? fail(d) : pass(d);
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "reach_acceptance";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work-dir" && i + 1 < argc) {
      work = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
    } else {
      std::cerr << "usage: reach_acceptance [--work-dir DIR] [--only N[,N...]]\n";
      return 3;
    }
  }
  fs::create_directories(work);

  std::vector<OracleSet> sets;
  auto shared = [&]() -> const std::vector<OracleSet>& {
    if (sets.empty()) sets = oracle_sets();
    return sets;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle equivalence", [&] { return oracle_equivalence(shared()); }},
      {"duality and conservation", [&] { return duality_conservation(shared()); }},
      {"center entry", [&] { return center_entry(shared()); }},
      {"chapman-kolmogorov", [&] { return cke(work); }},
      {"determinism", [&] { return determinism(work); }},
      {"scaling shape", [] { return scaling(); }},
      {"t-drive preprocessing", [&] { return tdrive(work); }},
      {"lar correctness", [] { return lars(); }},
      {"format round trips", [&] { return round_trips(work); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "N/A ";
    std::cout << "[" << tag << "] " << id << ". " << criteria[i].first << ": " << o.detail << std::endl;
    failed += o.verdict == Verdict::fail;
  }
  return failed ? 1 : 0;
}
