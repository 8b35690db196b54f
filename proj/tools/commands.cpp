#include "commands.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "reach/bench.hpp"
#include "reach/binary_io.hpp"
#include "reach/error.hpp"
#include "reach/markov.hpp"
#include "reach/raster.hpp"
#include "reach/summary.hpp"
#include "reach/trajectory.hpp"

namespace reach::cli {

namespace {

/// Raised for flag combinations CLI11 cannot express.
struct UsageError : Error {
  using Error::Error;
};

unsigned default_workers() {
  if (const char* env = std::getenv("REACH_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

CsvFormat to_format(const std::string& s) { return s == "tdrive" ? CsvFormat::tdrive : CsvFormat::generic; }

struct InputFlags {
  std::string input;
  std::string format = "generic";
  std::uint32_t zoom = 24;
  std::optional<std::int64_t> t0;
  std::optional<std::int64_t> dt;

  void add_to(CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("--input", input, "Trajectory CSV file or directory");
    if (required) opt->required();
    cmd->add_option("--format", format, "generic | tdrive")->check(CLI::IsMember({"generic", "tdrive"}));
    cmd->add_option("--zoom", zoom, "Tile zoom level")->check(CLI::Range(1, 30));
    cmd->add_option("--t0", t0, "Observation interval start (epoch seconds)");
    cmd->add_option("--dt", dt, "Observation interval length (seconds)");
  }

  /// Parses the input; T-Drive data is split into per-day trajectories.
  TrajectorySet load(std::ostream& out) const {
    if (t0.has_value() != dt.has_value()) throw UsageError("--t0 and --dt must be given together");
    ParseOptions opts;
    opts.format = to_format(format);
    opts.zoom = zoom;
    if (t0) {
      if (*dt < 0) throw UsageError("--dt must be non-negative");
      opts.has_window = true;
      opts.t0 = *t0;
      opts.dt = *dt;
    }
    auto parsed = parse_csv_path(input, opts);
    const auto& st = parsed.stats;
    if (st.malformed || st.duplicate_drops || st.out_of_window) {
      out << "ingest: skipped " << st.malformed << " malformed, " << st.duplicate_drops << " duplicate-time, "
          << st.out_of_window << " out-of-interval records\n";
    }
    if (opts.format == CsvFormat::tdrive) return preprocess_tdrive(parsed.set);
    return std::move(parsed.set);
  }
};

struct ParamFlags {
  std::uint32_t delta_r = 12;
  std::string weighting = "unit";
  std::optional<double> sigma_d;
  std::optional<double> sigma_t;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--delta-r", delta_r, "Reachability buffer in tiles")->check(CLI::Range(1u, kMaxDeltaR));
    cmd->add_option("--weighting", weighting, "unit | gaussian")->check(CLI::IsMember({"unit", "gaussian"}));
    cmd->add_option("--sigma-d", sigma_d, "Gaussian distance scale (m)")->check(CLI::PositiveNumber);
    cmd->add_option("--sigma-t", sigma_t, "Gaussian time scale (s)")->check(CLI::PositiveNumber);
  }

  SummaryParams to_params(std::uint32_t zoom) const {
    SummaryParams p;
    p.q = zoom;
    p.delta_r = delta_r;
    if (weighting == "gaussian") {
      if (!sigma_d || !sigma_t) throw UsageError("--weighting gaussian requires --sigma-d and --sigma-t");
      p.weighting = Weighting::gaussian;
      p.sigma_d = *sigma_d;
      p.sigma_t = *sigma_t;
    }
    p.validate();
    return p;
  }
};

std::vector<double> parse_number_list(const std::string& text, const char* what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string("bad ") + what + " '" + text + "'");
    }
  }
  return v;
}

WindowSpec parse_window(const std::string& text, std::uint32_t zoom) {
  const auto v = parse_number_list(text, "--window");
  if (v.size() != 2 && v.size() != 4) throw UsageError("--window expects X,Y or X,Y,H,W");
  for (double d : v) {
    if (d < 0 || d != std::floor(d) || d > 4294967295.0) throw UsageError("--window values must be non-negative integers");
  }
  WindowSpec w;
  w.origin = TileCoord{zoom, static_cast<std::uint32_t>(v[0]), static_cast<std::uint32_t>(v[1])};
  if (v.size() == 4) {
    w.h = static_cast<std::uint32_t>(v[2]);
    w.w = static_cast<std::uint32_t>(v[3]);
  }
  return w;
}

std::vector<unsigned> parse_unsigned_list(const std::string& text, const char* what) {
  std::vector<unsigned> out;
  for (double d : parse_number_list(text, what)) {
    if (d < 1 || d != std::floor(d) || d > 1e9) throw UsageError(std::string(what) + " entries must be positive integers");
    out.push_back(static_cast<unsigned>(d));
  }
  if (out.empty()) throw UsageError(std::string(what) + " is empty");
  return out;
}

std::string fmt_seconds(double s) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(3) << s << " s";
  return o.str();
}

// --- commands -------------------------------------------------------------------

int cmd_summarize(const InputFlags& in, const ParamFlags& pf, unsigned workers, const std::string& output,
                  std::ostream& out) {
  const auto params = pf.to_params(in.zoom);
  const auto set = in.load(out);
  const auto start = std::chrono::steady_clock::now();
  const auto map = build_reachability_map(set, params, workers);
  const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start;
  write_rsum(map, output);
  out << "trajectories: " << set.trajectories.size() << "\n"
      << "records: " << set.record_count() << "\n"
      << "active nodes: " << map.size() << "\n"
      << "total weighted mass: " << std::setprecision(17) << map.total_absorption() << "\n"
      << "workers: " << workers << "\n"
      << "elapsed: " << fmt_seconds(el.count()) << "\n";
  return kOk;
}

int cmd_export(const std::string& rsum, const std::string& output, const std::string& dtype, std::ostream& out) {
  const auto map = read_rsum(rsum);
  const auto n = export_dense_tensors(map, {}, output, dtype == "f32" ? DType::f32 : DType::f64);
  const auto side = map.params().side();
  out << "exported " << n << " summaries, shape (" << n << ", " << side << ", " << side << ", 2)\n";
  return kOk;
}

struct RasterFlags {
  std::string kind;
  std::string window;
  std::string embeddings;
  std::optional<std::uint32_t> dr;
  std::string roads;
  bool log_norm = false;
  std::string output;
};

int cmd_rasterize(const InputFlags& in, const RasterFlags& rf, std::ostream& out) {
  const auto win = parse_window(rf.window, in.zoom);
  RasterWindow rw;
  const bool needs_input = rf.kind == "crm" || rf.kind == "hcrm" || rf.kind == "sc";
  if (needs_input && in.input.empty()) throw UsageError("--kind " + rf.kind + " requires --input");
  if (!needs_input && !in.input.empty()) throw UsageError("--input is not used by --kind " + rf.kind);
  if (rf.kind != "rnp" && !rf.roads.empty()) throw UsageError("--roads only applies to --kind rnp");
  if (rf.kind != "embedding" && (!rf.embeddings.empty() || rf.dr)) {
    throw UsageError("--embeddings/--dr only apply to --kind embedding");
  }

  if (needs_input) {
    const auto set = in.load(out);
    rw = rf.kind == "crm" ? crm(set, win) : rf.kind == "hcrm" ? hcrm(set, win) : sc(set, win);
  } else if (rf.kind == "rnp") {
    if (rf.roads.empty()) throw UsageError("--kind rnp requires --roads");
    rw = rnp(read_roads(rf.roads), win);
  } else {
    if (rf.embeddings.empty() || !rf.dr) throw UsageError("--kind embedding requires --embeddings and --dr");
    rw = embedding_raster(read_remb(rf.embeddings), win, *rf.dr);
  }
  if (rf.log_norm) rw = log_normalize(rw);
  write_raster(rw, rf.output);
  double total = 0.0;
  for (double v : rw.data) total += v;
  out << rf.kind << " raster " << rw.h << "x" << rw.w << "x" << rw.c << ", sum " << std::setprecision(12) << total
      << "\n";
  return kOk;
}

int cmd_preprocess(const std::string& input, const std::string& output, std::uint32_t zoom, std::ostream& out) {
  ParseOptions opts;
  opts.format = CsvFormat::tdrive;
  opts.zoom = zoom;
  auto parsed = parse_csv_path(input, opts);
  const auto split = preprocess_tdrive(parsed.set);
  std::ostringstream csv;
  write_generic_csv(split, csv);
  io::write_file_atomic(output, csv.str());
  out << "taxis: " << parsed.set.trajectories.size() << "\n"
      << "trajectories: " << split.trajectories.size() << "\n"
      << "records in: " << parsed.set.record_count() + parsed.stats.duplicate_drops << "\n"
      << "records out: " << split.record_count() << "\n"
      << "duplicate-time drops: " << parsed.stats.duplicate_drops << "\n"
      << "malformed lines: " << parsed.stats.malformed << "\n";
  return kOk;
}

int cmd_verify(const std::string& rsum, const InputFlags& in, const ParamFlags& pf, bool delta_given,
               unsigned workers, std::ostream& out) {
  if (rsum.empty() == in.input.empty()) throw UsageError("give exactly one of --rsum or --input");
  CkeReport rep;
  if (!rsum.empty()) {
    const auto map = read_rsum(rsum);
    rep = cke_verify(map, touches_neighborhood_border(map));
  } else {
    const auto set = in.load(out);
    const auto need = required_delta_r(set);
    ParamFlags adjusted = pf;
    if (!delta_given) adjusted.delta_r = std::min(need, kMaxDeltaR);
    const auto params = adjusted.to_params(in.zoom);
    const auto map = build_reachability_map(set, params, workers);
    rep = cke_verify(map, params.delta_r < need);
  }
  out << rep.to_text();
  return rep.status == CkeStatus::fail ? kVerificationFailed : kOk;
}

struct BenchFlags {
  std::string presets = "64000";
  std::string workers = "1,2,4";
  unsigned repeats = 7;
  std::uint64_t seed = 7;
  std::string output;
  std::string sweep;
  bool per_run = false;
};

int cmd_bench(const BenchFlags& bf, const InputFlags& in, const ParamFlags& pf, std::ostream& out) {
  const auto params = pf.to_params(in.zoom);
  const auto workers = parse_unsigned_list(bf.workers, "--workers");
  BenchReport report;
  auto run_one = [&](const TrajectorySet& set, const std::vector<unsigned>& ws) {
    bench_dataset(set, params, ws, bf.repeats, report);
    out << "dataset " << set.trajectories.size() << " digest " << std::hex << std::setw(16) << std::setfill('0')
        << digest(set) << std::dec << std::setfill(' ') << "\n";
  };

  if (!in.input.empty()) {
    run_one(in.load(out), workers);
  } else if (!bf.sweep.empty()) {
    // trajectory-count scaling at a fixed worker count (first --workers entry)
    if (in.zoom != 24) throw UsageError("synthetic presets are defined at zoom 24");
    for (auto n : parse_unsigned_list(bf.sweep, "--sweep-trajectories")) {
      run_one(synth_trajectories(bench_preset(n, bf.seed)), {workers.front()});
    }
    out << "power-law exponent (runtime vs trajectories): " << power_law_exponent(report, workers.front()) << "\n";
  } else {
    if (in.zoom != 24) throw UsageError("synthetic presets are defined at zoom 24");
    for (auto n : parse_unsigned_list(bf.presets, "--preset")) {
      if (n != 2000 && n != 8000 && n != 64000) throw UsageError("--preset must be 2000, 8000 or 64000");
      run_one(synth_trajectories(bench_preset(n, bf.seed)), workers);
    }
  }

  std::ostringstream csv;
  report.write_csv(csv, bf.per_run);
  if (!bf.output.empty()) io::write_file_atomic(bf.output, csv.str());
  out << csv.str();
  return kOk;
}

struct SynthFlags {
  std::uint64_t seed = 7;
  std::size_t count = 100;
  std::string model = "random-walk";
  std::size_t n_min = 5;
  std::size_t n_max = 30;
  std::string output;
};

int cmd_gen(const SynthFlags& sf, std::ostream& out) {
  if (sf.n_min < 1 || sf.n_max < sf.n_min) throw UsageError("need 1 <= --n-min <= --n-max");
  SynthSpec spec;
  spec.seed = sf.seed;
  spec.count = sf.count;
  spec.n_min = sf.n_min;
  spec.n_max = sf.n_max;
  spec.grid = default_synth_grid();
  spec.model = sf.model == "road-grid" ? SynthModel::road_grid : SynthModel::random_walk;
  const auto set = synth_trajectories(spec);
  std::ostringstream csv;
  write_generic_csv(set, csv);
  io::write_file_atomic(sf.output, csv.str());
  out << "trajectories: " << set.trajectories.size() << "\nrecords: " << set.record_count() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reachability summaries and rasters from GPS trajectories"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  unsigned workers = default_workers();
  auto add_workers = [&workers](CLI::App* cmd) {
    cmd->add_option("--workers", workers, "Worker threads (default: $REACH_WORKERS or all cores)")
        ->check(CLI::PositiveNumber);
  };

  // summarize
  InputFlags sum_in;
  ParamFlags sum_p;
  std::string sum_out;
  auto* summarize = app.add_subcommand("summarize", "Build the reachability map and write an RSUM file");
  sum_in.add_to(summarize, true);
  sum_p.add_to(summarize);
  add_workers(summarize);
  summarize->add_option("--output", sum_out, "RSUM output path")->required();

  // export-tensors
  std::string exp_rsum, exp_out, exp_dtype = "f64";
  auto* exporter = app.add_subcommand("export-tensors", "Write dense (N, L, L, 2) summaries as RTEN + .idx");
  exporter->add_option("--rsum", exp_rsum, "RSUM input")->required();
  exporter->add_option("--output", exp_out, "RTEN output path")->required();
  exporter->add_option("--dtype", exp_dtype, "f32 | f64")->check(CLI::IsMember({"f32", "f64"}));

  // rasterize
  InputFlags ras_in;
  RasterFlags rf;
  auto* rasterize = app.add_subcommand("rasterize", "Build an image-like raster window");
  ras_in.add_to(rasterize, false);
  rasterize->add_option("--kind", rf.kind, "crm | hcrm | sc | rnp | embedding")
      ->required()
      ->check(CLI::IsMember({"crm", "hcrm", "sc", "rnp", "embedding"}));
  rasterize->add_option("--window", rf.window, "X,Y[,H,W] north-west tile and extent (default 256x256)")->required();
  rasterize->add_option("--embeddings", rf.embeddings, "REMB file");
  rasterize->add_option("--dr", rf.dr, "Embedding dimension")->check(CLI::PositiveNumber);
  rasterize->add_option("--roads", rf.roads, "File of LINESTRING rows");
  rasterize->add_flag("--log-normalize", rf.log_norm, "Apply ln(1 + x)");
  rasterize->add_option("--output", rf.output, "RTEN output path")->required();

  // preprocess-tdrive
  std::string pre_in, pre_out;
  std::uint32_t pre_zoom = 24;
  auto* preprocess = app.add_subcommand("preprocess-tdrive", "Split T-Drive taxis into per-day trajectories");
  preprocess->add_option("--input", pre_in, "T-Drive file or directory")->required();
  preprocess->add_option("--output", pre_out, "Generic CSV output")->required();
  preprocess->add_option("--zoom", pre_zoom, "Tile zoom level")->check(CLI::Range(1, 30));

  // verify-cke
  std::string ver_rsum;
  InputFlags ver_in;
  ParamFlags ver_p;
  auto* verify = app.add_subcommand("verify-cke", "Check the Chapman-Kolmogorov identity on the channels");
  verify->add_option("--rsum", ver_rsum, "RSUM input");
  ver_in.add_to(verify, false);
  ver_p.add_to(verify);
  add_workers(verify);

  // bench
  BenchFlags bf;
  InputFlags bench_in;
  ParamFlags bench_p;
  auto* bench = app.add_subcommand("bench", "Strong-scaling benchmark of the summary engine");
  bench->add_option("--preset", bf.presets, "Comma list of 2000, 8000, 64000");
  bench->add_option("--workers", bf.workers, "Comma list of worker counts; first is the baseline");
  bench->add_option("--repeats", bf.repeats, "Runs per configuration")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bf.seed, "Synthetic data seed");
  bench->add_option("--output", bf.output, "BenchReport CSV path");
  bench->add_option("--sweep-trajectories", bf.sweep, "Comma list of trajectory counts");
  bench->add_flag("--per-run", bf.per_run, "Also emit one row per run");
  bench_in.add_to(bench, false);
  bench_p.add_to(bench);

  // gen-synthetic
  SynthFlags sf;
  auto* gen = app.add_subcommand("gen-synthetic", "Write a deterministic synthetic trajectory CSV");
  gen->add_option("--seed", sf.seed, "Random seed");
  gen->add_option("--count", sf.count, "Number of trajectories");
  gen->add_option("--model", sf.model, "random-walk | road-grid")->check(CLI::IsMember({"random-walk", "road-grid"}));
  gen->add_option("--n-min", sf.n_min, "Minimum records per trajectory");
  gen->add_option("--n-max", sf.n_max, "Maximum records per trajectory");
  gen->add_option("--output", sf.output, "CSV output path")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kUsageError;
  }

  try {
    if (*summarize) return cmd_summarize(sum_in, sum_p, workers, sum_out, out);
    if (*exporter) return cmd_export(exp_rsum, exp_out, exp_dtype, out);
    if (*rasterize) return cmd_rasterize(ras_in, rf, out);
    if (*preprocess) return cmd_preprocess(pre_in, pre_out, pre_zoom, out);
    if (*verify) return cmd_verify(ver_rsum, ver_in, ver_p, verify->count("--delta-r") > 0, workers, out);
    if (*bench) return cmd_bench(bf, bench_in, bench_p, out);
    if (*gen) return cmd_gen(sf, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ParameterError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kUsageError;
}

}  // namespace reach::cli
