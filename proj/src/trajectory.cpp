#include "reach/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "reach/error.hpp"

namespace reach {

namespace {

constexpr std::size_t kMaxMalformedSamples = 5;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& v) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc{} && ptr == end && std::isfinite(v);
}

template <typename Int>
bool parse_int(std::string_view s, Int& v) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  return !s.empty() && ec == std::errc{} && ptr == end;
}

// Days since 1970-01-01 for a proleptic Gregorian date (H. Hinnant's algorithm).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Lemire-style unbiased bounded draw; mt19937_64 output is fully specified,
// unlike std::uniform_int_distribution, so sets are identical across stdlibs.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

std::uint64_t uniform_in(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi) {
  return lo + uniform_below(rng, hi - lo + 1);
}

struct Grouper {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<TrajectoryRecord>> by_id;

  void add(std::string id, TrajectoryRecord rec) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      order.push_back(id);
      it = by_id.emplace(std::move(id), std::vector<TrajectoryRecord>{}).first;
    }
    it->second.push_back(rec);
  }
};

ParsedSet finish(Grouper& g, const ParseOptions& opts, IngestStats stats) {
  ParsedSet out;
  out.set.zoom = opts.zoom;
  std::int64_t tmin = std::numeric_limits<std::int64_t>::max();
  std::int64_t tmax = std::numeric_limits<std::int64_t>::min();
  for (const auto& id : g.order) {
    auto& recs = g.by_id[id];
    std::stable_sort(recs.begin(), recs.end(),
                     [](const TrajectoryRecord& a, const TrajectoryRecord& b) { return a.t < b.t; });
    Trajectory traj;
    traj.id = id;
    for (const auto& r : recs) {
      if (!traj.records.empty() && traj.records.back().t == r.t) {
        ++stats.duplicate_drops;
        continue;
      }
      traj.records.push_back(r);
      tmin = std::min(tmin, r.t);
      tmax = std::max(tmax, r.t);
    }
    out.set.trajectories.push_back(std::move(traj));
  }
  if (opts.has_window) {
    out.set.t0 = opts.t0;
    out.set.dt = opts.dt;
  } else if (tmin <= tmax) {
    out.set.t0 = tmin;
    out.set.dt = tmax - tmin;
  }
  out.stats = std::move(stats);
  return out;
}

struct LineParser {
  const ParseOptions& opts;
  Grouper grouper;
  IngestStats stats;
  bool first_line = true;

  void feed(std::string_view raw) {
    const auto line = trim(raw);
    if (line.empty()) return;
    ++stats.lines;
    const auto fields = split_fields(line);
    const bool is_first = first_line;
    first_line = false;

    if (opts.format == CsvFormat::generic && is_first && fields.size() >= 2) {
      double probe;
      if (!parse_double(fields[1], probe)) {
        ++stats.header_lines;
        return;
      }
    }

    std::string id;
    std::int64_t t = 0;
    double lat = 0, lon = 0;
    bool ok = fields.size() == 4 && !fields[0].empty();
    if (ok && opts.format == CsvFormat::generic) {
      double tv;
      ok = parse_double(fields[1], tv) && tv >= 0 && tv < 9.2e18 && parse_double(fields[2], lat) &&
           parse_double(fields[3], lon);
      t = static_cast<std::int64_t>(tv);
    } else if (ok) {
      ok = parse_local_datetime(fields[1], kTdriveUtcOffset, t) && t >= 0 &&
           parse_double(fields[2], lon) && parse_double(fields[3], lat);
    }
    LatLon pos;
    if (ok) {
      try {
        pos = LatLon::make(lat, lon);
      } catch (const InvalidCoordinate&) {
        ok = false;
      }
    }
    if (!ok) {
      ++stats.malformed;
      if (stats.malformed_samples.size() < kMaxMalformedSamples) {
        stats.malformed_samples.push_back(stats.lines);
      }
      return;
    }
    if (opts.has_window && (t < opts.t0 || t > opts.t0 + opts.dt)) {
      ++stats.out_of_window;
      return;
    }
    id.assign(fields[0]);
    grouper.add(std::move(id), TrajectoryRecord{latlon_to_tile(pos, opts.zoom), t, pos});
  }

  void feed_stream(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) feed(line);
    if (in.bad()) throw IoError("read error on trajectory stream");
  }

  ParsedSet result() {
    const std::size_t data_lines = stats.lines - stats.header_lines;
    if (data_lines > 0 && stats.malformed * 2 > data_lines) {
      std::ostringstream msg;
      msg << stats.malformed << " of " << data_lines << " lines malformed; e.g. lines";
      for (auto n : stats.malformed_samples) msg << ' ' << n;
      throw FormatError(msg.str());
    }
    return finish(grouper, opts, std::move(stats));
  }
};

void check_parse_zoom(std::uint32_t q) {
  if (q < 1 || q > kMaxZoom) throw ParameterError("zoom must be in [1, 30]");
}

}  // namespace

std::size_t TrajectorySet::record_count() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.size();
  return n;
}

bool parse_local_datetime(std::string_view text, std::int64_t utc_offset, std::int64_t& epoch) {
  // YYYY-MM-DD HH:MM:SS
  if (text.size() != 19 || text[4] != '-' || text[7] != '-' || text[10] != ' ' || text[13] != ':' ||
      text[16] != ':') {
    return false;
  }
  int y, mo, d, h, mi, s;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) ||
      !parse_int(text.substr(8, 2), d) || !parse_int(text.substr(11, 2), h) ||
      !parse_int(text.substr(14, 2), mi) || !parse_int(text.substr(17, 2), s)) {
    return false;
  }
  if (mo < 1 || mo > 12 || d < 1 || h > 23 || mi > 59 || s > 59 || h < 0 || mi < 0 || s < 0) return false;
  static constexpr int kMonthDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  if (d > kMonthDays[mo - 1] + (mo == 2 && leap ? 1 : 0)) return false;
  const auto days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
  epoch = days * 86400 + h * 3600 + mi * 60 + s - utc_offset;
  return true;
}

std::string local_day_stamp(std::int64_t t, std::int64_t utc_offset) {
  std::int64_t y;
  unsigned m, d;
  civil_from_days(floor_div(t + utc_offset, 86400), y, m, d);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%04lld%02u%02u", static_cast<long long>(y), m, d);
  return buf;
}

ParsedSet parse_csv(std::istream& in, const ParseOptions& opts) {
  check_parse_zoom(opts.zoom);
  LineParser p{opts, {}, {}};
  p.feed_stream(in);
  return p.result();
}

ParsedSet parse_csv_file(const std::string& path, const ParseOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_csv(in, opts);
}

ParsedSet parse_csv_path(const std::string& path, const ParseOptions& opts) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(path, ec)) return parse_csv_file(path, opts);
  check_parse_zoom(opts.zoom);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  LineParser p{opts, {}, {}};
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw IoError("cannot open " + f.string());
    p.first_line = true;
    p.feed_stream(in);
  }
  return p.result();
}

void write_generic_csv(const TrajectorySet& set, std::ostream& out) {
  char buf[64];
  auto put = [&](double v) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, ptr - buf);
  };
  for (const auto& traj : set.trajectories) {
    for (const auto& r : traj.records) {
      out << traj.id << ',' << r.t << ',';
      put(r.pos.lat);
      out << ',';
      put(r.pos.lon);
      out << '\n';
    }
  }
  if (!out) throw IoError("write error on CSV output");
}

TrajectorySet preprocess_tdrive(const TrajectorySet& set) {
  TrajectorySet out;
  out.t0 = set.t0;
  out.dt = set.dt;
  out.zoom = set.zoom;
  for (const auto& traj : set.trajectories) {
    Trajectory* current = nullptr;
    std::int64_t current_day = 0;
    for (const auto& r : traj.records) {
      const auto day = floor_div(r.t + kTdriveUtcOffset, 86400);
      if (current == nullptr || day != current_day) {
        out.trajectories.push_back(Trajectory{traj.id + "_" + local_day_stamp(r.t, kTdriveUtcOffset), {}, {}});
        current = &out.trajectories.back();
        current_day = day;
      }
      current->records.push_back(r);
    }
  }
  return out;
}

RecordPredicate keep_all() {
  return [](const Trajectory&, std::size_t, const TrajectoryRecord*) { return true; };
}

RecordPredicate max_speed_predicate(double max_mps) {
  return [max_mps](const Trajectory& traj, std::size_t k, const TrajectoryRecord* prev) {
    if (prev == nullptr) return true;
    const auto& r = traj.records[k];
    const double dt = static_cast<double>(r.t - prev->t);
    if (dt <= 0) return false;
    return haversine_m(prev->pos, r.pos) / dt <= max_mps;
  };
}

TrajectorySet modality_filter(const TrajectorySet& set, const RecordPredicate& keep) {
  TrajectorySet out;
  out.t0 = set.t0;
  out.dt = set.dt;
  out.zoom = set.zoom;
  for (const auto& traj : set.trajectories) {
    Trajectory kept{traj.id, {}, {}};
    for (std::size_t k = 0; k < traj.records.size(); ++k) {
      const TrajectoryRecord* prev = kept.records.empty() ? nullptr : &kept.records.back();
      if (keep(traj, k, prev)) kept.records.push_back(traj.records[k]);
    }
    if (kept.records.empty()) continue;
    if (!traj.cumulative_m.empty()) compute_cumulative_distances(kept);
    out.trajectories.push_back(std::move(kept));
  }
  return out;
}

std::vector<double> cumulative_distances(const std::vector<TrajectoryRecord>& records) {
  std::vector<double> cum(records.size(), 0.0);
  for (std::size_t k = 1; k < records.size(); ++k) {
    const double step = records[k].tile == records[k - 1].tile
                            ? 0.0
                            : haversine_m(tile_centroid(records[k - 1].tile), tile_centroid(records[k].tile));
    cum[k] = cum[k - 1] + step;
  }
  return cum;
}

void compute_cumulative_distances(Trajectory& traj) { traj.cumulative_m = cumulative_distances(traj.records); }

TileWindow default_synth_grid() {
  const auto c = latlon_to_tile(LatLon{39.9042, 116.4074}, 24);
  return TileWindow{24, c.x - 1024, c.y - 1024, 2048, 2048};
}

TileWindow bench_grid() {
  const auto c = latlon_to_tile(LatLon{39.9042, 116.4074}, 24);
  return TileWindow{24, c.x - 256, c.y - 256, 512, 512};
}

namespace {

// Records of one synthetic trajectory on the road lattice: moves one tile per
// step along a lattice line and may turn at intersections.
void walk_road_grid(std::mt19937_64& rng, const SynthSpec& spec, std::size_t n, std::vector<TileCoord>& tiles) {
  const auto& g = spec.grid;
  const std::uint32_t sp = spec.lattice_spacing;
  const std::uint32_t lines_x = (g.w - 1) / sp + 1;
  const std::uint32_t lines_y = (g.h - 1) / sp + 1;
  std::int64_t x = g.x0 + static_cast<std::int64_t>(uniform_below(rng, lines_x)) * sp;
  std::int64_t y = g.y0 + static_cast<std::int64_t>(uniform_below(rng, lines_y)) * sp;
  static constexpr int kDirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  int dir = static_cast<int>(uniform_below(rng, 4));
  for (std::size_t k = 0; k < n; ++k) {
    tiles.push_back(TileCoord{g.q, static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y)});
    // stop in place occasionally (traffic light, pickup)
    if (uniform_below(rng, 10) == 0) continue;
    const bool at_cross = (x - g.x0) % sp == 0 && (y - g.y0) % sp == 0;
    if (at_cross && uniform_below(rng, 3) == 0) dir = static_cast<int>(uniform_below(rng, 4));
    for (int attempt = 0; attempt < 4; ++attempt) {
      const std::int64_t nx = x + kDirs[dir][0];
      const std::int64_t ny = y + kDirs[dir][1];
      if (nx >= g.x0 && nx < std::int64_t{g.x0} + g.w && ny >= g.y0 && ny < std::int64_t{g.y0} + g.h) {
        x = nx;
        y = ny;
        break;
      }
      dir ^= 1;  // reverse along the same axis
      if (!at_cross) continue;
      dir = static_cast<int>(uniform_below(rng, 4));
    }
  }
}

void walk_random(std::mt19937_64& rng, const SynthSpec& spec, std::size_t n, std::vector<TileCoord>& tiles) {
  const auto& g = spec.grid;
  std::int64_t x = g.x0 + static_cast<std::int64_t>(uniform_below(rng, g.w));
  std::int64_t y = g.y0 + static_cast<std::int64_t>(uniform_below(rng, g.h));
  for (std::size_t k = 0; k < n; ++k) {
    tiles.push_back(TileCoord{g.q, static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y)});
    x = std::clamp<std::int64_t>(x + static_cast<std::int64_t>(uniform_below(rng, 5)) - 2, g.x0,
                                 std::int64_t{g.x0} + g.w - 1);
    y = std::clamp<std::int64_t>(y + static_cast<std::int64_t>(uniform_below(rng, 5)) - 2, g.y0,
                                 std::int64_t{g.y0} + g.h - 1);
  }
}

}  // namespace

TrajectorySet synth_trajectories(const SynthSpec& spec) {
  const auto& g = spec.grid;
  if (g.w == 0 || g.h == 0) throw ParameterError("synthetic grid window is empty");
  if (g.q < 1 || g.q > kMaxZoom || std::uint64_t{g.x0} + g.w > tiles_per_axis(g.q) ||
      std::uint64_t{g.y0} + g.h > tiles_per_axis(g.q)) {
    throw ParameterError("synthetic grid window outside the zoom grid");
  }
  if (spec.n_min < 1 || spec.n_max < spec.n_min) throw ParameterError("bad trajectory length range");
  if (spec.model == SynthModel::road_grid && spec.lattice_spacing < 1) {
    throw ParameterError("lattice spacing must be positive");
  }

  std::mt19937_64 rng(spec.seed);
  TrajectorySet set;
  set.zoom = g.q;
  set.t0 = spec.t0;
  set.dt = spec.dt;
  std::vector<TileCoord> tiles;
  for (std::size_t i = 0; i < spec.count; ++i) {
    const auto n = static_cast<std::size_t>(uniform_in(rng, spec.n_min, spec.n_max));
    tiles.clear();
    if (spec.model == SynthModel::road_grid) {
      walk_road_grid(rng, spec, n, tiles);
    } else {
      walk_random(rng, spec, n, tiles);
    }
    // keep the whole trajectory inside [t0, t0 + dt]
    const std::int64_t max_span = static_cast<std::int64_t>(n) * 15;
    const std::int64_t start_room = std::max<std::int64_t>(0, spec.dt - max_span);
    std::int64_t t = spec.t0 + static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(start_room) + 1));

    Trajectory traj;
    traj.id = "syn" + std::to_string(i);
    traj.records.reserve(n);
    for (const auto& tile : tiles) {
      traj.records.push_back(TrajectoryRecord{tile, t, tile_centroid(tile)});
      t += static_cast<std::int64_t>(uniform_in(rng, 1, 15));
    }
    set.trajectories.push_back(std::move(traj));
  }
  return set;
}

SynthSpec bench_preset(std::size_t trips, std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;
  spec.count = trips;
  spec.n_min = 20;
  spec.n_max = 80;
  spec.grid = bench_grid();
  spec.model = SynthModel::road_grid;
  return spec;
}

bool on_lattice(const SynthSpec& spec, const TileCoord& t) {
  const auto& g = spec.grid;
  if (!g.contains(t)) return false;
  return (t.x - g.x0) % spec.lattice_spacing == 0 || (t.y - g.y0) % spec.lattice_spacing == 0;
}

std::uint64_t digest(const TrajectorySet& set) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& traj : set.trajectories) {
    mix(traj.id.data(), traj.id.size());
    const std::uint64_t n = traj.records.size();
    mix(&n, sizeof n);
    for (const auto& r : traj.records) {
      mix(&r.tile.q, sizeof r.tile.q);
      mix(&r.tile.x, sizeof r.tile.x);
      mix(&r.tile.y, sizeof r.tile.y);
      mix(&r.t, sizeof r.t);
    }
  }
  return h;
}

}  // namespace reach
