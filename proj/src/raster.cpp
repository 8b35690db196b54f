#include "reach/raster.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <set>
#include <sstream>

#include "reach/binary_io.hpp"
#include "reach/error.hpp"
#include "reach/tensor_io.hpp"

namespace reach {

RasterWindow RasterWindow::zeros(const TileCoord& origin, std::uint32_t h, std::uint32_t w,
                                 std::vector<std::string> channel_names) {
  if (h == 0 || w == 0) throw ParameterError("raster window must be at least 1 x 1");
  if (!origin.valid() || std::uint64_t{origin.x} + w > tiles_per_axis(origin.q) ||
      std::uint64_t{origin.y} + h > tiles_per_axis(origin.q)) {
    throw ParameterError("raster window extends outside the zoom grid");
  }
  RasterWindow rw;
  rw.origin = origin;
  rw.h = h;
  rw.w = w;
  rw.c = static_cast<std::uint32_t>(channel_names.size());
  rw.channel_names = std::move(channel_names);
  rw.data.assign(static_cast<std::size_t>(h) * w * rw.c, 0.0);
  return rw;
}

bool RasterWindow::pixel_of(const TileCoord& t, std::uint32_t& row, std::uint32_t& col) const {
  if (t.q != origin.q || t.x < origin.x || t.y < origin.y) return false;
  const std::uint32_t dx = t.x - origin.x;
  const std::uint32_t dy = t.y - origin.y;
  if (dx >= w || dy >= h) return false;
  row = dy;
  col = dx;
  return true;
}

std::uint32_t heading_bucket(double bearing_deg) {
  double b = std::fmod(bearing_deg, 360.0);
  if (b < 0) b += 360.0;
  return std::min<std::uint32_t>(kHeadingBuckets - 1, static_cast<std::uint32_t>(b / 30.0));
}

std::uint32_t speed_bucket(double mph) {
  if (!(mph > 0)) return 0;
  return static_cast<std::uint32_t>(std::min(13.0, std::floor(mph / 5.0)));
}

namespace {

void check_zoom(const TrajectorySet& set, const WindowSpec& win) {
  if (set.zoom != win.origin.q) {
    throw ParameterError("window zoom " + std::to_string(win.origin.q) + " differs from trajectory zoom " +
                         std::to_string(set.zoom));
  }
}

std::vector<std::string> numbered(const std::string& prefix, std::uint32_t n, std::uint32_t scale) {
  std::vector<std::string> out;
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i * scale));
  return out;
}

// Calls fn(prev, cur, pixel row, pixel col) for every record after the first
// whose tile falls inside the window.
template <typename Fn>
void for_each_step_in(const TrajectorySet& set, const RasterWindow& rw, Fn&& fn) {
  for (const auto& traj : set.trajectories) {
    for (std::size_t k = 1; k < traj.records.size(); ++k) {
      std::uint32_t row, col;
      if (!rw.pixel_of(traj.records[k].tile, row, col)) continue;
      fn(traj.records[k - 1], traj.records[k], row, col);
    }
  }
}

}  // namespace

RasterWindow crm(const TrajectorySet& set, const WindowSpec& win) {
  check_zoom(set, win);
  auto rw = RasterWindow::zeros(win.origin, win.h, win.w, {"crm"});
  for (const auto& traj : set.trajectories) {
    for (const auto& r : traj.records) {
      std::uint32_t row, col;
      if (rw.pixel_of(r.tile, row, col)) rw.at(row, col) += 1.0;
    }
  }
  return rw;
}

RasterWindow hcrm(const TrajectorySet& set, const WindowSpec& win) {
  check_zoom(set, win);
  auto rw = RasterWindow::zeros(win.origin, win.h, win.w, numbered("heading_", kHeadingBuckets, 30));
  for_each_step_in(set, rw, [&rw](const TrajectoryRecord& prev, const TrajectoryRecord& cur, auto row, auto col) {
    if (prev.tile == cur.tile) return;
    const double b = initial_bearing_deg(tile_centroid(prev.tile), tile_centroid(cur.tile));
    rw.at(row, col, heading_bucket(b)) += 1.0;
  });
  return rw;
}

RasterWindow sc(const TrajectorySet& set, const WindowSpec& win) {
  check_zoom(set, win);
  auto names = numbered("speed_", kSpeedBuckets, 5);
  names.back() += "plus";
  auto rw = RasterWindow::zeros(win.origin, win.h, win.w, std::move(names));
  for_each_step_in(set, rw, [&rw](const TrajectoryRecord& prev, const TrajectoryRecord& cur, auto row, auto col) {
    const double dt = static_cast<double>(cur.t - prev.t);
    double mph = 0.0;
    if (prev.tile != cur.tile) {
      mph = haversine_m(tile_centroid(prev.tile), tile_centroid(cur.tile)) / dt * kMpsToMph;
    }
    rw.at(row, col, speed_bucket(mph)) += 1.0;
  });
  return rw;
}

// --- roads ----------------------------------------------------------------

std::vector<Polyline> parse_linestrings(std::istream& in) {
  std::vector<Polyline> out;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&lineno](const std::string& why) {
    throw FormatError("road line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s(line);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    if (s.empty() || s.front() == '#') continue;

    constexpr std::string_view kw = "LINESTRING";
    if (s.size() < kw.size()) fail("expected LINESTRING");
    for (std::size_t i = 0; i < kw.size(); ++i) {
      if (std::toupper(static_cast<unsigned char>(s[i])) != kw[i]) fail("expected LINESTRING");
    }
    s.remove_prefix(kw.size());
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    if (s.size() < 2 || s.front() != '(' || s.back() != ')') fail("missing parentheses");
    s = s.substr(1, s.size() - 2);

    Polyline poly;
    std::size_t start = 0;
    while (start <= s.size()) {
      auto end = s.find(',', start);
      if (end == std::string_view::npos) end = s.size();
      std::string pair(s.substr(start, end - start));
      std::istringstream ps(pair);
      double lon, lat;
      std::string extra;
      if (!(ps >> lon >> lat) || (ps >> extra)) fail("bad coordinate pair '" + pair + "'");
      try {
        poly.push_back(LatLon::make(lat, lon));
      } catch (const InvalidCoordinate& e) {
        fail(e.what());
      }
      start = end + 1;
    }
    if (poly.empty()) fail("empty LINESTRING");
    out.push_back(std::move(poly));
  }
  return out;
}

std::vector<Polyline> read_roads(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_linestrings(in);
}

std::vector<std::pair<std::int64_t, std::int64_t>> supercover(GridPoint a, GridPoint b) {
  std::vector<std::pair<std::int64_t, std::int64_t>> cells;
  std::int64_t cx = static_cast<std::int64_t>(std::floor(a.x));
  std::int64_t cy = static_cast<std::int64_t>(std::floor(a.y));
  const std::int64_t ex = static_cast<std::int64_t>(std::floor(b.x));
  const std::int64_t ey = static_cast<std::int64_t>(std::floor(b.y));
  cells.emplace_back(cx, cy);

  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const int step_x = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int step_y = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double delta_x = step_x != 0 ? 1.0 / std::abs(dx) : inf;
  const double delta_y = step_y != 0 ? 1.0 / std::abs(dy) : inf;
  double t_x = step_x > 0 ? (cx + 1 - a.x) / dx : (step_x < 0 ? (a.x - cx) / -dx : inf);
  double t_y = step_y > 0 ? (cy + 1 - a.y) / dy : (step_y < 0 ? (a.y - cy) / -dy : inf);

  // every step moves one axis toward the end cell, so this bounds the walk
  std::int64_t budget = std::abs(ex - cx) + std::abs(ey - cy);
  while ((cx != ex || cy != ey) && budget-- > 0) {
    if (t_x < t_y) {
      cx += step_x;
      t_x += delta_x;
    } else if (t_y < t_x) {
      cy += step_y;
      t_y += delta_y;
    } else {
      // passing exactly through a corner touches both side cells
      cells.emplace_back(cx + step_x, cy);
      cells.emplace_back(cx, cy + step_y);
      cx += step_x;
      cy += step_y;
      t_x += delta_x;
      t_y += delta_y;
      --budget;
    }
    cells.emplace_back(cx, cy);
  }
  if (cx != ex || cy != ey) cells.emplace_back(ex, ey);
  return cells;
}

RasterWindow rnp(std::span<const Polyline> roads, const WindowSpec& win) {
  auto rw = RasterWindow::zeros(win.origin, win.h, win.w, {"rnp"});
  const std::int64_t x0 = win.origin.x, y0 = win.origin.y;
  auto mark = [&](std::int64_t x, std::int64_t y) {
    if (x < x0 || y < y0 || x - x0 >= win.w || y - y0 >= win.h) return;
    rw.at(static_cast<std::uint32_t>(y - y0), static_cast<std::uint32_t>(x - x0)) = 1.0;
  };
  for (const auto& poly : roads) {
    if (poly.size() == 1) {
      const auto g = project_to_grid(poly[0], win.origin.q);
      mark(static_cast<std::int64_t>(std::floor(g.x)), static_cast<std::int64_t>(std::floor(g.y)));
      continue;
    }
    for (std::size_t i = 1; i < poly.size(); ++i) {
      const auto a = project_to_grid(poly[i - 1], win.origin.q);
      const auto b = project_to_grid(poly[i], win.origin.q);
      // skip segments whose bounding box misses the window
      if (std::max(a.x, b.x) < x0 || std::min(a.x, b.x) >= x0 + win.w || std::max(a.y, b.y) < y0 ||
          std::min(a.y, b.y) >= y0 + win.h) {
        continue;
      }
      for (const auto& [x, y] : supercover(a, b)) mark(x, y);
    }
  }
  return rw;
}

// --- embeddings -------------------------------------------------------------

namespace {
constexpr std::string_view kRembMagic = "REMB1";
}

std::string encode_remb(const EmbeddingTable& table) {
  io::ByteWriter w;
  w.bytes(kRembMagic);
  w.u32(table.d_r);
  w.u64(table.rows.size());
  for (const auto& row : table.rows) {
    if (row.values.size() != table.d_r) throw ParameterError("embedding row width differs from d_R");
    w.u32(row.x);
    w.u32(row.y);
    for (float v : row.values) w.f32(v);
  }
  return w.release();
}

EmbeddingTable decode_remb(std::string_view bytes) {
  io::ByteReader r(bytes, "REMB");
  const auto magic = r.bytes(kRembMagic.size());
  if (magic.substr(0, 4) != kRembMagic.substr(0, 4)) r.fail("bad magic", 0);
  if (magic != kRembMagic) r.fail("unsupported version '" + std::string(magic.substr(4)) + "'", 4);
  EmbeddingTable t;
  const auto d_at = r.offset();
  t.d_r = r.u32();
  if (t.d_r == 0) r.fail("d_R must be positive", d_at);
  const auto count_at = r.offset();
  const auto count = r.u64();
  const std::size_t row_bytes = 8 + std::size_t{t.d_r} * 4;
  if (count != r.remaining() / row_bytes || r.remaining() % row_bytes != 0) {
    r.fail("row count " + std::to_string(count) + " does not match payload size", count_at);
  }
  t.rows.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    EmbeddingRow row;
    row.x = r.u32();
    row.y = r.u32();
    row.values.resize(t.d_r);
    for (auto& v : row.values) v = r.f32();
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_remb(const EmbeddingTable& table, const std::string& path) {
  io::write_file_atomic(path, encode_remb(table));
}

EmbeddingTable read_remb(const std::string& path) { return decode_remb(io::read_file(path)); }

RasterWindow embedding_raster(const EmbeddingTable& table, const WindowSpec& win, std::uint32_t d_r) {
  if (table.d_r != d_r) {
    throw ParameterError("embedding file has d_R = " + std::to_string(table.d_r) + ", expected " +
                         std::to_string(d_r));
  }
  auto rw = RasterWindow::zeros(win.origin, win.h, win.w, numbered("emb_", d_r, 1));
  for (const auto& row : table.rows) {
    std::uint32_t r, c;
    if (!rw.pixel_of(TileCoord{win.origin.q, row.x, row.y}, r, c)) continue;
    for (std::uint32_t k = 0; k < d_r; ++k) rw.at(r, c, k) = row.values[k];
  }
  return rw;
}

// --- normalization / fusion -------------------------------------------------

RasterWindow log_normalize(const RasterWindow& rw) {
  RasterWindow out = rw;
  for (auto& v : out.data) {
    if (v < 0 || std::isnan(v)) throw DomainError("log_normalize requires non-negative input");
    v = std::log1p(v);
  }
  return out;
}

RasterWindow log_denormalize(const RasterWindow& rw) {
  RasterWindow out = rw;
  for (auto& v : out.data) v = std::expm1(v);
  return out;
}

RasterWindow fuse_channels(std::span<const RasterWindow> parts) {
  if (parts.empty()) throw ParameterError("fuse_channels needs at least one raster");
  const auto& first = parts.front();
  std::vector<std::string> names;
  for (const auto& p : parts) {
    if (p.origin != first.origin || p.h != first.h || p.w != first.w) {
      throw ParameterError("fuse_channels: raster geometry mismatch");
    }
    names.insert(names.end(), p.channel_names.begin(), p.channel_names.end());
  }
  auto out = RasterWindow::zeros(first.origin, first.h, first.w, std::move(names));
  std::size_t dst = 0;
  const std::size_t pixels = static_cast<std::size_t>(first.h) * first.w;
  for (std::size_t px = 0; px < pixels; ++px) {
    for (const auto& p : parts) {
      const auto* src = p.data.data() + px * p.c;
      std::copy(src, src + p.c, out.data.begin() + static_cast<std::ptrdiff_t>(dst));
      dst += p.c;
    }
  }
  return out;
}

RasterWindow slice_channels(const RasterWindow& rw, std::uint32_t first, std::uint32_t count) {
  if (std::uint64_t{first} + count > rw.c) throw ParameterError("channel slice out of range");
  std::vector<std::string> names(rw.channel_names.begin() + first, rw.channel_names.begin() + first + count);
  auto out = RasterWindow::zeros(rw.origin, rw.h, rw.w, std::move(names));
  const std::size_t pixels = static_cast<std::size_t>(rw.h) * rw.w;
  for (std::size_t px = 0; px < pixels; ++px) {
    for (std::uint32_t k = 0; k < count; ++k) out.data[px * count + k] = rw.data[px * rw.c + first + k];
  }
  return out;
}

void write_raster(const RasterWindow& rw, const std::string& path) {
  std::ostringstream meta;
  meta << "origin," << rw.origin.x << ',' << rw.origin.y << ',' << rw.origin.q << '\n';
  meta << "channels";
  for (const auto& n : rw.channel_names) meta << ',' << n;
  meta << '\n';
  io::write_file_atomic(path + ".meta", meta.str());
  write_rten(Tensor{DType::f64, {rw.h, rw.w, rw.c}, rw.data}, path);
}

RasterWindow read_raster(const std::string& path) {
  const auto t = read_rten(path);
  if (t.dims.size() != 3) throw FormatError(path + ": raster tensor must have 3 dims");
  std::istringstream meta(io::read_file(path + ".meta"));
  std::string origin_line, channels_line;
  std::getline(meta, origin_line);
  std::getline(meta, channels_line);
  unsigned long x = 0, y = 0, q = 0;
  if (std::sscanf(origin_line.c_str(), "origin,%lu,%lu,%lu", &x, &y, &q) != 3) {
    throw FormatError(path + ".meta: bad origin line");
  }
  if (channels_line.rfind("channels", 0) != 0) throw FormatError(path + ".meta: bad channels line");
  std::vector<std::string> names;
  std::istringstream cs(channels_line.substr(8));
  std::string name;
  std::getline(cs, name, ',');  // leading empty field
  while (std::getline(cs, name, ',')) names.push_back(name);
  if (names.size() != t.dims[2]) throw FormatError(path + ".meta: channel count differs from tensor");

  auto rw = RasterWindow::zeros(TileCoord{static_cast<std::uint32_t>(q), static_cast<std::uint32_t>(x),
                                          static_cast<std::uint32_t>(y)},
                                t.dims[0], t.dims[1], std::move(names));
  rw.data = t.values;
  return rw;
}

}  // namespace reach
