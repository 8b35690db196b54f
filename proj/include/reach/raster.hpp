#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reach/geodesy.hpp"
#include "reach/trajectory.hpp"

namespace reach {

inline constexpr std::uint32_t kDefaultRasterSide = 256;
inline constexpr std::uint32_t kHeadingBuckets = 12;
inline constexpr std::uint32_t kSpeedBuckets = 14;
inline constexpr double kMpsToMph = 2.2369362921;

/// h x w block of tiles with c values per pixel, layout [row][col][channel].
/// Pixel (row, col) is tile (origin.x + col, origin.y + row).
struct RasterWindow {
  TileCoord origin;
  std::uint32_t h = 0;
  std::uint32_t w = 0;
  std::uint32_t c = 0;
  std::vector<double> data;
  std::vector<std::string> channel_names;

  static RasterWindow zeros(const TileCoord& origin, std::uint32_t h, std::uint32_t w,
                            std::vector<std::string> channel_names);

  std::size_t offset(std::uint32_t row, std::uint32_t col, std::uint32_t ch) const {
    return (static_cast<std::size_t>(row) * w + col) * c + ch;
  }
  double at(std::uint32_t row, std::uint32_t col, std::uint32_t ch = 0) const { return data[offset(row, col, ch)]; }
  double& at(std::uint32_t row, std::uint32_t col, std::uint32_t ch = 0) { return data[offset(row, col, ch)]; }

  /// Maps a tile to its pixel; false when outside the window.
  bool pixel_of(const TileCoord& t, std::uint32_t& row, std::uint32_t& col) const;

  friend bool operator==(const RasterWindow&, const RasterWindow&) = default;
};

/// Geometry of a window to build: north-west tile plus extent.
struct WindowSpec {
  TileCoord origin;
  std::uint32_t h = kDefaultRasterSide;
  std::uint32_t w = kDefaultRasterSide;
};

/// 30-degree heading bucket, 0 = [0, 30) from true north, clockwise.
std::uint32_t heading_bucket(double bearing_deg);
/// 5 mph speed bucket; speeds >= 65 mph land in the last bucket.
std::uint32_t speed_bucket(double mph);

/// Record counts per tile.
RasterWindow crm(const TrajectorySet& set, const WindowSpec& win);
/// Record counts bucketed by heading from the previous record. First records
/// and records in the same tile as their predecessor are skipped.
RasterWindow hcrm(const TrajectorySet& set, const WindowSpec& win);
/// Record counts bucketed by speed from the previous record; first records skipped.
RasterWindow sc(const TrajectorySet& set, const WindowSpec& win);

using Polyline = std::vector<LatLon>;

/// Parses one `LINESTRING(lon lat, lon lat, ...)` per non-blank line.
std::vector<Polyline> parse_linestrings(std::istream& in);
std::vector<Polyline> read_roads(const std::string& path);

/// Every tile touched by the straight grid segment a -> b (supercover).
std::vector<std::pair<std::int64_t, std::int64_t>> supercover(GridPoint a, GridPoint b);

/// Binary road-network presence.
RasterWindow rnp(std::span<const Polyline> roads, const WindowSpec& win);

struct EmbeddingRow {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::vector<float> values;
  friend bool operator==(const EmbeddingRow&, const EmbeddingRow&) = default;
};

/// Contents of a REMB file: d_R-dimensional vectors keyed by tile.
struct EmbeddingTable {
  std::uint32_t d_r = 0;
  std::vector<EmbeddingRow> rows;
  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;
};

std::string encode_remb(const EmbeddingTable& table);
EmbeddingTable decode_remb(std::string_view bytes);
void write_remb(const EmbeddingTable& table, const std::string& path);
EmbeddingTable read_remb(const std::string& path);

/// Pixels of active tiles take their embedding; all other pixels are zero.
/// Throws ParameterError when table.d_r != d_r.
RasterWindow embedding_raster(const EmbeddingTable& table, const WindowSpec& win, std::uint32_t d_r);

/// Elementwise ln(1 + x). Throws DomainError on negative values.
RasterWindow log_normalize(const RasterWindow& rw);
/// Elementwise exp(y) - 1.
RasterWindow log_denormalize(const RasterWindow& rw);

/// Concatenates channels in argument order. Throws ParameterError when the
/// windows disagree on origin, zoom or extent.
RasterWindow fuse_channels(std::span<const RasterWindow> parts);

/// Channels [first, first + count).
RasterWindow slice_channels(const RasterWindow& rw, std::uint32_t first, std::uint32_t count);

/// RTEN file with dims (h, w, c) and a `<path>.meta` sidecar holding the
/// origin and channel names.
void write_raster(const RasterWindow& rw, const std::string& path);
RasterWindow read_raster(const std::string& path);

}  // namespace reach
